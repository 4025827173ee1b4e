#pragma once

#include <cstdint>
#include <vector>

#include "funfuse/basis.hpp"
#include "funfuse/dataset.hpp"
#include "funfuse/ecm.hpp"

namespace funfuse {

/// Hyperparameter grid for K-fold cross-validation with the three-stage
/// m-standard-error rule: stage 1 picks the smallest number of clusters
/// per (lambda_s, lambda_l) within m1 standard errors of the best, stage
/// 2 the largest lambda_s per lambda_l within m2, stage 3 the largest
/// lambda_l within m3. Parsimony means small G and large penalties.
struct SelectionGrid {
  std::vector<int> g_values;
  std::vector<double> lambda_s_values;
  std::vector<double> lambda_l_values;
  int k_folds = 5;
  double m1 = 0.5;
  double m2 = 0.0;
  double m3 = 0.5;
  std::uint64_t seed = 0;  // fold assignment seed, shared by all cells

  void validate() const;
};

struct CvScore {
  double mean = 0.0;    // average of per-fold held-out log-likelihood sums
  double se = 0.0;      // sample standard deviation of fold scores / sqrt(K)
  std::vector<double> per_fold;
};

struct CvCell {
  int g = 1;
  double lambda_s = 0.0;
  double lambda_l = 0.0;
  CvScore score;
};

struct SelectionResult {
  std::vector<CvCell> cv_table;  // lex order: G, then lambda_s, then lambda_l
  int chosen_g = 1;
  double chosen_lambda_s = 0.0;
  double chosen_lambda_l = 0.0;
  std::vector<int> stage1_g;             // per (lambda_s, lambda_l) cell
  std::vector<double> stage2_lambda_s;   // per lambda_l
  double stage3_lambda_l = 0.0;
  SelectionGrid grid;  // echo
};

/// Deterministic fold assignment: a Fisher-Yates shuffle of the curve
/// indices driven only by (n, k, seed), dealt round-robin into k folds
/// of equal size up to one.
std::vector<std::vector<int>> make_folds(int n_curves, int k_folds,
                                         std::uint64_t seed);

/// K-fold cross-validated held-out log-likelihood of one configuration:
/// for each fold, fit on the complement and sum the mixture log-density
/// of the held-out curves. The reported mean is the per-fold average.
CvScore cv_score(const Dataset& dataset, const BSplineBasis& basis,
                 const FitConfig& config, int k_folds, std::uint64_t seed);

/// The staged m-standard-error rule applied to a precomputed table; the
/// table must be in the lex cell order produced by select_model.
struct StagedChoice {
  int g = 1;
  double lambda_s = 0.0;
  double lambda_l = 0.0;
  std::vector<int> stage1_g;
  std::vector<double> stage2_lambda_s;
};
StagedChoice staged_choice(const std::vector<CvCell>& table,
                           const SelectionGrid& grid);

/// Evaluates the CV score of every grid cell (in parallel when
/// n_threads != 1; results are independent of the parallelism degree)
/// and applies the staged rule. Fold assignment uses grid.seed for every
/// cell and fits reuse base_config.seed, so cells are comparable.
SelectionResult select_model(const Dataset& dataset, const BSplineBasis& basis,
                             const SelectionGrid& grid,
                             const FitConfig& base_config, int n_threads = 0);

}  // namespace funfuse
