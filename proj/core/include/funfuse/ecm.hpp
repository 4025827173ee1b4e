#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "funfuse/basis.hpp"
#include "funfuse/dataset.hpp"
#include "funfuse/mixture.hpp"

namespace funfuse {

/// Configuration of the penalized ECM fit.
struct FitConfig {
  int n_clusters = 2;
  double lambda_fuse = 0.0;    // pairwise fusion penalty weight
  double lambda_smooth = 0.0;  // roughness penalty weight
  int deriv_order = 2;         // derivative order s of the roughness penalty
  int max_ecm_iters = 200;
  double ecm_tol = 1e-6;  // relative change of the penalized log-likelihood
  int max_lqa_iters = 50;
  double lqa_tol = 1e-6;
  double lqa_floor = 1e-6;  // lower bound on |mean differences| inside the
                            // quadratic approximation denominators
  // Post-fit threshold for snapping coefficient differences to zero.
  // Unset: 1e-3 * max(1, median |initial mean coefficient|).
  std::optional<double> fuse_threshold;
  double weight_floor = 1e-8;  // cap for adaptive weight denominators
  std::uint64_t seed = 0;

  /// Test hook called after every ECM sweep; not serialized.
  std::function<void(int iter, const ModelParams&, double objective)>
      iteration_observer;

  void validate() const;
};

/// Adaptive fusion weights, fixed at initialization: for the unordered
/// pair (g, g') and coefficient j,
///   w_j = gap_j / max(|mu~_gj - mu~_g'j|, weight_floor),
/// where gap_j is the step-knot gap and mu~ are the initial mean
/// estimates. Weights are zero wherever gap_j is zero.
struct AdaptiveWeights {
  int n_clusters = 0;
  std::vector<Eigen::VectorXd> pair_weights;  // pairs (g<g') in lex order

  static int pair_index(int g1, int g2, int n_clusters);
  const Eigen::VectorXd& at(int g1, int g2) const;  // 0-based, g1 < g2
};

AdaptiveWeights adaptive_weights(const Eigen::MatrixXd& initial_means,
                                 const StepKnots& step_knots,
                                 double weight_floor);

struct FitResult {
  ModelParams params;
  Eigen::MatrixXd posteriors;  // N x G, from the snapped parameters
  std::vector<int> labels;     // 1-based, argmax of posterior rows
  // Penalized log-likelihood after each full ECM sweep; the first entry
  // is the value at initialization, so size() == n_iters + 1.
  std::vector<double> objective_trace;
  std::vector<PairIntervals> fused_pairs;
  bool converged = false;
  int n_iters = 0;
  double fuse_threshold = 0.0;  // resolved snapping threshold
  std::vector<std::string> warnings;
  std::optional<BSplineBasis> basis;  // echo for serialization
  FitConfig config;                   // echo
  // Original time range when the CLI rescaled it onto the fit domain;
  // classification of new curves applies the same map.
  std::optional<Interval> original_domain;
};

/// Initialization: ridge-stabilized per-curve coefficient fits, k-means
/// with seeded restarts on the coefficients, pooled moment estimates.
/// The k-means centroids double as the adaptive-weight reference means.
struct Initialization {
  ModelParams params;
  Eigen::MatrixXd initial_means;  // G x q
  std::vector<int> labels;        // 1-based k-means labels
};
Initialization initialize(const Dataset& dataset, const BSplineBasis& basis,
                          int n_clusters, std::uint64_t seed);

/// Mixing update: column means of the posterior matrix.
Eigen::VectorXd update_mixing(const Eigen::MatrixXd& posteriors);

/// Shared diagonal coefficient variances:
///   sigma_j^2 = (1/N) sum_i sum_g post(i,g) (mean_ig,j^2 + cov_i,jj).
Eigen::VectorXd update_gamma_diag(const EStepQuantities& estep,
                                  const Eigen::MatrixXd& posteriors);

/// Noise variance update, the conditional maximizer given the current
/// means: weighted residual sum of squares plus the trace correction
/// trace(S_i cov_i S_i^T), divided by the total number of points.
/// Floored at 1e-10 for degenerate perfect fits.
double update_noise_var(const DesignCache& cache, const ModelParams& params,
                        const EStepQuantities& estep,
                        const Eigen::MatrixXd& posteriors);
double update_noise_var(const Dataset& dataset, const BSplineBasis& basis,
                        const ModelParams& params,
                        const EStepQuantities& estep,
                        const Eigen::MatrixXd& posteriors);

struct LqaResult {
  Eigen::MatrixXd means;
  int n_iters = 0;
  // Per inner iteration: decrease of the quadratic surrogate achieved by
  // the linear solve (nonnegative up to solver round-off).
  std::vector<double> surrogate_decrease;
  bool jittered = false;  // a singular system needed a diagonal jitter
};

/// Fused mean update: iteratively solves the local quadratic
/// approximation of the penalized weighted least squares problem, one
/// symmetric positive-definite system of dimension G*q per iteration.
/// Returns the iterate with the smallest exact (absolute-value) penalty
/// objective, so the enclosing ECM sweep can never increase it.
LqaResult update_means_lqa(const DesignCache& cache,
                           const Eigen::MatrixXd& posteriors,
                           const EStepQuantities& estep,
                           const Eigen::MatrixXd& current_means,
                           double noise_var, const AdaptiveWeights& weights,
                           const Eigen::MatrixXd& roughness,
                           const FitConfig& config);
LqaResult update_means_lqa(const Dataset& dataset, const BSplineBasis& basis,
                           const Eigen::MatrixXd& posteriors,
                           const EStepQuantities& estep,
                           const Eigen::MatrixXd& current_means,
                           double noise_var, const AdaptiveWeights& weights,
                           const Eigen::MatrixXd& roughness,
                           const FitConfig& config);

/// The objective the mean update minimizes, with the exact absolute
/// value fusion penalty:
///   1/2 sum_ig post(i,g)/noise_var |Y_i - S_i(mu_g + gamma_ig)|^2
///   + lambda_fuse sum_{g<g'} sum_j w_j |mu_gj - mu_g'j|
///   + lambda_smooth sum_g mu_g^T W mu_g.
double mean_update_objective(const DesignCache& cache,
                             const Eigen::MatrixXd& posteriors,
                             const EStepQuantities& estep,
                             const Eigen::MatrixXd& means, double noise_var,
                             const AdaptiveWeights& weights,
                             const Eigen::MatrixXd& roughness,
                             const FitConfig& config);

/// Penalized log-likelihood: mixture log-likelihood minus the weighted
/// pairwise fusion penalty minus the roughness penalty.
double penalized_loglik(const Dataset& dataset, const BSplineBasis& basis,
                        const ModelParams& params,
                        const AdaptiveWeights& weights,
                        const Eigen::MatrixXd& roughness,
                        const FitConfig& config);
double penalized_loglik(const DesignCache& cache, const ModelParams& params,
                        const AdaptiveWeights& weights,
                        const Eigen::MatrixXd& roughness,
                        const FitConfig& config);

/// Snaps nearly equal coefficients to a common value: per coordinate,
/// clusters whose coefficients differ by at most eps_fuse are merged
/// transitively (union-find) and set to their group mean, so pairwise
/// snapping cannot violate transitivity.
Eigen::MatrixXd snap_fused_means(const Eigen::MatrixXd& means,
                                 double eps_fuse);

/// For each cluster pair, the union of step-knot intervals of the
/// coefficients whose difference is at most eps_fuse, with touching
/// intervals merged. Cluster indices in the result are 1-based.
std::vector<PairIntervals> fused_regions(const Eigen::MatrixXd& means,
                                         const StepKnots& step_knots,
                                         double eps_fuse);

/// Full penalized ECM fit: initialization, fixed adaptive weights, ECM
/// sweeps of (E-step; mixing, variances, noise, fused means), post-fit
/// coefficient snapping, and fused-region extraction. Non-convergence is
/// reported through `converged`, never as an error.
FitResult fit(const Dataset& dataset, const BSplineBasis& basis,
              const FitConfig& config);

/// Same as fit() but starting from the given initialization; used for
/// warm starts and for permutation-invariance checks.
FitResult fit_from_init(const Dataset& dataset, const BSplineBasis& basis,
                        const FitConfig& config, const ModelParams& init,
                        const Eigen::MatrixXd& initial_means);

}  // namespace funfuse
