#include "funfuse/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "funfuse/rng.hpp"
#include "parallel.hpp"

namespace funfuse {

namespace {

int cell_index(int gi, int si, int li, const SelectionGrid& grid) {
  return (gi * static_cast<int>(grid.lambda_s_values.size()) + si) *
             static_cast<int>(grid.lambda_l_values.size()) +
         li;
}

}  // namespace

void SelectionGrid::validate() const {
  if (g_values.empty() || lambda_s_values.empty() || lambda_l_values.empty())
    throw std::invalid_argument("selection grid lists must be nonempty");
  if (!std::is_sorted(g_values.begin(), g_values.end()) ||
      !std::is_sorted(lambda_s_values.begin(), lambda_s_values.end()) ||
      !std::is_sorted(lambda_l_values.begin(), lambda_l_values.end()))
    throw std::invalid_argument("selection grid lists must be sorted ascending");
  for (int g : g_values)
    if (g < 1) throw std::invalid_argument("grid cluster counts must be >= 1");
  for (double l : lambda_s_values)
    if (l < 0.0) throw std::invalid_argument("lambda_s must be nonnegative");
  for (double l : lambda_l_values)
    if (l < 0.0) throw std::invalid_argument("lambda_l must be nonnegative");
  if (k_folds < 2) throw std::invalid_argument("need at least 2 folds");
  if (m1 < 0.0 || m2 < 0.0 || m3 < 0.0)
    throw std::invalid_argument("m multipliers must be nonnegative");
}

std::vector<std::vector<int>> make_folds(int n_curves, int k_folds,
                                         std::uint64_t seed) {
  if (k_folds < 2 || k_folds > n_curves)
    throw std::invalid_argument("fold count must be in [2, n_curves]");
  std::vector<int> perm(n_curves);
  for (int i = 0; i < n_curves; ++i) perm[i] = i;
  Rng rng(seed);
  for (int i = n_curves - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<int>> folds(k_folds);
  for (int i = 0; i < n_curves; ++i) folds[i % k_folds].push_back(perm[i]);
  return folds;
}

CvScore cv_score(const Dataset& dataset, const BSplineBasis& basis,
                 const FitConfig& config, int k_folds, std::uint64_t seed) {
  dataset.validate();
  config.validate();
  const int N = dataset.n_curves();
  auto folds = make_folds(N, k_folds, seed);

  CvScore out;
  out.per_fold.resize(k_folds);
  for (int k = 0; k < k_folds; ++k) {
    if (N - static_cast<int>(folds[k].size()) < config.n_clusters)
      throw std::invalid_argument("training fold too small to fit the model");
    std::vector<char> held(N, 0);
    for (int i : folds[k]) held[i] = 1;

    Dataset train, test;
    train.domain = test.domain = dataset.domain;
    for (int i = 0; i < N; ++i)
      (held[i] ? test : train).curves.push_back(dataset.curves[i]);

    FitResult res = fit(train, basis, config);
    out.per_fold[k] = log_likelihood(DesignCache(test, basis), res.params);
  }

  out.mean = 0.0;
  for (double s : out.per_fold) out.mean += s;
  out.mean /= k_folds;
  double ss = 0.0;
  for (double s : out.per_fold) ss += (s - out.mean) * (s - out.mean);
  out.se = std::sqrt(ss / (k_folds - 1)) / std::sqrt(double(k_folds));
  return out;
}

StagedChoice staged_choice(const std::vector<CvCell>& table,
                           const SelectionGrid& grid) {
  grid.validate();
  const int NG = static_cast<int>(grid.g_values.size());
  const int NS = static_cast<int>(grid.lambda_s_values.size());
  const int NL = static_cast<int>(grid.lambda_l_values.size());
  if (static_cast<int>(table.size()) != NG * NS * NL)
    throw std::invalid_argument("cv table does not match the grid");

  StagedChoice choice;

  // Stage 1: smallest G within m1 standard errors of the best, per
  // (lambda_s, lambda_l) cell.
  choice.stage1_g.reserve(NS * NL);
  for (int si = 0; si < NS; ++si)
    for (int li = 0; li < NL; ++li) {
      int best_gi = 0;
      for (int gi = 1; gi < NG; ++gi)
        if (table[cell_index(gi, si, li, grid)].score.mean >
            table[cell_index(best_gi, si, li, grid)].score.mean)
          best_gi = gi;
      const CvScore& best = table[cell_index(best_gi, si, li, grid)].score;
      double threshold = best.mean - grid.m1 * best.se;
      int pick = best_gi;
      for (int gi = 0; gi < NG; ++gi)
        if (table[cell_index(gi, si, li, grid)].score.mean >= threshold) {
          pick = gi;
          break;
        }
      choice.stage1_g.push_back(grid.g_values[pick]);
    }

  // Collapse to one G: modal choice, ties to the smallest.
  std::map<int, int> votes;
  for (int g : choice.stage1_g) ++votes[g];
  int g_star = choice.stage1_g.front();
  int best_votes = 0;
  for (auto [g, v] : votes)
    if (v > best_votes) {
      best_votes = v;
      g_star = g;
    }
  choice.g = g_star;
  int gi_star = static_cast<int>(
      std::find(grid.g_values.begin(), grid.g_values.end(), g_star) -
      grid.g_values.begin());

  // Stage 2: largest lambda_s within m2 standard errors, per lambda_l.
  choice.stage2_lambda_s.reserve(NL);
  std::vector<int> stage2_si(NL);
  for (int li = 0; li < NL; ++li) {
    int best_si = 0;
    for (int si = 1; si < NS; ++si)
      if (table[cell_index(gi_star, si, li, grid)].score.mean >
          table[cell_index(gi_star, best_si, li, grid)].score.mean)
        best_si = si;
    const CvScore& best = table[cell_index(gi_star, best_si, li, grid)].score;
    double threshold = best.mean - grid.m2 * best.se;
    int pick = best_si;
    for (int si = NS - 1; si >= 0; --si)
      if (table[cell_index(gi_star, si, li, grid)].score.mean >= threshold) {
        pick = si;
        break;
      }
    stage2_si[li] = pick;
    choice.stage2_lambda_s.push_back(grid.lambda_s_values[pick]);
  }

  // Stage 3: largest lambda_l within m3 standard errors, each lambda_l
  // evaluated at its stage-2 lambda_s.
  int best_li = 0;
  for (int li = 1; li < NL; ++li)
    if (table[cell_index(gi_star, stage2_si[li], li, grid)].score.mean >
        table[cell_index(gi_star, stage2_si[best_li], best_li, grid)].score.mean)
      best_li = li;
  const CvScore& best =
      table[cell_index(gi_star, stage2_si[best_li], best_li, grid)].score;
  double threshold = best.mean - grid.m3 * best.se;
  int pick_li = best_li;
  for (int li = NL - 1; li >= 0; --li)
    if (table[cell_index(gi_star, stage2_si[li], li, grid)].score.mean >=
        threshold) {
      pick_li = li;
      break;
    }
  choice.lambda_l = grid.lambda_l_values[pick_li];
  choice.lambda_s = grid.lambda_s_values[stage2_si[pick_li]];
  return choice;
}

SelectionResult select_model(const Dataset& dataset, const BSplineBasis& basis,
                             const SelectionGrid& grid,
                             const FitConfig& base_config, int n_threads) {
  grid.validate();
  dataset.validate();
  if (grid.k_folds > dataset.n_curves())
    throw std::invalid_argument("more folds than curves");

  const int NG = static_cast<int>(grid.g_values.size());
  const int NS = static_cast<int>(grid.lambda_s_values.size());
  const int NL = static_cast<int>(grid.lambda_l_values.size());

  SelectionResult res;
  res.grid = grid;
  res.cv_table.resize(NG * NS * NL);
  for (int gi = 0; gi < NG; ++gi)
    for (int si = 0; si < NS; ++si)
      for (int li = 0; li < NL; ++li) {
        CvCell& cell = res.cv_table[cell_index(gi, si, li, grid)];
        cell.g = grid.g_values[gi];
        cell.lambda_s = grid.lambda_s_values[si];
        cell.lambda_l = grid.lambda_l_values[li];
      }

  detail::parallel_for(
      static_cast<int>(res.cv_table.size()), n_threads, [&](int idx) {
        CvCell& cell = res.cv_table[idx];
        FitConfig config = base_config;
        config.iteration_observer = nullptr;
        config.n_clusters = cell.g;
        config.lambda_smooth = cell.lambda_s;
        config.lambda_fuse = cell.lambda_l;
        cell.score = cv_score(dataset, basis, config, grid.k_folds, grid.seed);
      });

  StagedChoice choice = staged_choice(res.cv_table, grid);
  res.chosen_g = choice.g;
  res.chosen_lambda_s = choice.lambda_s;
  res.chosen_lambda_l = choice.lambda_l;
  res.stage1_g = std::move(choice.stage1_g);
  res.stage2_lambda_s = std::move(choice.stage2_lambda_s);
  res.stage3_lambda_l = choice.lambda_l;
  return res;
}

}  // namespace funfuse
