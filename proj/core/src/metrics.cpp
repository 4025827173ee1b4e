#include "funfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace funfuse {

namespace {

double choose2(double n) { return 0.5 * n * (n - 1.0); }

std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::erase_if(v, [](const Interval& iv) { return !(iv.hi > iv.lo); });
  std::sort(v.begin(), v.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const Interval& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, iv.hi);
    else
      out.push_back(iv);
  }
  return out;
}

}  // namespace

double adjusted_rand(std::span<const int> labels_a,
                     std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size())
    throw std::invalid_argument("label vectors must have equal length");
  if (labels_a.empty())
    throw std::invalid_argument("label vectors must be nonempty");

  std::map<int, int> ia, ib;
  for (int l : labels_a) ia.emplace(l, static_cast<int>(ia.size()));
  for (int l : labels_b) ib.emplace(l, static_cast<int>(ib.size()));

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ia.size(), ib.size());
  for (std::size_t i = 0; i < labels_a.size(); ++i)
    table(ia.at(labels_a[i]), ib.at(labels_b[i])) += 1.0;

  double index = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r)
    for (Eigen::Index c = 0; c < table.cols(); ++c)
      index += choose2(table(r, c));
  double sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r)
    sum_a += choose2(table.row(r).sum());
  for (Eigen::Index c = 0; c < table.cols(); ++c)
    sum_b += choose2(table.col(c).sum());

  double expected = sum_a * sum_b / choose2(static_cast<double>(labels_a.size()));
  double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<int> align_clusters(const Eigen::MatrixXd& true_coeffs,
                                const Eigen::MatrixXd& est_coeffs,
                                const BSplineBasis& basis) {
  if (true_coeffs.rows() != est_coeffs.rows() ||
      true_coeffs.cols() != est_coeffs.cols())
    throw std::invalid_argument("coefficient matrices must have equal shape");
  const int G = static_cast<int>(true_coeffs.rows());
  if (G > 8)
    throw std::invalid_argument("exhaustive alignment supports G <= 8");
  if (true_coeffs.cols() != basis.dimension())
    throw std::invalid_argument("coefficients do not match basis dimension");

  const Eigen::MatrixXd gram = basis.roughness_matrix(0);
  Eigen::MatrixXd cost(G, G);  // cost(t, e) = integral (mu_t - muhat_e)^2
  for (int t = 0; t < G; ++t)
    for (int e = 0; e < G; ++e) {
      Eigen::VectorXd d = (true_coeffs.row(t) - est_coeffs.row(e)).transpose();
      cost(t, e) = d.dot(gram * d);
    }

  std::vector<int> perm(G), best(G);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int t = 0; t < G; ++t) c += cost(t, perm[t]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double mean_rmse(const Eigen::MatrixXd& true_coeffs,
                 const Eigen::MatrixXd& est_coeffs,
                 const BSplineBasis& basis) {
  const std::vector<int> perm = align_clusters(true_coeffs, est_coeffs, basis);
  const Eigen::MatrixXd gram = basis.roughness_matrix(0);
  const int G = static_cast<int>(true_coeffs.rows());
  double total = 0.0;
  for (int t = 0; t < G; ++t) {
    Eigen::VectorXd d =
        (true_coeffs.row(t) - est_coeffs.row(perm[t])).transpose();
    total += d.dot(gram * d);
  }
  return std::sqrt(std::max(total, 0.0) / G);
}

double intersection_measure(const std::vector<Interval>& a,
                            const std::vector<Interval>& b) {
  auto ma = merge_intervals(a);
  auto mb = merge_intervals(b);
  double measure = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ma.size() && j < mb.size()) {
    double lo = std::max(ma[i].lo, mb[j].lo);
    double hi = std::min(ma[i].hi, mb[j].hi);
    if (hi > lo) measure += hi - lo;
    if (ma[i].hi < mb[j].hi)
      ++i;
    else
      ++j;
  }
  return measure;
}

double noninformative_fraction(const std::vector<PairIntervals>& fused_pairs,
                               const GroundTruth& truth,
                               const std::vector<int>& true_to_est) {
  const int G = static_cast<int>(truth.true_mean_coefficients.rows());
  std::vector<int> perm = true_to_est;
  if (perm.empty()) {
    perm.resize(G);
    std::iota(perm.begin(), perm.end(), 0);
  }

  auto find_fused = [&](int e1, int e2) -> const PairIntervals* {
    if (e1 > e2) std::swap(e1, e2);
    for (const auto& fp : fused_pairs)
      if (fp.g1 == e1 + 1 && fp.g2 == e2 + 1) return &fp;
    return nullptr;
  };

  double weighted = 0.0, total_weight = 0.0;
  for (const auto& tp : truth.noninformative_intervals) {
    double w = tp.total_measure();
    if (w <= 0.0) continue;
    double overlap = 0.0;
    if (const PairIntervals* fp = find_fused(perm[tp.g1 - 1], perm[tp.g2 - 1]))
      overlap = intersection_measure(fp->intervals, tp.intervals);
    // fraction * weight with weight = measure(true region) reduces to the
    // plain overlap measure
    weighted += overlap;
    total_weight += w;
  }
  if (total_weight <= 0.0)
    throw std::invalid_argument(
        "ground truth has no noninformative region with positive measure");
  return weighted / total_weight;
}

}  // namespace funfuse
