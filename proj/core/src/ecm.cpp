#include "funfuse/ecm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "funfuse/rng.hpp"

namespace funfuse {

namespace {

// ---------------------------------------------------------------------
// k-means with k-means++ seeding, used only for initialization.
// ---------------------------------------------------------------------

struct KmeansOut {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = std::numeric_limits<double>::infinity();
};

KmeansOut kmeans_once(const Eigen::MatrixXd& X, int G, int max_iters,
                      Rng& rng) {
  const int N = static_cast<int>(X.rows());

  // k-means++ seeding.
  Eigen::MatrixXd centroids(G, X.cols());
  centroids.row(0) = X.row(static_cast<int>(rng.uniform_int(N)));
  Eigen::VectorXd d2 = (X.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < G; ++c) {
    double total = d2.sum();
    int pick;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      double acc = 0.0;
      pick = N - 1;
      for (int i = 0; i < N; ++i) {
        acc += d2[i];
        if (u <= acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_int(N));
    }
    centroids.row(c) = X.row(pick);
    d2 = d2.cwiseMin(
        (X.rowwise() - centroids.row(c)).rowwise().squaredNorm().eval());
  }

  std::vector<int> labels(N, 0);
  std::vector<int> counts(G, 0);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < N; ++i) {
      int best = 0;
      double bd = (X.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < G; ++c) {
        double d = (X.row(i) - centroids.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (labels[i] != best) changed = true;
      labels[i] = best;
      ++counts[best];
    }
    // Re-seed empty clusters at the point farthest from its centroid.
    for (int c = 0; c < G; ++c) {
      if (counts[c] > 0) continue;
      int far = 0;
      double fd = -1.0;
      for (int i = 0; i < N; ++i) {
        if (counts[labels[i]] <= 1) continue;
        double d = (X.row(i) - centroids.row(labels[i])).squaredNorm();
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      --counts[labels[far]];
      labels[far] = c;
      ++counts[c];
      changed = true;
    }
    centroids.setZero();
    for (int i = 0; i < N; ++i) centroids.row(labels[i]) += X.row(i);
    for (int c = 0; c < G; ++c)
      if (counts[c] > 0) centroids.row(c) /= counts[c];
    if (!changed && it > 0) break;
  }

  KmeansOut out;
  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.inertia = 0.0;
  for (int i = 0; i < N; ++i)
    out.inertia += (X.row(i) - out.centroids.row(out.labels[i])).squaredNorm();
  return out;
}

KmeansOut kmeans(const Eigen::MatrixXd& X, int G, int restarts, Rng& rng) {
  KmeansOut best;
  for (int r = 0; r < restarts; ++r) {
    KmeansOut cur = kmeans_once(X, G, 100, rng);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

// ---------------------------------------------------------------------

double fusion_penalty(const Eigen::MatrixXd& means,
                      const AdaptiveWeights& weights) {
  const int G = static_cast<int>(means.rows());
  double pen = 0.0;
  for (int g1 = 0; g1 < G; ++g1)
    for (int g2 = g1 + 1; g2 < G; ++g2) {
      const Eigen::VectorXd& w = weights.at(g1, g2);
      pen += (w.array() *
              (means.row(g1) - means.row(g2)).transpose().array().abs())
                 .sum();
    }
  return pen;
}

double smoothness_penalty(const Eigen::MatrixXd& means,
                          const Eigen::MatrixXd& roughness) {
  double pen = 0.0;
  for (int g = 0; g < means.rows(); ++g)
    pen += means.row(g) * roughness * means.row(g).transpose();
  return pen;
}

// Sufficient statistics of the weighted least squares part of the mean
// update: per cluster H_g = sum_i post(i,g) S_i^T S_i,
// b_g = sum_i post(i,g) S_i^T (y_i - S_i gamma_ig), and the residual
// constant r0_g = sum_i post(i,g) |y_i - S_i gamma_ig|^2.
struct MeanUpdateStats {
  std::vector<Eigen::MatrixXd> H;
  std::vector<Eigen::VectorXd> b;
  std::vector<double> r0;
};

MeanUpdateStats mean_update_stats(const DesignCache& cache,
                                  const Eigen::MatrixXd& posteriors,
                                  const EStepQuantities& estep) {
  const int N = cache.n_curves();
  const int G = static_cast<int>(posteriors.cols());
  const int q = cache.dimension();

  MeanUpdateStats st;
  st.H.assign(G, Eigen::MatrixXd::Zero(q, q));
  st.b.assign(G, Eigen::VectorXd::Zero(q));
  st.r0.assign(G, 0.0);

  std::vector<Eigen::VectorXd> wsum(cache.n_groups(),
                                    Eigen::VectorXd::Zero(G));
  for (int i = 0; i < N; ++i) {
    const int grp = cache.group_of(i);
    const Eigen::MatrixXd& gram = cache.gram(grp);
    wsum[grp] += posteriors.row(i).transpose();
    for (int g = 0; g < G; ++g) {
      const double p = posteriors(i, g);
      if (p == 0.0) continue;
      Eigen::VectorXd gamma = estep.gamma_mean[i].col(g);
      Eigen::VectorXd gram_gamma = gram * gamma;
      st.b[g].noalias() += p * (cache.design_t_values(i) - gram_gamma);
      st.r0[g] += p * (cache.values_squared_norm(i) -
                       2.0 * gamma.dot(cache.design_t_values(i)) +
                       gamma.dot(gram_gamma));
    }
  }
  for (int grp = 0; grp < cache.n_groups(); ++grp)
    for (int g = 0; g < G; ++g)
      st.H[g].noalias() += wsum[grp][g] * cache.gram(grp);
  return st;
}

double objective_from_stats(const MeanUpdateStats& st,
                            const Eigen::MatrixXd& means, double noise_var,
                            const AdaptiveWeights& weights,
                            const Eigen::MatrixXd& roughness,
                            const FitConfig& config) {
  const int G = static_cast<int>(means.rows());
  double ls = 0.0;
  for (int g = 0; g < G; ++g) {
    Eigen::VectorXd mu = means.row(g).transpose();
    ls += st.r0[g] - 2.0 * mu.dot(st.b[g]) + mu.dot(st.H[g] * mu);
  }
  return 0.5 * ls / noise_var +
         config.lambda_fuse * fusion_penalty(means, weights) +
         config.lambda_smooth * smoothness_penalty(means, roughness);
}

// Union-find on cluster indices, small G.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void merge(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void FitConfig::validate() const {
  if (n_clusters < 1) throw std::invalid_argument("n_clusters must be >= 1");
  if (lambda_fuse < 0.0 || lambda_smooth < 0.0)
    throw std::invalid_argument("penalty weights must be nonnegative");
  if (deriv_order < 0) throw std::invalid_argument("deriv_order must be >= 0");
  if (max_ecm_iters < 1 || max_lqa_iters < 1)
    throw std::invalid_argument("iteration limits must be >= 1");
  if (!(ecm_tol > 0.0) || !(lqa_tol > 0.0) || !(lqa_floor > 0.0) ||
      !(weight_floor > 0.0))
    throw std::invalid_argument("tolerances must be positive");
  if (fuse_threshold && !(*fuse_threshold > 0.0))
    throw std::invalid_argument("fuse_threshold must be positive when set");
}

int AdaptiveWeights::pair_index(int g1, int g2, int n_clusters) {
  // Lexicographic index of (g1, g2), g1 < g2, among all ordered pairs.
  return g1 * n_clusters - g1 * (g1 + 1) / 2 + (g2 - g1 - 1);
}

const Eigen::VectorXd& AdaptiveWeights::at(int g1, int g2) const {
  return pair_weights[pair_index(g1, g2, n_clusters)];
}

AdaptiveWeights adaptive_weights(const Eigen::MatrixXd& initial_means,
                                 const StepKnots& step_knots,
                                 double weight_floor) {
  if (!(weight_floor > 0.0))
    throw std::invalid_argument("weight_floor must be positive");
  if (!initial_means.allFinite())
    throw std::invalid_argument("initial means must be finite");
  const int G = static_cast<int>(initial_means.rows());
  const int q = static_cast<int>(initial_means.cols());
  if (static_cast<int>(step_knots.gaps.size()) != q)
    throw std::invalid_argument("step knots do not match basis dimension");

  AdaptiveWeights w;
  w.n_clusters = G;
  w.pair_weights.reserve(G * (G - 1) / 2);
  for (int g1 = 0; g1 < G; ++g1)
    for (int g2 = g1 + 1; g2 < G; ++g2) {
      Eigen::VectorXd v(q);
      for (int j = 0; j < q; ++j) {
        double diff = std::abs(initial_means(g1, j) - initial_means(g2, j));
        v[j] = step_knots.gaps[j] / std::max(diff, weight_floor);
      }
      w.pair_weights.push_back(std::move(v));
    }
  return w;
}

Initialization initialize(const Dataset& dataset, const BSplineBasis& basis,
                          int n_clusters, std::uint64_t seed) {
  dataset.validate();
  const int N = dataset.n_curves();
  const int q = basis.dimension();
  if (n_clusters < 1) throw std::invalid_argument("n_clusters must be >= 1");
  if (N < n_clusters)
    throw std::invalid_argument("need at least as many curves as clusters");

  DesignCache cache(dataset, basis);
  Eigen::MatrixXd ridge_pen =
      basis.roughness_matrix(std::min(2, basis.order() - 1));

  // Lightly ridged least-squares coefficients: the curvature ridge only
  // keeps the normal equations well posed (roughness entries scale like
  // the inverse cube of the knot spacing, so 1e-6 shrinks essentially
  // nothing). These define the centroids, and through them the
  // adaptive-weight reference means.
  auto solve_coeffs = [&](double ridge, double* out_gcv) {
    std::vector<Eigen::LDLT<Eigen::MatrixXd>> solvers(cache.n_groups());
    std::vector<double> df(cache.n_groups());
    for (int grp = 0; grp < cache.n_groups(); ++grp) {
      Eigen::MatrixXd A = cache.gram(grp) + ridge * ridge_pen;
      A.diagonal().array() += 1e-10;
      solvers[grp].compute(A);
      df[grp] = solvers[grp].solve(cache.gram(grp)).trace();
    }
    Eigen::MatrixXd c_all(N, q);
    double gcv = 0.0, ss = 0.0;
    for (int i = 0; i < N; ++i) {
      const int grp = cache.group_of(i);
      Eigen::VectorXd c = solvers[grp].solve(cache.design_t_values(i));
      c_all.row(i) = c.transpose();
      double r2 = (cache.values(i) - cache.design(grp) * c).squaredNorm();
      ss += r2;
      long n_i = cache.design(grp).rows();
      double denom = 1.0 - std::min(df[grp] / n_i, 0.999);
      gcv += r2 / (n_i * denom * denom);
    }
    if (out_gcv) *out_gcv = gcv;
    return std::make_pair(std::move(c_all), ss);
  };

  auto [coeffs, resid_ss] = solve_coeffs(1e-6, nullptr);

  // k-means features use a separate smoothing level picked by pooled
  // generalized cross-validation: at high noise the raw coefficients are
  // too scrambled to cluster, while the level backs off on clean data.
  const std::array<double, 7> ridge_grid{1e-6, 1e-5, 1e-4, 1e-3,
                                         1e-2, 1e-1, 1.0};
  Eigen::MatrixXd features = coeffs;
  double best_gcv = std::numeric_limits<double>::infinity();
  for (double ridge : ridge_grid) {
    double gcv = 0.0;
    auto [c_all, ss] = solve_coeffs(ridge, &gcv);
    (void)ss;
    if (gcv < best_gcv) {
      best_gcv = gcv;
      features = std::move(c_all);
    }
  }

  // Distinct coefficient rows; k-means cannot separate fewer than G.
  {
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      for (int j = 0; j < q; ++j) {
        if (coeffs(a, j) != coeffs(b, j)) return coeffs(a, j) < coeffs(b, j);
      }
      return false;
    });
    int distinct = 1;
    for (int i = 1; i < N; ++i)
      if (coeffs.row(order[i]) != coeffs.row(order[i - 1])) ++distinct;
    if (distinct < n_clusters)
      throw std::invalid_argument("fewer distinct curves than clusters");
  }

  Rng rng(seed);
  KmeansOut km;
  if (n_clusters == 1) {
    km.labels.assign(N, 0);
  } else {
    km = kmeans(features, n_clusters, 10, rng);
  }

  // Cluster moments come from the lightly ridged coefficients; only the
  // labels saw the smoothed features.
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(n_clusters, q);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_clusters);
  for (int i = 0; i < N; ++i) {
    centroids.row(km.labels[i]) += coeffs.row(i);
    counts[km.labels[i]] += 1.0;
  }
  for (int g = 0; g < n_clusters; ++g)
    if (counts[g] > 0) centroids.row(g) /= counts[g];

  ModelParams params;
  params.means = centroids;
  params.mixing.resize(n_clusters);
  const double floor = 1.0 / (10.0 * N);
  for (int g = 0; g < n_clusters; ++g)
    params.mixing[g] = std::max(counts[g] / N, floor);
  params.mixing /= params.mixing.sum();

  params.gamma_diag = Eigen::VectorXd::Zero(q);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd d =
        (coeffs.row(i) - centroids.row(km.labels[i])).transpose();
    params.gamma_diag += d.cwiseProduct(d);
  }
  params.gamma_diag /= N;
  params.noise_var = std::max(resid_ss / cache.total_points(), 1e-10);

  Initialization out;
  out.params = std::move(params);
  out.initial_means = std::move(centroids);
  out.labels.resize(N);
  for (int i = 0; i < N; ++i) out.labels[i] = km.labels[i] + 1;
  return out;
}

Eigen::VectorXd update_mixing(const Eigen::MatrixXd& posteriors) {
  if (posteriors.rows() == 0)
    throw std::invalid_argument("posterior matrix is empty");
  return posteriors.colwise().mean().transpose();
}

Eigen::VectorXd update_gamma_diag(const EStepQuantities& estep,
                                  const Eigen::MatrixXd& posteriors) {
  const int N = static_cast<int>(posteriors.rows());
  const int G = static_cast<int>(posteriors.cols());
  if (static_cast<int>(estep.gamma_mean.size()) != N ||
      static_cast<int>(estep.gamma_cov.size()) != N)
    throw std::invalid_argument("E-step quantities do not match posteriors");
  const int q = static_cast<int>(estep.gamma_cov.front().rows());

  Eigen::VectorXd out = Eigen::VectorXd::Zero(q);
  for (int i = 0; i < N; ++i) {
    for (int g = 0; g < G; ++g)
      out += posteriors(i, g) *
             estep.gamma_mean[i].col(g).cwiseAbs2().matrix();
    out += posteriors.row(i).sum() * estep.gamma_cov[i].diagonal();
  }
  return out / N;
}

double update_noise_var(const DesignCache& cache, const ModelParams& params,
                        const EStepQuantities& estep,
                        const Eigen::MatrixXd& posteriors) {
  const int N = cache.n_curves();
  const int G = static_cast<int>(posteriors.cols());
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    const int grp = cache.group_of(i);
    const Eigen::MatrixXd& S = cache.design(grp);
    for (int g = 0; g < G; ++g) {
      const double p = posteriors(i, g);
      if (p == 0.0) continue;
      Eigen::VectorXd fitted =
          S * (params.means.row(g).transpose() + estep.gamma_mean[i].col(g));
      total += p * (cache.values(i) - fitted).squaredNorm();
    }
    // trace(S cov S^T) = <S^T S, cov>; identical across clusters.
    total += posteriors.row(i).sum() *
             cache.gram(grp).cwiseProduct(estep.gamma_cov[i]).sum();
  }
  return std::max(total / cache.total_points(), 1e-10);
}

double update_noise_var(const Dataset& dataset, const BSplineBasis& basis,
                        const ModelParams& params,
                        const EStepQuantities& estep,
                        const Eigen::MatrixXd& posteriors) {
  return update_noise_var(DesignCache(dataset, basis), params, estep,
                          posteriors);
}

double mean_update_objective(const DesignCache& cache,
                             const Eigen::MatrixXd& posteriors,
                             const EStepQuantities& estep,
                             const Eigen::MatrixXd& means, double noise_var,
                             const AdaptiveWeights& weights,
                             const Eigen::MatrixXd& roughness,
                             const FitConfig& config) {
  MeanUpdateStats st = mean_update_stats(cache, posteriors, estep);
  return objective_from_stats(st, means, noise_var, weights, roughness,
                              config);
}

LqaResult update_means_lqa(const DesignCache& cache,
                           const Eigen::MatrixXd& posteriors,
                           const EStepQuantities& estep,
                           const Eigen::MatrixXd& current_means,
                           double noise_var, const AdaptiveWeights& weights,
                           const Eigen::MatrixXd& roughness,
                           const FitConfig& config) {
  config.validate();
  if (!(noise_var > 0.0))
    throw std::invalid_argument("noise variance must be positive");
  const int G = static_cast<int>(current_means.rows());
  const int q = static_cast<int>(current_means.cols());
  const double inv_nv = 1.0 / noise_var;

  MeanUpdateStats st = mean_update_stats(cache, posteriors, estep);

  LqaResult res;
  res.means = current_means;
  Eigen::MatrixXd mu = current_means;
  double best_obj = objective_from_stats(st, mu, noise_var, weights, roughness,
                                         config);

  Eigen::MatrixXd A(G * q, G * q);
  Eigen::VectorXd rhs(G * q);
  for (int it = 0; it < config.max_lqa_iters; ++it) {
    A.setZero();
    for (int g = 0; g < G; ++g) {
      A.block(g * q, g * q, q, q) =
          inv_nv * st.H[g] + 2.0 * config.lambda_smooth * roughness;
      rhs.segment(g * q, q) = inv_nv * st.b[g];
    }
    if (config.lambda_fuse > 0.0) {
      for (int g1 = 0; g1 < G; ++g1)
        for (int g2 = g1 + 1; g2 < G; ++g2) {
          const Eigen::VectorXd& w = weights.at(g1, g2);
          for (int j = 0; j < q; ++j) {
            double d = std::max(std::abs(mu(g1, j) - mu(g2, j)),
                                config.lqa_floor);
            double c = config.lambda_fuse * w[j] / d;
            A(g1 * q + j, g1 * q + j) += c;
            A(g2 * q + j, g2 * q + j) += c;
            A(g1 * q + j, g2 * q + j) -= c;
            A(g2 * q + j, g1 * q + j) -= c;
          }
        }
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd x = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !x.allFinite()) {
      // Singular system, e.g. lambda_smooth = 0 with an empty cluster.
      A.diagonal().array() += 1e-8;
      ldlt.compute(A);
      x = ldlt.solve(rhs);
      res.jittered = true;
      if (!x.allFinite())
        throw std::runtime_error("mean update system is singular");
    }

    Eigen::MatrixXd mu_new(G, q);
    for (int g = 0; g < G; ++g)
      mu_new.row(g) = x.segment(g * q, q).transpose();

    // Surrogate decrease achieved by the exact solve (>= 0 up to
    // round-off): Q(x) = x'Ax/2 - rhs'x + const.
    auto quad = [&](const Eigen::MatrixXd& m) {
      Eigen::VectorXd v(G * q);
      for (int g = 0; g < G; ++g) v.segment(g * q, q) = m.row(g).transpose();
      return 0.5 * v.dot(A * v) - rhs.dot(v);
    };
    res.surrogate_decrease.push_back(quad(mu) - quad(mu_new));

    double step = (mu_new - mu).cwiseAbs().maxCoeff();
    mu = std::move(mu_new);
    ++res.n_iters;

    double obj = objective_from_stats(st, mu, noise_var, weights, roughness,
                                      config);
    if (obj < best_obj) {
      best_obj = obj;
      res.means = mu;
    }
    if (step < config.lqa_tol) break;
  }
  return res;
}

LqaResult update_means_lqa(const Dataset& dataset, const BSplineBasis& basis,
                           const Eigen::MatrixXd& posteriors,
                           const EStepQuantities& estep,
                           const Eigen::MatrixXd& current_means,
                           double noise_var, const AdaptiveWeights& weights,
                           const Eigen::MatrixXd& roughness,
                           const FitConfig& config) {
  return update_means_lqa(DesignCache(dataset, basis), posteriors, estep,
                          current_means, noise_var, weights, roughness,
                          config);
}

double penalized_loglik(const DesignCache& cache, const ModelParams& params,
                        const AdaptiveWeights& weights,
                        const Eigen::MatrixXd& roughness,
                        const FitConfig& config) {
  return log_likelihood(cache, params) -
         config.lambda_fuse * fusion_penalty(params.means, weights) -
         config.lambda_smooth * smoothness_penalty(params.means, roughness);
}

double penalized_loglik(const Dataset& dataset, const BSplineBasis& basis,
                        const ModelParams& params,
                        const AdaptiveWeights& weights,
                        const Eigen::MatrixXd& roughness,
                        const FitConfig& config) {
  return penalized_loglik(DesignCache(dataset, basis), params, weights,
                          roughness, config);
}

Eigen::MatrixXd snap_fused_means(const Eigen::MatrixXd& means,
                                 double eps_fuse) {
  const int G = static_cast<int>(means.rows());
  const int q = static_cast<int>(means.cols());
  Eigen::MatrixXd out = means;
  for (int j = 0; j < q; ++j) {
    UnionFind uf(G);
    for (int g1 = 0; g1 < G; ++g1)
      for (int g2 = g1 + 1; g2 < G; ++g2)
        if (std::abs(means(g1, j) - means(g2, j)) <= eps_fuse)
          uf.merge(g1, g2);
    for (int root = 0; root < G; ++root) {
      if (uf.find(root) != root) continue;
      double sum = 0.0;
      int count = 0;
      for (int g = 0; g < G; ++g)
        if (uf.find(g) == root) {
          sum += means(g, j);
          ++count;
        }
      if (count > 1)
        for (int g = 0; g < G; ++g)
          if (uf.find(g) == root) out(g, j) = sum / count;
    }
  }
  return out;
}

std::vector<PairIntervals> fused_regions(const Eigen::MatrixXd& means,
                                         const StepKnots& step_knots,
                                         double eps_fuse) {
  const int G = static_cast<int>(means.rows());
  const int q = static_cast<int>(means.cols());
  if (static_cast<int>(step_knots.gaps.size()) != q)
    throw std::invalid_argument("step knots do not match mean dimension");

  std::vector<PairIntervals> out;
  for (int g1 = 0; g1 < G; ++g1)
    for (int g2 = g1 + 1; g2 < G; ++g2) {
      PairIntervals pi;
      pi.g1 = g1 + 1;
      pi.g2 = g2 + 1;
      int j = 0;
      while (j < q) {
        if (std::abs(means(g1, j) - means(g2, j)) <= eps_fuse) {
          double lo = step_knots.tau[j];
          int jend = j;
          while (jend + 1 < q &&
                 std::abs(means(g1, jend + 1) - means(g2, jend + 1)) <=
                     eps_fuse)
            ++jend;
          pi.intervals.push_back({lo, step_knots.tau[jend + 1]});
          j = jend + 1;
        } else {
          ++j;
        }
      }
      out.push_back(std::move(pi));
    }
  return out;
}

FitResult fit_from_init(const Dataset& dataset, const BSplineBasis& basis,
                        const FitConfig& config, const ModelParams& init,
                        const Eigen::MatrixXd& initial_means) {
  config.validate();
  init.validate();
  DesignCache cache(dataset, basis);
  const Eigen::MatrixXd roughness = basis.roughness_matrix(config.deriv_order);
  const StepKnots sk = basis.step_knots();
  const AdaptiveWeights weights =
      adaptive_weights(initial_means, sk, config.weight_floor);

  double eps_fuse;
  if (config.fuse_threshold) {
    eps_fuse = *config.fuse_threshold;
  } else {
    // Scale-aware default: relative to the median absolute initial mean
    // coefficient, floored at 1.
    std::vector<double> mag(initial_means.size());
    for (Eigen::Index i = 0; i < initial_means.size(); ++i)
      mag[i] = std::abs(initial_means.reshaped()[i]);
    std::nth_element(mag.begin(), mag.begin() + mag.size() / 2, mag.end());
    eps_fuse = 1e-3 * std::max(1.0, mag[mag.size() / 2]);
  }

  FitResult res;
  res.config = config;
  res.basis = basis;
  res.fuse_threshold = eps_fuse;

  ModelParams params = init;
  double obj = penalized_loglik(cache, params, weights, roughness, config);
  res.objective_trace.push_back(obj);

  bool jitter_warned = false;
  for (int t = 1; t <= config.max_ecm_iters; ++t) {
    EStepQuantities es = e_step(cache, params);
    params.mixing = update_mixing(es.posteriors);
    params.gamma_diag = update_gamma_diag(es, es.posteriors);
    params.noise_var = update_noise_var(cache, params, es, es.posteriors);
    LqaResult lqa =
        update_means_lqa(cache, es.posteriors, es, params.means,
                         params.noise_var, weights, roughness, config);
    if (lqa.jittered && !jitter_warned) {
      res.warnings.push_back(
          "mean update system was singular; applied 1e-8 diagonal jitter");
      jitter_warned = true;
    }
    params.means = lqa.means;

    double obj_new = penalized_loglik(cache, params, weights, roughness,
                                      config);
    res.objective_trace.push_back(obj_new);
    if (config.iteration_observer) config.iteration_observer(t, params, obj_new);
    double rel = std::abs(obj_new - obj) / std::max(1.0, std::abs(obj));
    obj = obj_new;
    if (rel < config.ecm_tol) {
      res.converged = true;
      break;
    }
  }
  res.n_iters = static_cast<int>(res.objective_trace.size()) - 1;

  // Post-fit fusion snapping, then recompute memberships and labels from
  // the snapped parameters.
  params.means = snap_fused_means(params.means, eps_fuse);
  EStepQuantities es = e_step(cache, params);
  res.params = std::move(params);
  res.posteriors = std::move(es.posteriors);
  res.labels.resize(cache.n_curves());
  for (int i = 0; i < cache.n_curves(); ++i) {
    int best = 0;
    for (int g = 1; g < res.posteriors.cols(); ++g)
      if (res.posteriors(i, g) > res.posteriors(i, best)) best = g;
    res.labels[i] = best + 1;
  }
  res.fused_pairs = fused_regions(res.params.means, sk, eps_fuse);
  return res;
}

FitResult fit(const Dataset& dataset, const BSplineBasis& basis,
              const FitConfig& config) {
  config.validate();
  Initialization init =
      initialize(dataset, basis, config.n_clusters, config.seed);
  return fit_from_init(dataset, basis, config, init.params,
                       init.initial_means);
}

}  // namespace funfuse
