#include "funfuse/mixture.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace funfuse {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Per-group covariance factorization and derived quantities for one
// parameter setting.
struct GroupFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;  // of S Gamma S^T + noise * I
  double log_det = 0.0;
  Eigen::MatrixXd smoother;   // q x n:  Gamma S^T Sigma^{-1}
  Eigen::MatrixXd gamma_cov;  // q x q:  Gamma - Gamma S^T Sigma^{-1} S Gamma
};

GroupFactor factor_group(const Eigen::MatrixXd& S, const ModelParams& params) {
  const Eigen::Index n = S.rows();
  Eigen::MatrixXd SG = S * params.gamma_diag.asDiagonal();  // n x q
  Eigen::MatrixXd sigma = SG * S.transpose();
  sigma.diagonal().array() += params.noise_var;

  GroupFactor f;
  f.llt.compute(sigma);
  if (f.llt.info() != Eigen::Success)
    throw std::runtime_error("curve covariance factorization failed");
  f.log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    f.log_det += 2.0 * std::log(f.llt.matrixLLT()(i, i));
  Eigen::MatrixXd X = f.llt.solve(SG);  // n x q = Sigma^{-1} S Gamma
  f.smoother = X.transpose();
  f.gamma_cov = Eigen::MatrixXd(params.gamma_diag.asDiagonal()) -
                SG.transpose() * X;
  f.gamma_cov = 0.5 * (f.gamma_cov + f.gamma_cov.transpose());
  return f;
}

double log_density_at(const GroupFactor& f, const Eigen::VectorXd& resid) {
  Eigen::VectorXd z =
      f.llt.matrixL().solve(resid);  // L z = resid, quad form = |z|^2
  return -0.5 * (resid.size() * kLog2Pi + f.log_det + z.squaredNorm());
}

// Row-wise scores log pi_g + log density; returns log-sum-exp and fills
// the posterior row. Clusters with pi_g = 0 contribute nothing.
double posterior_row(const Eigen::VectorXd& scores, Eigen::RowVectorXd& row) {
  const int G = static_cast<int>(scores.size());
  double m = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < G; ++g) m = std::max(m, scores[g]);
  if (!std::isfinite(m))
    throw std::runtime_error("all mixture components have zero weight");
  double sum = 0.0;
  for (int g = 0; g < G; ++g) sum += std::exp(scores[g] - m);
  double lse = m + std::log(sum);
  for (int g = 0; g < G; ++g) row[g] = std::exp(scores[g] - lse);
  return lse;
}

Eigen::VectorXd component_scores(const GroupFactor& f, const Eigen::MatrixXd& S,
                                 const Eigen::VectorXd& y,
                                 const ModelParams& params) {
  const int G = params.n_clusters();
  Eigen::VectorXd scores(G);
  for (int g = 0; g < G; ++g) {
    if (params.mixing[g] <= 0.0) {
      scores[g] = -std::numeric_limits<double>::infinity();
      continue;
    }
    Eigen::VectorXd resid = y - S * params.means.row(g).transpose();
    scores[g] = std::log(params.mixing[g]) + log_density_at(f, resid);
  }
  return scores;
}

}  // namespace

void ModelParams::validate() const {
  const int G = n_clusters();
  const int q = dimension();
  if (G < 1) throw std::invalid_argument("model needs at least one cluster");
  if (means.rows() != G)
    throw std::invalid_argument("means row count differs from cluster count");
  if (gamma_diag.size() != q)
    throw std::invalid_argument("gamma_diag length differs from dimension");
  double s = 0.0;
  for (int g = 0; g < G; ++g) {
    if (mixing[g] < 0.0)
      throw std::invalid_argument("mixing proportions must be nonnegative");
    s += mixing[g];
  }
  if (std::abs(s - 1.0) > 1e-10)
    throw std::invalid_argument("mixing proportions must sum to 1");
  for (int j = 0; j < q; ++j)
    if (gamma_diag[j] < 0.0)
      throw std::invalid_argument("coefficient variances must be nonnegative");
  if (!(noise_var > 0.0))
    throw std::invalid_argument("noise variance must be positive");
}

DesignCache::DesignCache(const Dataset& dataset, const BSplineBasis& basis) {
  dataset.validate();
  q_ = basis.dimension();
  std::map<std::vector<double>, int> group_index;
  group_of_.reserve(dataset.curves.size());
  values_.reserve(dataset.curves.size());
  for (const Curve& c : dataset.curves) {
    auto [it, inserted] =
        group_index.emplace(c.timepoints, static_cast<int>(designs_.size()));
    if (inserted) {
      Eigen::MatrixXd S = basis.design_matrix(c.timepoints);
      grams_.push_back(S.transpose() * S);
      designs_.push_back(std::move(S));
    }
    group_of_.push_back(it->second);
    Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(c.values.data(), c.values.size());
    sty_.push_back(designs_[it->second].transpose() * y);
    y2_.push_back(y.squaredNorm());
    values_.push_back(std::move(y));
    total_points_ += static_cast<long>(c.values.size());
  }
}

double log_component_density(const Curve& curve, int g,
                             const ModelParams& params,
                             const BSplineBasis& basis) {
  params.validate();
  if (g < 1 || g > params.n_clusters())
    throw std::invalid_argument("cluster index out of range");
  curve.validate();
  Eigen::MatrixXd S = basis.design_matrix(curve.timepoints);
  GroupFactor f = factor_group(S, params);
  Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(curve.values.data(), curve.values.size());
  Eigen::VectorXd resid = y - S * params.means.row(g - 1).transpose();
  return log_density_at(f, resid);
}

RandomEffectMoments random_effect_moments(const Curve& curve,
                                          const ModelParams& params,
                                          const BSplineBasis& basis) {
  params.validate();
  curve.validate();
  Eigen::MatrixXd S = basis.design_matrix(curve.timepoints);
  GroupFactor f = factor_group(S, params);
  Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(curve.values.data(), curve.values.size());

  RandomEffectMoments out;
  out.mean.resize(params.dimension(), params.n_clusters());
  for (int g = 0; g < params.n_clusters(); ++g) {
    Eigen::VectorXd resid = y - S * params.means.row(g).transpose();
    out.mean.col(g) = f.smoother * resid;
  }
  out.cov = f.gamma_cov;
  return out;
}

EStepQuantities e_step(const DesignCache& cache, const ModelParams& params) {
  params.validate();
  const int N = cache.n_curves();
  const int G = params.n_clusters();
  const int q = params.dimension();

  std::vector<GroupFactor> factors;
  factors.reserve(cache.n_groups());
  for (int grp = 0; grp < cache.n_groups(); ++grp)
    factors.push_back(factor_group(cache.design(grp), params));

  EStepQuantities es;
  es.posteriors.resize(N, G);
  es.gamma_mean.resize(N);
  es.gamma_cov.resize(N);
  for (int i = 0; i < N; ++i) {
    const GroupFactor& f = factors[cache.group_of(i)];
    const Eigen::MatrixXd& S = cache.design(cache.group_of(i));
    const Eigen::VectorXd& y = cache.values(i);

    Eigen::VectorXd scores = component_scores(f, S, y, params);
    Eigen::RowVectorXd row(G);
    posterior_row(scores, row);
    es.posteriors.row(i) = row;

    es.gamma_mean[i].resize(q, G);
    for (int g = 0; g < G; ++g) {
      Eigen::VectorXd resid = y - S * params.means.row(g).transpose();
      es.gamma_mean[i].col(g) = f.smoother * resid;
    }
    es.gamma_cov[i] = f.gamma_cov;
  }
  return es;
}

EStepQuantities e_step(const Dataset& dataset, const ModelParams& params,
                       const BSplineBasis& basis) {
  return e_step(DesignCache(dataset, basis), params);
}

Eigen::MatrixXd posteriors(const Dataset& dataset, const ModelParams& params,
                           const BSplineBasis& basis) {
  params.validate();
  DesignCache cache(dataset, basis);
  std::vector<GroupFactor> factors;
  factors.reserve(cache.n_groups());
  for (int grp = 0; grp < cache.n_groups(); ++grp)
    factors.push_back(factor_group(cache.design(grp), params));

  Eigen::MatrixXd post(cache.n_curves(), params.n_clusters());
  for (int i = 0; i < cache.n_curves(); ++i) {
    const GroupFactor& f = factors[cache.group_of(i)];
    Eigen::VectorXd scores = component_scores(f, cache.design(cache.group_of(i)),
                                              cache.values(i), params);
    Eigen::RowVectorXd row(params.n_clusters());
    posterior_row(scores, row);
    post.row(i) = row;
  }
  return post;
}

double log_likelihood(const DesignCache& cache, const ModelParams& params) {
  params.validate();
  std::vector<GroupFactor> factors;
  factors.reserve(cache.n_groups());
  for (int grp = 0; grp < cache.n_groups(); ++grp)
    factors.push_back(factor_group(cache.design(grp), params));

  double ll = 0.0;
  Eigen::RowVectorXd row(params.n_clusters());
  for (int i = 0; i < cache.n_curves(); ++i) {
    const GroupFactor& f = factors[cache.group_of(i)];
    Eigen::VectorXd scores = component_scores(f, cache.design(cache.group_of(i)),
                                              cache.values(i), params);
    ll += posterior_row(scores, row);
  }
  return ll;
}

double log_likelihood(const Dataset& dataset, const ModelParams& params,
                      const BSplineBasis& basis) {
  return log_likelihood(DesignCache(dataset, basis), params);
}

int classify(const Curve& curve, const ModelParams& params,
             const BSplineBasis& basis) {
  params.validate();
  curve.validate();
  Eigen::MatrixXd S = basis.design_matrix(curve.timepoints);
  GroupFactor f = factor_group(S, params);
  Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(curve.values.data(), curve.values.size());
  Eigen::VectorXd scores = component_scores(f, S, y, params);
  int best = 0;
  for (int g = 1; g < params.n_clusters(); ++g)
    if (scores[g] > scores[best]) best = g;
  return best + 1;
}

}  // namespace funfuse
