#pragma once

#include <Eigen/Dense>
#include <vector>

#include "funfuse/basis.hpp"
#include "funfuse/dataset.hpp"

namespace funfuse {

/// Parameters of the functional Gaussian mixture with a shared diagonal
/// coefficient covariance: mixing proportions pi_g, per-cluster basis
/// coefficient means mu_g (rows of `means`), Gamma = diag(gamma_diag),
/// and the measurement noise variance.
struct ModelParams {
  Eigen::VectorXd mixing;      // G, on the simplex
  Eigen::MatrixXd means;       // G x q
  Eigen::VectorXd gamma_diag;  // q, nonnegative
  double noise_var = 1.0;      // > 0

  int n_clusters() const { return static_cast<int>(mixing.size()); }
  int dimension() const { return static_cast<int>(means.cols()); }

  /// Throws std::invalid_argument on shape mismatch, mixing off the
  /// simplex (1e-10), negative variances, or non-positive noise.
  void validate() const;
};

/// E-step quantities for a dataset: posterior memberships, conditional
/// means of the per-curve random effects given each cluster, and the
/// conditional covariance (identical across clusters because Gamma and
/// the noise variance are shared).
struct EStepQuantities {
  Eigen::MatrixXd posteriors;               // N x G, rows on the simplex
  std::vector<Eigen::MatrixXd> gamma_mean;  // per curve: q x G
  std::vector<Eigen::MatrixXd> gamma_cov;   // per curve: q x q
};

/// Design matrices for a dataset, grouped by shared time grids so that
/// per-iteration covariance factorizations happen once per distinct grid
/// instead of once per curve. Simulated data shares a single grid.
class DesignCache {
 public:
  DesignCache(const Dataset& dataset, const BSplineBasis& basis);

  int n_curves() const { return static_cast<int>(values_.size()); }
  int n_groups() const { return static_cast<int>(designs_.size()); }
  int group_of(int curve) const { return group_of_[curve]; }
  const Eigen::MatrixXd& design(int group) const { return designs_[group]; }
  const Eigen::MatrixXd& gram(int group) const { return grams_[group]; }
  const Eigen::VectorXd& values(int curve) const { return values_[curve]; }
  const Eigen::VectorXd& design_t_values(int curve) const { return sty_[curve]; }
  double values_squared_norm(int curve) const { return y2_[curve]; }
  long total_points() const { return total_points_; }
  int dimension() const { return q_; }

 private:
  std::vector<int> group_of_;
  std::vector<Eigen::MatrixXd> designs_;  // per group: n x q
  std::vector<Eigen::MatrixXd> grams_;    // per group: S^T S
  std::vector<Eigen::VectorXd> values_;   // per curve
  std::vector<Eigen::VectorXd> sty_;      // per curve: S^T y
  std::vector<double> y2_;                // per curve: |y|^2
  long total_points_ = 0;
  int q_ = 0;
};

/// Log of the n_i-variate Gaussian density of the curve's values under
/// cluster g: mean S_i mu_g, covariance S_i Gamma S_i^T + noise_var * I,
/// evaluated in log space through a Cholesky factorization.
double log_component_density(const Curve& curve, int g,
                             const ModelParams& params,
                             const BSplineBasis& basis);

/// N x G posterior membership matrix, rows computed with log-sum-exp.
Eigen::MatrixXd posteriors(const Dataset& dataset, const ModelParams& params,
                           const BSplineBasis& basis);

/// Conditional mean of the random effect per cluster (columns of the
/// returned q x G matrix) and the shared conditional covariance.
struct RandomEffectMoments {
  Eigen::MatrixXd mean;  // q x G
  Eigen::MatrixXd cov;   // q x q
};
RandomEffectMoments random_effect_moments(const Curve& curve,
                                          const ModelParams& params,
                                          const BSplineBasis& basis);

/// Full E-step over a dataset.
EStepQuantities e_step(const Dataset& dataset, const ModelParams& params,
                       const BSplineBasis& basis);
EStepQuantities e_step(const DesignCache& cache, const ModelParams& params);

/// 1-based index of the cluster with the largest posterior score
/// log pi_g + log density; ties break to the lowest index.
int classify(const Curve& curve, const ModelParams& params,
             const BSplineBasis& basis);

/// Mixture log-likelihood sum_i log sum_g pi_g psi(Y_i; ...).
double log_likelihood(const Dataset& dataset, const ModelParams& params,
                      const BSplineBasis& basis);
double log_likelihood(const DesignCache& cache, const ModelParams& params);

}  // namespace funfuse
