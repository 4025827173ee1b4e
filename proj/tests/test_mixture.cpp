#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "funfuse/mixture.hpp"
#include "funfuse/rng.hpp"
#include "oracles.hpp"

using funfuse::BSplineBasis;
using funfuse::Curve;
using funfuse::Dataset;
using funfuse::ModelParams;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct SmallInstance {
  BSplineBasis basis;
  Dataset dataset;
  ModelParams params;
};

// Random small instance: q basis functions of order 2 or 3, a handful of
// curves on random grids, random positive variances.
SmallInstance random_instance(std::uint64_t seed, int n_curves = 3,
                              int n_points = 4, int G = 2) {
  funfuse::Rng rng(seed);
  int order = 2 + static_cast<int>(rng.uniform_int(2));
  int interior = 1 + static_cast<int>(rng.uniform_int(2));
  SmallInstance inst{funfuse::make_basis(order, interior, {0.0, 1.0}), {}, {}};
  const int q = inst.basis.dimension();

  inst.dataset.domain = {0.0, 1.0};
  for (int i = 0; i < n_curves; ++i) {
    Curve c;
    c.id = "c" + std::to_string(i);
    double t = 0.0;
    for (int j = 0; j < n_points; ++j) {
      t += (1.0 - t) * (0.15 + 0.5 * rng.uniform());
      c.timepoints.push_back(t);
      c.values.push_back(2.0 * rng.normal());
    }
    inst.dataset.curves.push_back(std::move(c));
  }

  inst.params.mixing.resize(G);
  for (int g = 0; g < G; ++g) inst.params.mixing[g] = 0.5 + rng.uniform();
  inst.params.mixing /= inst.params.mixing.sum();
  inst.params.means.resize(G, q);
  for (int g = 0; g < G; ++g)
    for (int j = 0; j < q; ++j) inst.params.means(g, j) = rng.normal();
  inst.params.gamma_diag.resize(q);
  for (int j = 0; j < q; ++j) inst.params.gamma_diag[j] = 0.2 + rng.uniform();
  inst.params.noise_var = 0.3 + rng.uniform();
  return inst;
}

Eigen::MatrixXd dense_covariance(const Eigen::MatrixXd& S,
                                 const ModelParams& p) {
  Eigen::MatrixXd sigma =
      S * p.gamma_diag.asDiagonal() * S.transpose();
  sigma.diagonal().array() += p.noise_var;
  return sigma;
}

}  // namespace

TEST_CASE("standard normal point density") {
  // one point, one constant basis function, pure noise
  BSplineBasis basis = funfuse::make_basis(1, 0, {0.0, 1.0});
  ModelParams p;
  p.mixing = Eigen::VectorXd::Ones(1);
  p.means = Eigen::MatrixXd::Zero(1, 1);
  p.gamma_diag = Eigen::VectorXd::Zero(1);
  p.noise_var = 1.0;
  Curve c{"c", {0.5}, {0.0}};
  CHECK(funfuse::log_component_density(c, 1, p, basis) ==
        doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-14));
}

TEST_CASE("zero random effect factorizes into univariate densities") {
  BSplineBasis basis = funfuse::make_basis(2, 2, {0.0, 1.0});
  const int q = basis.dimension();
  ModelParams p;
  p.mixing = Eigen::VectorXd::Ones(1);
  p.means = Eigen::MatrixXd::Random(1, q);
  p.gamma_diag = Eigen::VectorXd::Zero(q);
  p.noise_var = 0.7;

  Curve c{"c", {0.1, 0.6, 0.9}, {0.3, -0.2, 1.1}};
  Eigen::MatrixXd S = basis.design_matrix(c.timepoints);
  Eigen::VectorXd mean = S * p.means.row(0).transpose();
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    double r = c.values[i] - mean[i];
    expected += -0.5 * (kLog2Pi + std::log(p.noise_var) + r * r / p.noise_var);
  }
  CHECK(funfuse::log_component_density(c, 1, p, basis) ==
        doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("density matches the dense long-double oracle on random instances") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SmallInstance inst = random_instance(seed);
    for (const Curve& c : inst.dataset.curves) {
      Eigen::MatrixXd S = inst.basis.design_matrix(c.timepoints);
      Eigen::MatrixXd sigma = dense_covariance(S, inst.params);
      Eigen::VectorXd y =
          Eigen::Map<const Eigen::VectorXd>(c.values.data(), c.values.size());
      for (int g = 1; g <= inst.params.n_clusters(); ++g) {
        Eigen::VectorXd mean = S * inst.params.means.row(g - 1).transpose();
        double expected = oracles::log_gaussian_density(y, mean, sigma);
        double got = funfuse::log_component_density(c, g, inst.params, inst.basis);
        CHECK(got == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("density decreases along a precision eigenvector direction") {
  SmallInstance inst = random_instance(77, 1);
  const Curve& base = inst.dataset.curves[0];
  Eigen::MatrixXd S = inst.basis.design_matrix(base.timepoints);
  Eigen::MatrixXd sigma = dense_covariance(S, inst.params);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  Eigen::VectorXd dir = es.eigenvectors().col(0);
  Eigen::VectorXd mean = S * inst.params.means.row(0).transpose();

  double prev = std::numeric_limits<double>::infinity();
  for (double scale : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    Curve c = base;
    Eigen::VectorXd y = mean + scale * dir;
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = y[i];
    double ld = funfuse::log_component_density(c, 1, inst.params, inst.basis);
    if (scale > 0.0) CHECK(ld < prev);
    prev = ld;
  }
}

TEST_CASE("posteriors: trivial cases and extended-precision oracle") {
  SUBCASE("single cluster") {
    SmallInstance inst = random_instance(5, 4, 3, 1);
    Eigen::MatrixXd post =
        funfuse::posteriors(inst.dataset, inst.params, inst.basis);
    CHECK((post.array() == 1.0).all());
  }

  SUBCASE("two identical components split evenly") {
    SmallInstance inst = random_instance(6, 4, 3, 2);
    inst.params.means.row(1) = inst.params.means.row(0);
    inst.params.mixing << 0.5, 0.5;
    Eigen::MatrixXd post =
        funfuse::posteriors(inst.dataset, inst.params, inst.basis);
    CHECK((post.array() - 0.5).abs().maxCoeff() < 1e-12);
  }

  SUBCASE("matches direct ratio in long double") {
    for (std::uint64_t seed = 40; seed < 60; ++seed) {
      SmallInstance inst = random_instance(seed, 3, 4, 3);
      Eigen::MatrixXd post =
          funfuse::posteriors(inst.dataset, inst.params, inst.basis);
      for (int i = 0; i < inst.dataset.n_curves(); ++i) {
        const Curve& c = inst.dataset.curves[i];
        Eigen::MatrixXd S = inst.basis.design_matrix(c.timepoints);
        Eigen::MatrixXd sigma = dense_covariance(S, inst.params);
        Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(c.values.data(),
                                                              c.values.size());
        long double total = 0.0L;
        std::vector<long double> dens(inst.params.n_clusters());
        for (int g = 0; g < inst.params.n_clusters(); ++g) {
          Eigen::VectorXd mean = S * inst.params.means.row(g).transpose();
          dens[g] = static_cast<long double>(inst.params.mixing[g]) *
                    std::exp(static_cast<long double>(
                        oracles::log_gaussian_density(y, mean, sigma)));
          total += dens[g];
        }
        CHECK(std::abs(post.row(i).sum() - 1.0) < 1e-10);
        for (int g = 0; g < inst.params.n_clusters(); ++g)
          CHECK(post(i, g) ==
                doctest::Approx(static_cast<double>(dens[g] / total))
                    .epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("random effect moments") {
  SUBCASE("zero Gamma gives zero moments") {
    SmallInstance inst = random_instance(8);
    inst.params.gamma_diag.setZero();
    auto m = funfuse::random_effect_moments(inst.dataset.curves[0], inst.params,
                                            inst.basis);
    CHECK(m.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.cov.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("huge noise recovers the prior") {
    SmallInstance inst = random_instance(9);
    inst.params.noise_var = 1e8;
    auto m = funfuse::random_effect_moments(inst.dataset.curves[0], inst.params,
                                            inst.basis);
    CHECK(m.mean.cwiseAbs().maxCoeff() < 1e-4);
    Eigen::MatrixXd gamma = inst.params.gamma_diag.asDiagonal();
    CHECK(((m.cov - gamma).cwiseAbs().maxCoeff() /
           inst.params.gamma_diag.maxCoeff()) < 1e-4);
  }

  SUBCASE("matches the dense oracle") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      SmallInstance inst = random_instance(seed);
      const Curve& c = inst.dataset.curves[0];
      Eigen::MatrixXd S = inst.basis.design_matrix(c.timepoints);
      Eigen::MatrixXd sigma = dense_covariance(S, inst.params);
      oracles::DenseGaussian inv = oracles::invert_spd(sigma);
      Eigen::MatrixXd sigma_inv(sigma.rows(), sigma.cols());
      for (Eigen::Index a = 0; a < sigma.rows(); ++a)
        for (Eigen::Index b = 0; b < sigma.cols(); ++b)
          sigma_inv(a, b) = static_cast<double>(inv.inverse[a][b]);

      Eigen::MatrixXd gamma = inst.params.gamma_diag.asDiagonal();
      Eigen::VectorXd y =
          Eigen::Map<const Eigen::VectorXd>(c.values.data(), c.values.size());
      auto m = funfuse::random_effect_moments(c, inst.params, inst.basis);

      for (int g = 0; g < inst.params.n_clusters(); ++g) {
        Eigen::VectorXd resid = y - S * inst.params.means.row(g).transpose();
        Eigen::VectorXd expect = gamma * S.transpose() * sigma_inv * resid;
        CHECK((m.mean.col(g) - expect).cwiseAbs().maxCoeff() < 1e-9);
      }
      Eigen::MatrixXd expect_cov =
          gamma - gamma * S.transpose() * sigma_inv * S * gamma;
      CHECK((m.cov - expect_cov).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("classification") {
  SUBCASE("single cluster returns 1") {
    SmallInstance inst = random_instance(3, 2, 3, 1);
    CHECK(funfuse::classify(inst.dataset.curves[0], inst.params, inst.basis) == 1);
  }

  SUBCASE("curve at a cluster mean with equal mixing") {
    SmallInstance inst = random_instance(4, 1, 5, 2);
    inst.params.mixing << 0.5, 0.5;
    inst.params.means.row(0).setConstant(5.0);
    inst.params.means.row(1).setConstant(-5.0);
    Curve c = inst.dataset.curves[0];
    Eigen::MatrixXd S = inst.basis.design_matrix(c.timepoints);
    Eigen::VectorXd y = S * inst.params.means.row(0).transpose();
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = y[i];
    CHECK(funfuse::classify(c, inst.params, inst.basis) == 1);
  }

  SUBCASE("argmax matches the dense oracle and is shift invariant") {
    for (std::uint64_t seed = 200; seed < 220; ++seed) {
      SmallInstance inst = random_instance(seed, 2, 4, 3);
      const Curve& c = inst.dataset.curves[0];
      Eigen::MatrixXd S = inst.basis.design_matrix(c.timepoints);
      Eigen::MatrixXd sigma = dense_covariance(S, inst.params);
      Eigen::VectorXd y =
          Eigen::Map<const Eigen::VectorXd>(c.values.data(), c.values.size());
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int g = 0; g < 3; ++g) {
        Eigen::VectorXd mean = S * inst.params.means.row(g).transpose();
        double score = std::log(inst.params.mixing[g]) +
                       oracles::log_gaussian_density(y, mean, sigma);
        if (score > best_score) {
          best_score = score;
          best = g;
        }
      }
      CHECK(funfuse::classify(c, inst.params, inst.basis) == best + 1);
    }
  }
}

TEST_CASE("posterior rows stay on the simplex for widely scaled params") {
  for (std::uint64_t seed = 300; seed < 310; ++seed) {
    SmallInstance inst = random_instance(seed, 5, 6, 3);
    inst.params.means *= 50.0;  // forces extreme log densities
    Eigen::MatrixXd post =
        funfuse::posteriors(inst.dataset, inst.params, inst.basis);
    for (int i = 0; i < post.rows(); ++i) {
      CHECK(std::abs(post.row(i).sum() - 1.0) < 1e-10);
      CHECK(post.row(i).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("invalid parameters are rejected") {
  SmallInstance inst = random_instance(1);
  ModelParams bad = inst.params;
  bad.mixing[0] += 0.1;
  CHECK_THROWS_AS(
      funfuse::posteriors(inst.dataset, bad, inst.basis), std::invalid_argument);
  bad = inst.params;
  bad.noise_var = 0.0;
  CHECK_THROWS_AS(
      funfuse::posteriors(inst.dataset, bad, inst.basis), std::invalid_argument);
  bad = inst.params;
  bad.gamma_diag[0] = -1.0;
  CHECK_THROWS_AS(
      funfuse::posteriors(inst.dataset, bad, inst.basis), std::invalid_argument);
}
