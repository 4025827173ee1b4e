#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "funfuse/simulate.hpp"

using namespace funfuse;

TEST_CASE("scenario mean tables") {
  Eigen::MatrixXd m1 = scenario_means(Scenario::I);
  REQUIRE(m1.rows() == 2);
  REQUIRE(m1.cols() == 30);
  for (int j = 0; j < 5; ++j) {
    CHECK(m1(0, j) == 1.5);
    CHECK(m1(1, j) == -1.5);
  }
  for (int j = 5; j < 30; ++j) {
    CHECK(m1(0, j) == 0.0);
    CHECK(m1(1, j) == 0.0);
  }

  Eigen::MatrixXd m2 = scenario_means(Scenario::II);
  REQUIRE(m2.rows() == 3);
  for (int j = 0; j < 5; ++j) CHECK(m2(0, j) == 3.0);
  for (int j = 5; j < 10; ++j) CHECK(m2(0, j) == 1.5);
  for (int j = 10; j < 30; ++j) CHECK(m2(0, j) == 0.0);
  for (int j = 0; j < 5; ++j) CHECK(m2(1, j) == 0.0);
  for (int j = 5; j < 10; ++j) CHECK(m2(1, j) == 1.5);
  for (int j = 5; j < 10; ++j) CHECK(m2(2, j) == -1.5);

  Eigen::MatrixXd m3 = scenario_means(Scenario::III);
  REQUIRE(m3.rows() == 4);
  for (int j = 0; j < 5; ++j) CHECK(m3(3, j) == -1.5);
  for (int j = 5; j < 10; ++j) CHECK(m3(3, j) == -3.0);
  for (int j = 10; j < 15; ++j) CHECK(m3(3, j) == -1.5);
  for (int j = 15; j < 30; ++j) CHECK(m3(3, j) == 0.0);
  for (int j = 5; j < 10; ++j) CHECK(m3(0, j) == 3.0);
}

TEST_CASE("noiseless degenerate generation reproduces the mean curves") {
  ScenarioSpec spec;
  spec.scenario = Scenario::I;
  spec.sigma_e = 0.0;
  spec.sigma_c = 0.0;
  spec.n_per_cluster = 2;
  spec.seed = 3;
  Simulated sim = generate(spec);
  BSplineBasis basis = study_basis();
  Eigen::MatrixXd means = scenario_means(Scenario::I);

  for (int i = 0; i < sim.dataset.n_curves(); ++i) {
    int g = sim.truth.true_labels[i] - 1;
    Eigen::MatrixXd S = basis.design_matrix(sim.dataset.curves[i].timepoints);
    Eigen::VectorXd expect = S * means.row(g).transpose();
    for (int j = 0; j < expect.size(); ++j)
      CHECK(sim.dataset.curves[i].values[j] ==
            doctest::Approx(expect[j]).epsilon(1e-14));
  }
}

TEST_CASE("scenario III shapes") {
  ScenarioSpec spec;
  spec.scenario = Scenario::III;
  spec.seed = 4;
  Simulated sim = generate(spec);
  CHECK(sim.dataset.n_curves() == 800);
  for (const Curve& c : sim.dataset.curves) CHECK(c.values.size() == 50);
  CHECK(sim.truth.true_mean_coefficients.rows() == 4);
  CHECK(sim.truth.noninformative_intervals.size() == 6);
  CHECK(*std::max_element(sim.truth.true_labels.begin(),
                          sim.truth.true_labels.end()) == 4);
}

TEST_CASE("generation is bit-identical for identical specs") {
  ScenarioSpec spec;
  spec.scenario = Scenario::II;
  spec.sigma_e = 2.0;
  spec.n_per_cluster = 5;
  spec.seed = 99;
  Simulated a = generate(spec);
  Simulated b = generate(spec);
  REQUIRE(a.dataset.n_curves() == b.dataset.n_curves());
  for (int i = 0; i < a.dataset.n_curves(); ++i) {
    CHECK(a.dataset.curves[i].id == b.dataset.curves[i].id);
    CHECK(a.dataset.curves[i].values == b.dataset.curves[i].values);
    CHECK(a.dataset.curves[i].timepoints == b.dataset.curves[i].timepoints);
  }
  ScenarioSpec other = spec;
  other.seed = 100;
  Simulated c = generate(other);
  CHECK(a.dataset.curves[0].values != c.dataset.curves[0].values);
}

TEST_CASE("coefficient sample mean concentrates on the table rows") {
  // sigma_e = 0 lets the 30 coefficients be recovered exactly from the
  // 50-point grid, so the generator's normal draws are checked directly.
  ScenarioSpec spec;
  spec.scenario = Scenario::I;
  spec.sigma_e = 0.0;
  spec.n_per_cluster = 10000;  // 10^4 draws per cluster row
  spec.seed = 12345;
  Simulated sim = generate(spec);

  BSplineBasis basis = study_basis();
  Eigen::MatrixXd S = basis.design_matrix(sim.dataset.curves[0].timepoints);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);

  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(2, 30);
  Eigen::Vector2i counts{0, 0};
  for (int i = 0; i < sim.dataset.n_curves(); ++i) {
    const Curve& c = sim.dataset.curves[i];
    Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(c.values.data(), c.values.size());
    int g = sim.truth.true_labels[i] - 1;
    sums.row(g) += qr.solve(y).transpose();
    counts[g] += 1;
  }
  Eigen::MatrixXd table = scenario_means(Scenario::I);
  const double tol = 3.0 * spec.sigma_c / 100.0;
  for (int g = 0; g < 2; ++g)
    for (int j = 0; j < 30; ++j)
      CHECK(std::abs(sums(g, j) / counts[g] - table(g, j)) < tol);
}

TEST_CASE("empirical noise variance tracks sigma_e^2") {
  ScenarioSpec spec;
  spec.scenario = Scenario::I;
  spec.sigma_e = 1.5;
  spec.sigma_c = 0.0;  // residual against the mean curve is pure noise
  spec.n_per_cluster = 1000;  // 10^5 points
  spec.seed = 777;
  Simulated sim = generate(spec);

  BSplineBasis basis = study_basis();
  Eigen::MatrixXd S = basis.design_matrix(sim.dataset.curves[0].timepoints);
  Eigen::MatrixXd table = scenario_means(Scenario::I);
  double ss = 0.0;
  long n = 0;
  for (int i = 0; i < sim.dataset.n_curves(); ++i) {
    const Curve& c = sim.dataset.curves[i];
    Eigen::VectorXd mean =
        S * table.row(sim.truth.true_labels[i] - 1).transpose();
    for (std::size_t j = 0; j < c.values.size(); ++j) {
      double r = c.values[j] - mean[j];
      ss += r * r;
      ++n;
    }
  }
  double var = ss / n;
  CHECK(std::abs(var - spec.sigma_e * spec.sigma_e) <
        0.05 * spec.sigma_e * spec.sigma_e);
}

TEST_CASE("scenario I noninformative region spans coefficients 6..30") {
  ScenarioSpec spec;
  spec.scenario = Scenario::I;
  spec.n_per_cluster = 1;
  spec.seed = 0;
  Simulated sim = generate(spec);
  StepKnots sk = study_basis().step_knots();

  REQUIRE(sim.truth.noninformative_intervals.size() == 1);
  const PairIntervals& p = sim.truth.noninformative_intervals[0];
  CHECK(p.g1 == 1);
  CHECK(p.g2 == 2);
  REQUIRE(p.intervals.size() == 1);
  CHECK(p.intervals[0].lo == doctest::Approx(sk.tau[5]).epsilon(1e-14));
  CHECK(p.intervals[0].hi == doctest::Approx(1.0));
}

TEST_CASE("scenario II pairwise noninformative structure") {
  ScenarioSpec spec;
  spec.scenario = Scenario::II;
  spec.n_per_cluster = 1;
  spec.seed = 0;
  Simulated sim = generate(spec);
  StepKnots sk = study_basis().step_knots();

  auto find_pair = [&](int a, int b) -> const PairIntervals& {
    for (const auto& p : sim.truth.noninformative_intervals)
      if (p.g1 == a && p.g2 == b) return p;
    throw std::runtime_error("pair not found");
  };

  // clusters 1 and 2 differ on coefficients 1..5 only
  const PairIntervals& p12 = find_pair(1, 2);
  REQUIRE(p12.intervals.size() == 1);
  CHECK(p12.intervals[0].lo == doctest::Approx(sk.tau[5]));
  // clusters 1 and 3 differ on coefficients 1..10
  const PairIntervals& p13 = find_pair(1, 3);
  REQUIRE(p13.intervals.size() == 1);
  CHECK(p13.intervals[0].lo == doctest::Approx(sk.tau[10]));
  // clusters 2 and 3 differ on coefficients 6..10 only
  const PairIntervals& p23 = find_pair(2, 3);
  REQUIRE(p23.intervals.size() == 2);
  CHECK(p23.intervals[0].lo == doctest::Approx(0.0));
  CHECK(p23.intervals[0].hi == doctest::Approx(sk.tau[5]));
  CHECK(p23.intervals[1].lo == doctest::Approx(sk.tau[10]));
  CHECK(p23.intervals[1].hi == doctest::Approx(1.0));
}
