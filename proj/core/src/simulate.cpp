#include "funfuse/simulate.hpp"

#include <cstdio>
#include <stdexcept>

#include "funfuse/ecm.hpp"
#include "funfuse/rng.hpp"

namespace funfuse {

Scenario scenario_from_string(const std::string& name) {
  if (name == "I" || name == "1") return Scenario::I;
  if (name == "II" || name == "2") return Scenario::II;
  if (name == "III" || name == "3") return Scenario::III;
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected I, II or III)");
}

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::I: return "I";
    case Scenario::II: return "II";
    case Scenario::III: return "III";
  }
  throw std::invalid_argument("invalid scenario");
}

int scenario_clusters(Scenario scenario) {
  switch (scenario) {
    case Scenario::I: return 2;
    case Scenario::II: return 3;
    case Scenario::III: return 4;
  }
  throw std::invalid_argument("invalid scenario");
}

void ScenarioSpec::validate() const {
  // zero is allowed for the degenerate noiseless generator
  if (!(sigma_e >= 0.0))
    throw std::invalid_argument("sigma_e must be nonnegative");
  if (!(sigma_c >= 0.0))
    throw std::invalid_argument("sigma_c must be nonnegative");
  if (n_per_cluster < 1)
    throw std::invalid_argument("n_per_cluster must be >= 1");
  if (n_points < 1) throw std::invalid_argument("n_points must be >= 1");
}

Eigen::MatrixXd scenario_means(Scenario scenario) {
  const int q = 30;
  auto fill = [&](Eigen::MatrixXd& m, int g, int from, int to, double v) {
    for (int j = from; j <= to; ++j) m(g, j - 1) = v;  // 1-based blocks
  };
  switch (scenario) {
    case Scenario::I: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, q);
      fill(m, 0, 1, 5, 1.5);
      fill(m, 1, 1, 5, -1.5);
      return m;
    }
    case Scenario::II: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, q);
      fill(m, 0, 1, 5, 3.0);
      fill(m, 0, 6, 10, 1.5);
      fill(m, 1, 6, 10, 1.5);
      fill(m, 2, 6, 10, -1.5);
      return m;
    }
    case Scenario::III: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, q);
      fill(m, 0, 1, 5, 1.5);
      fill(m, 0, 6, 10, 3.0);
      fill(m, 0, 11, 15, 1.5);
      fill(m, 1, 1, 5, 1.5);
      fill(m, 1, 11, 15, 1.5);
      fill(m, 2, 1, 5, -1.5);
      fill(m, 2, 11, 15, -1.5);
      fill(m, 3, 1, 5, -1.5);
      fill(m, 3, 6, 10, -3.0);
      fill(m, 3, 11, 15, -1.5);
      return m;
    }
  }
  throw std::invalid_argument("invalid scenario");
}

BSplineBasis study_basis() { return make_basis(4, 26, {0.0, 1.0}); }

Simulated generate(const ScenarioSpec& spec) {
  spec.validate();
  const BSplineBasis basis = study_basis();
  const Eigen::MatrixXd means = scenario_means(spec.scenario);
  const int G = static_cast<int>(means.rows());
  const int q = basis.dimension();

  std::vector<double> grid(spec.n_points);
  for (int i = 0; i < spec.n_points; ++i)
    grid[i] = spec.n_points == 1
                  ? 0.0
                  : static_cast<double>(i) / (spec.n_points - 1);
  const Eigen::MatrixXd S = basis.design_matrix(grid);

  Rng rng(spec.seed);
  Simulated out;
  out.dataset.domain = basis.domain();
  out.dataset.curves.reserve(static_cast<std::size_t>(G) * spec.n_per_cluster);
  std::vector<int> labels;
  labels.reserve(out.dataset.curves.capacity());

  char id[32];
  int serial = 0;
  for (int g = 0; g < G; ++g) {
    for (int r = 0; r < spec.n_per_cluster; ++r) {
      Eigen::VectorXd eta(q);
      for (int j = 0; j < q; ++j)
        eta[j] = means(g, j) + spec.sigma_c * rng.normal();
      Eigen::VectorXd y = S * eta;
      for (int i = 0; i < spec.n_points; ++i)
        y[i] += spec.sigma_e * rng.normal();

      std::snprintf(id, sizeof(id), "curve_%05d", ++serial);
      Curve c;
      c.id = id;
      c.timepoints = grid;
      c.values.assign(y.data(), y.data() + y.size());
      out.dataset.curves.push_back(std::move(c));
      labels.push_back(g + 1);
    }
  }
  out.dataset.true_labels = labels;

  out.truth.true_mean_coefficients = means;
  out.truth.true_labels = std::move(labels);
  out.truth.noninformative_intervals =
      fused_regions(means, basis.step_knots(), 0.0);
  return out;
}

}  // namespace funfuse
