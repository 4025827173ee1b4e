#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "funfuse/basis.hpp"
#include "funfuse/dataset.hpp"

namespace funfuse {

enum class Scenario { I, II, III };

Scenario scenario_from_string(const std::string& name);
std::string to_string(Scenario scenario);
int scenario_clusters(Scenario scenario);  // 2, 3, 4

/// Monte Carlo generator settings. Data are drawn on [0, 1] from a
/// 30-dimensional cubic B-spline expansion: coefficients are Gaussian
/// around the per-cluster mean vectors with covariance sigma_c^2 I, and
/// observations add Gaussian measurement noise with sd sigma_e on an
/// evenly spaced grid of n_points.
struct ScenarioSpec {
  Scenario scenario = Scenario::I;
  double sigma_e = 1.0;
  int n_per_cluster = 200;
  int n_points = 50;
  double sigma_c = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// The noise standard deviations used by the study convenience command.
inline constexpr std::array<double, 5> kNoiseSdGrid{1.0, 1.5, 2.0, 2.5, 3.0};

/// Per-cluster true coefficient mean vectors (G_true x 30).
Eigen::MatrixXd scenario_means(Scenario scenario);

/// The generating basis: cubic B-splines with 26 evenly spaced interior
/// knots (dimension 30) on [0, 1].
BSplineBasis study_basis();

struct Simulated {
  Dataset dataset;
  GroundTruth truth;
};

/// Draws a dataset with full ground truth. Bit-identical for identical
/// spec (all randomness flows from the seed through the library Rng);
/// per curve, the q coefficient draws precede the n_points noise draws.
/// Noninformative intervals are the step-knot regions where the true
/// mean coefficients of a pair coincide exactly.
Simulated generate(const ScenarioSpec& spec);

}  // namespace funfuse
