#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace funfuse {

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

/// Step-function partition associated with a B-spline basis: tau has q+1
/// entries with tau_1 = lo, tau_{q+1} = hi, and gap_j = tau_{j+1} - tau_j
/// equal to the integral of the j-th basis function. Coefficient j is
/// mapped onto the domain interval [tau_j, tau_{j+1}].
struct StepKnots {
  std::vector<double> tau;
  std::vector<double> gaps;
};

/// B-spline basis of order k (degree k-1) over a non-decreasing knot
/// sequence in a closed domain, with boundary knots carried at
/// multiplicity k for evaluation. The basis dimension is q = M + k where
/// M is the number of interior knots.
class BSplineBasis {
 public:
  /// Builds a basis with the given interior knots. Knots must be
  /// non-decreasing and strictly inside the domain.
  BSplineBasis(int order, std::vector<double> interior_knots, Interval domain);

  int order() const { return order_; }
  int dimension() const { return q_; }
  int n_interior() const { return static_cast<int>(interior_.size()); }
  const Interval& domain() const { return domain_; }

  /// Knot sequence x_0 .. x_{M+1} without boundary multiplicity.
  const std::vector<double>& knots() const { return knots_; }

  /// Values of all q basis functions at t. Components are nonnegative
  /// and sum to 1. Throws std::domain_error for t outside the domain;
  /// evaluation is right-continuous at lo and left-continuous at hi.
  Eigen::VectorXd evaluate(double t) const;

  /// s-th derivative values of all q basis functions at t (s < order).
  Eigen::VectorXd evaluate_derivative(double t, int s) const;

  /// n x q matrix whose i-th row is evaluate(timepoints[i]).
  Eigen::MatrixXd design_matrix(std::span<const double> timepoints) const;

  /// Roughness penalty matrix W = integral of Phi^(s) Phi^(s)^T over the
  /// domain, computed exactly by per-span Gauss-Legendre quadrature
  /// (the integrand is piecewise polynomial of degree 2(k-1-s)).
  /// Requires 0 <= s < order. s = 0 gives the Gram matrix of the basis.
  Eigen::MatrixXd roughness_matrix(int s) const;

  /// Step-function knot sequence: gap_j equals the support width of the
  /// j-th basis function divided by k, which is its integral, so the
  /// gaps telescope exactly to the domain length.
  StepKnots step_knots() const;

 private:
  int order_;
  int q_;
  Interval domain_;
  std::vector<double> interior_;
  std::vector<double> knots_;      // x_0 .. x_{M+1}
  std::vector<double> extended_;   // boundary knots at multiplicity k
};

/// Basis with n_interior evenly spaced interior knots; q = n_interior + k.
BSplineBasis make_basis(int order, int n_interior, Interval domain);

/// Max over the grid of |f(t) - f_step(t)| where f has the given basis
/// coefficients and f_step is the StepKnots indicator expansion with the
/// same coefficients (ties at interval boundaries resolve to the left
/// interval). Used to exercise the O(delta) approximation bound.
double step_approximation_error(const BSplineBasis& basis,
                                const Eigen::VectorXd& coefficients,
                                std::span<const double> grid);

}  // namespace funfuse
