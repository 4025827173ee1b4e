#include "funfuse/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace funfuse {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on the
// Legendre recurrence. Accurate to ~1e-15 for the small n used here.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n == 1) {
    nodes[0] = 0.0;
    weights[0] = 2.0;
  }
}

}  // namespace

BSplineBasis::BSplineBasis(int order, std::vector<double> interior_knots,
                           Interval domain)
    : order_(order), domain_(domain), interior_(std::move(interior_knots)) {
  if (order < 1) throw std::invalid_argument("B-spline order must be >= 1");
  if (!(domain.lo < domain.hi))
    throw std::invalid_argument("basis domain must have positive length");
  if (!std::is_sorted(interior_.begin(), interior_.end()))
    throw std::invalid_argument("interior knots must be non-decreasing");
  for (double x : interior_) {
    if (!(x > domain.lo && x < domain.hi))
      throw std::invalid_argument("interior knots must lie strictly inside the domain");
  }
  q_ = static_cast<int>(interior_.size()) + order_;

  knots_.reserve(interior_.size() + 2);
  knots_.push_back(domain_.lo);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.push_back(domain_.hi);

  extended_.reserve(q_ + order_);
  extended_.insert(extended_.end(), order_, domain_.lo);
  extended_.insert(extended_.end(), interior_.begin(), interior_.end());
  extended_.insert(extended_.end(), order_, domain_.hi);
}

BSplineBasis make_basis(int order, int n_interior, Interval domain) {
  if (n_interior < 0)
    throw std::invalid_argument("number of interior knots must be >= 0");
  if (!(domain.lo < domain.hi))
    throw std::invalid_argument("basis domain must have positive length");
  std::vector<double> interior(n_interior);
  double h = domain.length() / (n_interior + 1);
  for (int i = 0; i < n_interior; ++i) interior[i] = domain.lo + (i + 1) * h;
  return BSplineBasis(order, std::move(interior), domain);
}

Eigen::VectorXd BSplineBasis::evaluate(double t) const {
  return evaluate_derivative(t, 0);
}

Eigen::VectorXd BSplineBasis::evaluate_derivative(double t, int s) const {
  if (s < 0 || s >= order_)
    throw std::invalid_argument("derivative order must satisfy 0 <= s < k");
  if (!domain_.contains(t))
    throw std::domain_error("evaluation point outside the basis domain");

  const std::vector<double>& T = extended_;
  const int n_ext = static_cast<int>(T.size());  // q + k

  // Order-1 values: indicator of the knot span containing t, with
  // right-continuity in the interior and left-continuity at the upper
  // domain endpoint.
  std::vector<double> vals(n_ext - 1, 0.0);
  if (t >= domain_.hi) {
    for (int j = n_ext - 2; j >= 0; --j) {
      if (T[j] < T[j + 1]) {
        vals[j] = 1.0;
        break;
      }
    }
  } else {
    for (int j = 0; j < n_ext - 1; ++j) {
      if (T[j] <= t && t < T[j + 1]) {
        vals[j] = 1.0;
        break;
      }
    }
  }

  // Raise the order with the Cox-de Boor recurrence up to order k - s,
  // then switch to the derivative recurrence for the last s steps.
  for (int m = 2; m <= order_; ++m) {
    const int n_m = n_ext - m;  // number of order-m splines
    if (m <= order_ - s) {
      for (int j = 0; j < n_m; ++j) {
        double a = 0.0, b = 0.0;
        double d1 = T[j + m - 1] - T[j];
        double d2 = T[j + m] - T[j + 1];
        if (d1 > 0.0) a = (t - T[j]) / d1 * vals[j];
        if (d2 > 0.0) b = (T[j + m] - t) / d2 * vals[j + 1];
        vals[j] = a + b;
      }
    } else {
      for (int j = 0; j < n_m; ++j) {
        double a = 0.0, b = 0.0;
        double d1 = T[j + m - 1] - T[j];
        double d2 = T[j + m] - T[j + 1];
        if (d1 > 0.0) a = vals[j] / d1;
        if (d2 > 0.0) b = vals[j + 1] / d2;
        vals[j] = (m - 1) * (a - b);
      }
    }
  }

  Eigen::VectorXd out(q_);
  for (int j = 0; j < q_; ++j) out[j] = vals[j];
  return out;
}

Eigen::MatrixXd BSplineBasis::design_matrix(
    std::span<const double> timepoints) const {
  Eigen::MatrixXd S(static_cast<Eigen::Index>(timepoints.size()), q_);
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    S.row(i) = evaluate(timepoints[i]).transpose();
  return S;
}

Eigen::MatrixXd BSplineBasis::roughness_matrix(int s) const {
  if (s < 0 || s >= order_)
    throw std::invalid_argument("roughness derivative order must satisfy 0 <= s < k");

  // Phi^(s) is piecewise polynomial of degree k-1-s on each knot span, so
  // the integrand has degree 2(k-1-s); n-point Gauss-Legendre is exact
  // for degree 2n-1, hence n = max(1, k - s) nodes suffice.
  int n_nodes = std::max(1, order_ - s);
  std::vector<double> gx, gw;
  gauss_legendre(n_nodes, gx, gw);

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(q_, q_);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    double a = knots_[i], b = knots_[i + 1];
    if (!(b > a)) continue;
    double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int m = 0; m < n_nodes; ++m) {
      Eigen::VectorXd phi = evaluate_derivative(mid + half * gx[m], s);
      W.noalias() += (half * gw[m]) * (phi * phi.transpose());
    }
  }
  return 0.5 * (W + W.transpose());
}

StepKnots BSplineBasis::step_knots() const {
  const std::vector<double>& x = knots_;  // x_0 .. x_{M+1}
  const int M1 = static_cast<int>(x.size()) - 1;

  StepKnots sk;
  sk.gaps.resize(q_);
  sk.tau.resize(q_ + 1);
  sk.tau[0] = domain_.lo;
  for (int j = 1; j <= q_; ++j) {
    int hi = std::min(M1, j);
    int lo = std::max(0, j - order_);
    sk.gaps[j - 1] = (x[hi] - x[lo]) / order_;
    sk.tau[j] = sk.tau[j - 1] + sk.gaps[j - 1];
  }
  // The gaps are the basis-function integrals, so they telescope to the
  // domain length; pin the endpoint against float drift.
  sk.tau[q_] = domain_.hi;
  return sk;
}

double step_approximation_error(const BSplineBasis& basis,
                                const Eigen::VectorXd& coefficients,
                                std::span<const double> grid) {
  if (coefficients.size() != basis.dimension())
    throw std::invalid_argument("coefficient length must equal basis dimension");
  StepKnots sk = basis.step_knots();
  double worst = 0.0;
  for (double t : grid) {
    double f = basis.evaluate(t).dot(coefficients);
    // Smallest j with t <= tau_{j+1}: ties resolve to the left interval.
    auto it = std::lower_bound(sk.tau.begin() + 1, sk.tau.end(), t);
    int j = static_cast<int>(it - sk.tau.begin()) - 1;
    j = std::clamp(j, 0, basis.dimension() - 1);
    worst = std::max(worst, std::abs(f - coefficients[j]));
  }
  return worst;
}

}  // namespace funfuse
