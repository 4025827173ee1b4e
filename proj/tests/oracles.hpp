// Independent reference implementations used only by tests. These must
// not share code paths with the library: B-splines via divided
// differences of truncated powers, Gaussian densities via explicit
// long-double elimination, and a derivative-free simplex minimizer.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "funfuse/basis.hpp"

namespace oracles {

inline double trunc_pow(double x, double t, int p) {
  if (x <= t) return 0.0;
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= (x - t);
  return r;
}

// m-th derivative in x of x -> (x - t)_+^{k-1}.
inline double trunc_pow_deriv(double x, double t, int k, int m) {
  int p = k - 1 - m;
  if (p < 0) return 0.0;
  double c = 1.0;
  for (int i = 0; i < m; ++i) c *= (k - 1 - i);
  return c * trunc_pow(x, t, p);
}

// Divided difference of x -> (x - t)_+^{k-1} over possibly repeated
// nodes; repeated nodes fall back to the derivative definition.
inline double divided_difference(std::span<const double> nodes, double t,
                                 int k) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<double>> dd(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) dd[i][i] = trunc_pow(nodes[i], t, k - 1);
  for (int m = 1; m < n; ++m) {
    for (int i = 0; i + m < n; ++i) {
      if (nodes[i + m] == nodes[i]) {
        double fact = 1.0;
        for (int f = 2; f <= m; ++f) fact *= f;
        dd[i][i + m] = trunc_pow_deriv(nodes[i], t, k, m) / fact;
      } else {
        dd[i][i + m] =
            (dd[i + 1][i + m] - dd[i][i + m - 1]) / (nodes[i + m] - nodes[i]);
      }
    }
  }
  return dd[0][n - 1];
}

// Value of the j-th (0-based) B-spline of order k at t, via
//   B_j(t) = (T_{j+k} - T_j) [T_j, ..., T_{j+k}] (x - t)_+^{k-1}.
inline double bspline_value(const funfuse::BSplineBasis& basis, int j,
                            double t) {
  const int k = basis.order();
  std::vector<double> ext;
  const std::vector<double>& x = basis.knots();
  ext.insert(ext.end(), k, x.front());
  ext.insert(ext.end(), x.begin() + 1, x.end() - 1);
  ext.insert(ext.end(), k, x.back());

  double width = ext[j + k] - ext[j];
  if (!(width > 0.0)) return 0.0;
  std::span<const double> nodes(ext.data() + j, static_cast<std::size_t>(k) + 1);
  return width * divided_difference(nodes, t, k);
}

// ---------------------------------------------------------------------
// Long-double dense Gaussian computations (explicit inverse and
// determinant via Gauss-Jordan elimination with partial pivoting).
// ---------------------------------------------------------------------

struct DenseGaussian {
  long double log_det = 0.0L;
  std::vector<std::vector<long double>> inverse;
};

inline DenseGaussian invert_spd(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<std::vector<long double>> m(n, std::vector<long double>(2 * n, 0.0L));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m[i][j] = static_cast<long double>(A(i, j));
    m[i][n + i] = 1.0L;
  }
  long double log_det = 0.0L;
  int sign = 1;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(static_cast<double>(m[r][c])) >
          std::fabs(static_cast<double>(m[piv][c])))
        piv = r;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      sign = -sign;
    }
    if (m[c][c] == 0.0L) throw std::runtime_error("oracle: singular matrix");
    log_det += std::log(std::fabs(static_cast<double>(m[c][c])));
    if (m[c][c] < 0.0L) sign = -sign;
    long double inv = 1.0L / m[c][c];
    for (int j = 0; j < 2 * n; ++j) m[c][j] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == c || m[r][c] == 0.0L) continue;
      long double f = m[r][c];
      for (int j = 0; j < 2 * n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  if (sign < 0) throw std::runtime_error("oracle: negative determinant");
  DenseGaussian out;
  out.log_det = log_det;
  out.inverse.assign(n, std::vector<long double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.inverse[i][j] = m[i][n + j];
  return out;
}

inline long double quad_form(const DenseGaussian& g,
                             const Eigen::VectorXd& r) {
  const int n = static_cast<int>(r.size());
  long double q = 0.0L;
  for (int i = 0; i < n; ++i) {
    long double row = 0.0L;
    for (int j = 0; j < n; ++j)
      row += g.inverse[i][j] * static_cast<long double>(r[j]);
    q += static_cast<long double>(r[i]) * row;
  }
  return q;
}

inline double log_gaussian_density(const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& cov) {
  const long double log2pi = 1.8378770664093454836L;
  DenseGaussian g = invert_spd(cov);
  Eigen::VectorXd r = y - mean;
  long double v = -0.5L * (y.size() * log2pi + g.log_det + quad_form(g, r));
  return static_cast<double>(v);
}

// ---------------------------------------------------------------------
// Nelder-Mead simplex minimizer with restarts; adequate for the small
// convex problems the tests pose.
// ---------------------------------------------------------------------

inline double nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          Eigen::VectorXd& x, double step, int max_iters,
                          double ftol) {
  const int n = static_cast<int>(x.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x);
  std::vector<double> vals(n + 1);
  for (int i = 1; i <= n; ++i) pts[i][i - 1] += step;
  for (int i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  for (int it = 0; it < max_iters; ++it) {
    std::vector<int> ord(n + 1);
    for (int i = 0; i <= n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(),
              [&](int a, int b) { return vals[a] < vals[b]; });
    if (vals[ord[n]] - vals[ord[0]] < ftol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[ord[i]];
    centroid /= n;
    int worst = ord[n];

    Eigen::VectorXd refl = centroid + (centroid - pts[worst]);
    double frefl = f(refl);
    if (frefl < vals[ord[0]]) {
      Eigen::VectorXd exp2 = centroid + 2.0 * (centroid - pts[worst]);
      double fexp = f(exp2);
      if (fexp < frefl) {
        pts[worst] = exp2;
        vals[worst] = fexp;
      } else {
        pts[worst] = refl;
        vals[worst] = frefl;
      }
    } else if (frefl < vals[ord[n - 1]]) {
      pts[worst] = refl;
      vals[worst] = frefl;
    } else {
      Eigen::VectorXd contr = centroid + 0.5 * (pts[worst] - centroid);
      double fcontr = f(contr);
      if (fcontr < vals[worst]) {
        pts[worst] = contr;
        vals[worst] = fcontr;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[ord[i]] = pts[ord[0]] + 0.5 * (pts[ord[i]] - pts[ord[0]]);
          vals[ord[i]] = f(pts[ord[i]]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  x = pts[best];
  return vals[best];
}

// Golden-section line searches along a fixed set of directions; cleans
// up the simplex result near kinks of the absolute-value terms, where
// descent may require moving tied coordinates together.
inline double direction_polish(
    const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd& x,
    const std::vector<Eigen::VectorXd>& directions, double radius,
    int cycles) {
  const double phi = 0.6180339887498949;
  double fx = f(x);
  for (int c = 0; c < cycles; ++c) {
    for (const Eigen::VectorXd& dir : directions) {
      double lo = -radius, hi = radius;
      double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
      double fa = f(x + a * dir), fb = f(x + b * dir);
      for (int it = 0; it < 60; ++it) {
        if (fa < fb) {
          hi = b;
          b = a;
          fb = fa;
          a = hi - phi * (hi - lo);
          fa = f(x + a * dir);
        } else {
          lo = a;
          a = b;
          fa = fb;
          b = lo + phi * (hi - lo);
          fb = f(x + b * dir);
        }
      }
      Eigen::VectorXd xm = x + 0.5 * (lo + hi) * dir;
      double fm = f(xm);
      if (fm < fx) {
        x = std::move(xm);
        fx = fm;
      }
    }
    radius = std::max(radius * 0.5, 1e-10);
  }
  return fx;
}

// Derivative-free minimization of a convex objective: alternating
// rounds of simplex restarts and line-search polish along coordinates,
// caller-supplied tied directions (joint and opposing moves of
// coordinates a fused penalty couples), and seeded random directions so
// kinked level sets cannot stall every search direction at once.
inline double minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                       Eigen::VectorXd& x, double step,
                       const std::vector<std::pair<int, int>>& joint = {}) {
  const int n = static_cast<int>(x.size());
  std::vector<Eigen::VectorXd> directions;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[i] = 1.0;
    directions.push_back(std::move(e));
  }
  for (auto [i, j] : joint) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[i] = 1.0;
    e[j] = 1.0;
    directions.push_back(e);
    e[j] = -1.0;
    directions.push_back(std::move(e));
  }
  std::mt19937_64 gen(12048);
  std::vector<Eigen::VectorXd> random_dirs;
  for (int r = 0; r < 24 * n; ++r) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
      double u1 = 1.0 - (gen() >> 11) * 0x1.0p-53;
      double u2 = (gen() >> 11) * 0x1.0p-53;
      d[i] = std::sqrt(-2.0 * std::log(u1)) *
             std::cos(2.0 * 3.14159265358979323846 * u2);
    }
    random_dirs.push_back(d / d.norm());
  }

  double best = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 3; ++round) {
    for (int restart = 0; restart < 4; ++restart) {
      best = std::min(best, nelder_mead(f, x, step, 20000, 1e-13));
      step *= 0.25;
    }
    best = std::min(best, direction_polish(f, x, directions, 0.05, 45));
    best = std::min(best, direction_polish(f, x, random_dirs, 0.02, 4));
    step = 0.05;
  }
  best = std::min(best, direction_polish(f, x, directions, 0.01, 45));
  return best;
}

}  // namespace oracles
