// Independent numerical oracles used by the test suites. Everything here
// deliberately avoids the library's own evaluation paths.
#pragma once

#include <cmath>
#include <functional>

#include "rvmf/core.hpp"

namespace oracles {

using rvmf::Matrix;
using rvmf::Vector;

/// 30-term ascending power series for ln I_nu(x), summed directly with
/// per-term lgamma. Accurate to ~1e-12 relative for x up to ~30.
inline double series_log_bessel(double nu, double x, int terms = 30) {
  // log-sum-exp accumulation keeps the sum representable for large x
  double max_lt = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  const double lhalf = std::log(0.5 * x);
  for (int k = 0; k < terms; ++k) {
    const double lt = (2.0 * k + nu) * lhalf - std::lgamma(k + 1.0) -
                      std::lgamma(nu + k + 1.0);
    if (lt > max_lt) {
      sum = sum * std::exp(max_lt - lt) + 1.0;
      max_lt = lt;
    } else {
      sum += std::exp(lt - max_lt);
    }
  }
  return max_lt + std::log(sum);
}

/// Periodic trapezoidal quadrature of h(theta) over the unit circle;
/// spectrally accurate for smooth integrands.
inline double circle_quadrature(const std::function<double(double)>& h,
                                int points = 10000) {
  double sum = 0.0;
  const double step = 2.0 * M_PI / points;
  for (int i = 0; i < points; ++i) sum += h(i * step);
  return sum * step;
}

/// Central finite difference of a scalar function of a vector.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f,
                          const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

/// Central finite difference of a vector function (column j = d f / d x_j).
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f,
                          const Vector& x, double h = 1e-5) {
  Matrix j(x.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    j.col(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return j;
}

}  // namespace oracles
