#pragma once

#include <cmath>

#include "rvmf/core.hpp"
#include "rvmf/rng.hpp"
#include "rvmf/specfun.hpp"

namespace rvmf::vmf {

// Cap on the moment estimate of the concentration; the resultant length of
// near-degenerate data would otherwise send the optimiser start to infinity.
inline constexpr double kKappaCap = 1e5;

/// Log density of vM_p(xi) at a unit vector x, natural parametrisation:
/// xi' x - log K_p(||xi||).
inline double log_density(const Vector& x, const Vector& xi) {
  require(x.size() == xi.size(), "dimension mismatch between x and xi");
  const int p = static_cast<int>(x.size());
  return xi.dot(x) - specfun::log_K(p, xi.norm());
}

namespace detail {

/// Cosine component sampler for the tangent-normal decomposition
/// (Ulrich 1984 / Wood 1994 rejection scheme; exact for any p >= 2).
inline double sample_cosine(int p, double kappa, Rng& rng) {
  const double d = p - 1.0;
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + d * d)) / d;
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + d * std::log(1.0 - x0 * x0);
  for (;;) {
    const double z = rng.beta(0.5 * d, 0.5 * d);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform();
    if (kappa * w + d * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

}  // namespace detail

/// Draws one point from vM_p(xi) using the generator's stream.
inline Vector sample_one(const Vector& xi, Rng& rng) {
  const int p = static_cast<int>(xi.size());
  require(p >= 2, "dimension must be >= 2");
  const double kappa = xi.norm();
  if (kappa == 0.0) {
    Vector z = rng.gaussian_vector(p);
    return z / z.norm();
  }
  const Vector mu = xi / kappa;
  const double w = detail::sample_cosine(p, kappa, rng);
  // uniform direction on the subsphere orthogonal to mu
  Vector v = rng.gaussian_vector(p);
  v -= mu.dot(v) * mu;
  double vn = v.norm();
  while (vn < 1e-12) {  // astronomically rare, but keep the draw valid
    v = rng.gaussian_vector(p);
    v -= mu.dot(v) * mu;
    vn = v.norm();
  }
  v /= vn;
  Vector x = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  x /= x.norm();
  return x;
}

/// n independent draws from vM_p(xi); bit-reproducible for a fixed seed.
inline Dataset sample(const Vector& xi, int n, std::uint64_t seed) {
  require(n >= 1, "sample size must be >= 1");
  Rng rng(seed);
  Dataset data;
  data.points.resize(n, xi.size());
  for (int i = 0; i < n; ++i) data.points.row(i) = sample_one(xi, rng);
  return data;
}

namespace detail {

/// Inverts the mean identity A_p(kappa) = rbar: the standard approximation
/// kappa = R(p - R^2)/(1 - R^2) refined by a few Newton steps.
inline double kappa_from_rbar(int p, double rbar) {
  double kappa = rbar * (p - rbar * rbar) / std::max(1.0 - rbar * rbar, 1e-300);
  if (!(kappa < kKappaCap)) return kKappaCap;
  for (int step = 0; step < 5; ++step) {
    const double deriv = specfun::bessel_ratio_A_prime(p, kappa);
    if (!(deriv > 1e-12)) break;
    double next = kappa - (specfun::bessel_ratio_A(p, kappa) - rbar) / deriv;
    if (!(next > 0.0)) next = 0.5 * kappa;
    if (!(next < kKappaCap)) return kKappaCap;
    if (std::abs(next - kappa) <= 1e-10 * (1.0 + kappa)) return next;
    kappa = next;
  }
  return kappa;
}

}  // namespace detail

/// Moment-based initialiser: xi0 = kappa_hat * xbar/||xbar|| with kappa_hat
/// solving the mean identity A_p(kappa) = ||xbar||.
inline Vector moment_estimate(const Dataset& data) {
  const int p = data.p();
  const Vector xbar = data.points.colwise().mean();
  const double rbar = xbar.norm();
  if (rbar <= 0.0) throw numerical_error("degenerate data: zero mean resultant");
  return detail::kappa_from_rbar(p, rbar) / rbar * xbar;
}

/// Moment initialiser for a reweighted sample (weights summing to n).
inline Vector weighted_moment_estimate(const Dataset& data, const Vector& w) {
  require(w.size() == data.n(), "weight length mismatch");
  const int p = data.p();
  const Vector xbar = data.points.transpose() * w / w.sum();
  const double rbar = xbar.norm();
  if (rbar <= 0.0) throw numerical_error("degenerate data: zero mean resultant");
  return detail::kappa_from_rbar(p, rbar) / rbar * xbar;
}

}  // namespace rvmf::vmf
