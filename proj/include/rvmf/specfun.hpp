#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rvmf/core.hpp"

namespace rvmf::specfun {

// Below this argument the Bessel ratio A_p switches to its ascending series.
inline constexpr double kSmallArg = 1e-6;

namespace detail {

/// log( I_nu(x) / x^nu ), finite at x = 0 where it equals
/// -nu*log(2) - lgamma(nu+1).
///
/// Evaluated by the ascending power series
///   I_nu(x)/x^nu = 2^{-nu} sum_k (x^2/4)^k / (k! Gamma(nu+k+1)).
/// All terms are positive, so there is no cancellation at any argument;
/// the running sum is rescaled into a log offset before it can overflow.
inline double log_bessel_scaled(double nu, double x) {
  if (!(nu >= 0.0) || !std::isfinite(nu))
    throw std::domain_error("bessel order must be finite and >= 0");
  if (!(x >= 0.0) || !std::isfinite(x))
    throw std::domain_error("bessel argument must be finite and >= 0");

  const double base = -nu * std::log(2.0) - std::lgamma(nu + 1.0);
  if (x == 0.0) return base;

  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  double offset = 0.0;
  const double rescale_at = 1e280;
  const double log_rescale = std::log(rescale_at);

  for (unsigned long k = 0; k < 4000000UL; ++k) {
    term *= q / ((k + 1.0) * (nu + k + 1.0));
    sum += term;
    if (term > rescale_at) {
      term /= rescale_at;
      sum /= rescale_at;
      offset += log_rescale;
    }
    // terms are unimodal in k; stop once past the peak and negligible
    if (term < sum * 1e-19 && q < (k + 1.0) * (nu + k + 1.0)) break;
  }
  return base + offset + std::log(sum);
}

}  // namespace detail

/// ln I_nu(x) for nu >= 0, x >= 0. Returns -inf for x = 0, nu > 0.
inline double log_bessel_i(double nu, double x) {
  if (!(x >= 0.0) || !std::isfinite(x))
    throw std::domain_error("bessel argument must be finite and >= 0");
  if (x == 0.0) {
    if (nu == 0.0) return 0.0;
    if (nu > 0.0) return -std::numeric_limits<double>::infinity();
    throw std::domain_error("bessel order must be >= 0");
  }
  return detail::log_bessel_scaled(nu, x) + nu * std::log(x);
}

/// Bessel ratio A_p(x) = I_{p/2}(x) / I_{(p-2)/2}(x), in [0, 1).
inline double bessel_ratio_A(int p, double x) {
  require(p >= 2, "dimension must be >= 2");
  if (!(x >= 0.0)) throw std::domain_error("A_p argument must be >= 0");
  if (x < kSmallArg) {
    return x / p - x * x * x / (double(p) * p * (p + 2.0));
  }
  const double nu = 0.5 * (p - 2);
  return x * std::exp(detail::log_bessel_scaled(nu + 1.0, x) -
                      detail::log_bessel_scaled(nu, x));
}

/// d/dx A_p(x) = 1 - A_p(x)^2 - ((p-1)/x) A_p(x); series limit 1/p at 0+.
inline double bessel_ratio_A_prime(int p, double x) {
  require(p >= 2, "dimension must be >= 2");
  if (!(x >= 0.0)) throw std::domain_error("A_p' argument must be >= 0");
  if (x < kSmallArg) {
    return 1.0 / p - 3.0 * x * x / (double(p) * p * (p + 2.0));
  }
  const double a = bessel_ratio_A(p, x);
  return 1.0 - a * a - (p - 1.0) / x * a;
}

/// ln K_p(kappa) where K_p is the reciprocal normalising constant of the
/// von Mises-Fisher density; at kappa = 0 this is the log surface area of
/// the unit sphere in R^p.
inline double log_K(int p, double kappa) {
  require(p >= 2, "dimension must be >= 2");
  if (!(kappa >= 0.0)) throw std::domain_error("concentration must be >= 0");
  const double nu = 0.5 * (p - 2);
  return 0.5 * p * std::log(2.0 * M_PI) + detail::log_bessel_scaled(nu, kappa);
}

/// ln of the surface area of the unit sphere in R^p.
inline double log_surface_area(int p) { return log_K(p, 0.0); }

/// A_p(x)/x, with its x -> 0 limit 1/p.
inline double ratio_A_over_x(int p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("argument must be >= 0");
  if (x < kSmallArg) return 1.0 / p - x * x / (double(p) * p * (p + 2.0));
  return bessel_ratio_A(p, x) / x;
}

/// The Hessian coefficient 1 - A_p(x)^2 - (p/x) A_p(x).
/// Near zero the three terms cancel to O(x^2); the series branch keeps
/// the relative error bounded there.
inline double hess_coeff(int p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("argument must be >= 0");
  if (x < 1e-4) return -2.0 * x * x / (double(p) * p * (p + 2.0));
  const double a = bessel_ratio_A(p, x);
  return 1.0 - a * a - (double(p) / x) * a;
}

/// B(s*kappa) / kappa^2 where B(x) = 1 - A_p(x)^2 - (p/x) A_p(x), with the
/// joint small-kappa limit -2 s^2 / (p^2 (p+2)).
inline double hess_coeff_over_x2(int p, double s, double kappa) {
  const double u = s * kappa;
  if (u < 1e-4) return -2.0 * s * s / (double(p) * p * (p + 2.0));
  return hess_coeff(p, u) / (kappa * kappa);
}

/// (A_p(s*kappa) - A_p(kappa)) / kappa, with small-kappa limit (s-1)/p.
inline double ratio_A_diff_over_x(int p, double s, double kappa) {
  if (kappa < kSmallArg) return (s - 1.0) / p;
  return (bessel_ratio_A(p, s * kappa) - bessel_ratio_A(p, kappa)) / kappa;
}

}  // namespace rvmf::specfun
