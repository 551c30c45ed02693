#pragma once

#include <cmath>
#include <optional>

#include "rvmf/core.hpp"
#include "rvmf/specfun.hpp"

namespace rvmf::losses {

using specfun::bessel_ratio_A;
using specfun::hess_coeff_over_x2;
using specfun::log_K;
using specfun::ratio_A_diff_over_x;
using specfun::ratio_A_over_x;

/// Per-observation loss l(x, xi).
///
/// KL is the negative log density. The divergence losses are the additive
/// summands of the empirical DPD / gamma cross entropies; every power of
/// K_p is assembled in log space.
inline double loss_at(const Vector& x, const Vector& xi, const LossSpec& spec) {
  require(x.size() == xi.size(), "dimension mismatch between x and xi");
  const int p = static_cast<int>(x.size());
  const double kappa = xi.norm();
  const double dot = xi.dot(x);
  switch (spec.kind) {
    case LossSpec::Kind::Kl:
      return log_K(p, kappa) - dot;
    case LossSpec::Kind::Dpd: {
      const double a = spec.tuning;
      const double lk = log_K(p, kappa);
      const double lk1 = log_K(p, (1.0 + a) * kappa);
      return -std::exp(a * dot - a * lk) / a +
             std::exp(lk1 - (a + 1.0) * lk) / (a + 1.0);
    }
    case LossSpec::Kind::GammaDiv: {
      const double g = spec.tuning;
      const double lk1 = log_K(p, (1.0 + g) * kappa);
      return -std::exp(g * dot - g / (1.0 + g) * lk1) / g + 1.0 / g;
    }
  }
  throw std::invalid_argument("invalid loss spec");
}

/// Analytic gradient in xi. At kappa = 0 the A_p(.)/kappa factors are
/// replaced by their series limits so the uniform start stays usable.
inline Vector grad_loss(const Vector& x, const Vector& xi,
                        const LossSpec& spec) {
  require(x.size() == xi.size(), "dimension mismatch between x and xi");
  require(x.allFinite() && xi.allFinite(), "non-finite input");
  const int p = static_cast<int>(x.size());
  const double kappa = xi.norm();
  const double dot = xi.dot(x);
  switch (spec.kind) {
    case LossSpec::Kind::Kl:
      return -(x - ratio_A_over_x(p, kappa) * xi);
    case LossSpec::Kind::Dpd: {
      const double a = spec.tuning;
      const double lk = log_K(p, kappa);
      const double lk1 = log_K(p, (1.0 + a) * kappa);
      const double e = std::exp(a * dot - a * lk);
      const double f = std::exp(lk1 - (a + 1.0) * lk);
      // (A_p((1+a)k) - A_p(k)) * xi / k == ratio_A_diff_over_x * xi
      return -e * (x - ratio_A_over_x(p, kappa) * xi) +
             f * ratio_A_diff_over_x(p, 1.0 + a, kappa) * xi;
    }
    case LossSpec::Kind::GammaDiv: {
      const double g = spec.tuning;
      const double lk1 = log_K(p, (1.0 + g) * kappa);
      const double e = std::exp(g * dot - g / (1.0 + g) * lk1);
      Vector centre = ratio_A_over_x(p, (1.0 + g) * kappa) * (1.0 + g) * xi;
      return -e * (x - centre);
    }
  }
  throw std::invalid_argument("invalid loss spec");
}

/// Analytic Hessian in xi (symmetric p x p).
inline Matrix hessian_loss(const Vector& x, const Vector& xi,
                           const LossSpec& spec) {
  require(x.size() == xi.size(), "dimension mismatch between x and xi");
  const int p = static_cast<int>(x.size());
  const double kappa = xi.norm();
  const double dot = xi.dot(x);
  const Matrix outer_xi = xi * xi.transpose();
  // core(s) = A_p(s k)/k * I + (s/k^2) {1 - A^2 - p/(s k) A}(s k) xi xi'
  auto core = [&](double s) -> Matrix {
    const double diag = s * ratio_A_over_x(p, s * kappa);
    const double off = s * hess_coeff_over_x2(p, s, kappa);
    return diag * Matrix::Identity(p, p) + off * outer_xi;
  };
  switch (spec.kind) {
    case LossSpec::Kind::Kl:
      return core(1.0);
    case LossSpec::Kind::Dpd: {
      const double a = spec.tuning;
      const double lk = log_K(p, kappa);
      const double lk1 = log_K(p, (1.0 + a) * kappa);
      const double e = std::exp(a * dot - a * lk);
      const double f = std::exp(lk1 - (a + 1.0) * lk);
      const Vector v = x - ratio_A_over_x(p, kappa) * xi;
      const double diff = ratio_A_diff_over_x(p, 1.0 + a, kappa);
      // diff is (A((1+a)k) - A(k))/k, so diff^2 * xi xi' carries the 1/k^2
      Matrix h = -a * e * (v * v.transpose()) + e * core(1.0);
      h += (a + 1.0) * f * diff * diff * outer_xi;
      h += f * (core(1.0 + a) - core(1.0));
      return h;
    }
    case LossSpec::Kind::GammaDiv: {
      const double g = spec.tuning;
      const double lk1 = log_K(p, (1.0 + g) * kappa);
      const double e = std::exp(g * dot - g / (1.0 + g) * lk1);
      const Vector v = x - (1.0 + g) * ratio_A_over_x(p, (1.0 + g) * kappa) * xi;
      return -g * e * (v * v.transpose()) + e * core(1.0 + g);
    }
  }
  throw std::invalid_argument("invalid loss spec");
}

/// Weighted empirical loss sum_i w_i l(x_i, xi); unit weights when absent,
/// so the unweighted value equals n times the empirical cross entropy.
/// The kappa-only factors (log K_p and the A_p ratios) are hoisted out of
/// the per-observation loop, so the cost per call is one Bessel evaluation
/// plus vectorized dot products.
inline double empirical_loss(const Dataset& data, const Vector& xi,
                             const LossSpec& spec,
                             const Vector* weights = nullptr) {
  require(xi.size() == data.p(), "dimension mismatch");
  if (weights)
    require(weights->size() == data.n(), "weight length mismatch");
  const int p = static_cast<int>(xi.size());
  const int n = data.n();
  const double kappa = xi.norm();
  const Eigen::ArrayXd dots = (data.points * xi).array();
  Eigen::ArrayXd w;
  if (weights)
    w = weights->array();
  else
    w = Eigen::ArrayXd::Ones(n);
  switch (spec.kind) {
    case LossSpec::Kind::Kl: {
      const double lk = log_K(p, kappa);
      return (w * (lk - dots)).sum();
    }
    case LossSpec::Kind::Dpd: {
      const double a = spec.tuning;
      const double lk = log_K(p, kappa);
      const double lk1 = log_K(p, (1.0 + a) * kappa);
      const double pen = std::exp(lk1 - (a + 1.0) * lk) / (a + 1.0);
      return (w * (-(a * dots - a * lk).exp() / a + pen)).sum();
    }
    case LossSpec::Kind::GammaDiv: {
      const double g = spec.tuning;
      const double lk1 = log_K(p, (1.0 + g) * kappa);
      return (w * (-(g * dots - g / (1.0 + g) * lk1).exp() / g + 1.0 / g))
          .sum();
    }
  }
  throw std::invalid_argument("invalid loss spec");
}

/// Gradient of the weighted empirical loss (same hoisting as
/// empirical_loss; equals the sum of per-observation grad_loss terms).
inline Vector empirical_grad(const Dataset& data, const Vector& xi,
                             const LossSpec& spec,
                             const Vector* weights = nullptr) {
  require(xi.size() == data.p(), "dimension mismatch");
  if (weights)
    require(weights->size() == data.n(), "weight length mismatch");
  require(xi.allFinite(), "non-finite input");
  const int p = static_cast<int>(xi.size());
  const int n = data.n();
  const double kappa = xi.norm();
  const Eigen::ArrayXd dots = (data.points * xi).array();
  Eigen::ArrayXd w;
  if (weights)
    w = weights->array();
  else
    w = Eigen::ArrayXd::Ones(n);
  switch (spec.kind) {
    case LossSpec::Kind::Kl: {
      const Vector xw = data.points.transpose() * w.matrix();
      return -xw + w.sum() * ratio_A_over_x(p, kappa) * xi;
    }
    case LossSpec::Kind::Dpd: {
      const double a = spec.tuning;
      const double lk = log_K(p, kappa);
      const double lk1 = log_K(p, (1.0 + a) * kappa);
      const Eigen::ArrayXd we = w * (a * dots - a * lk).exp();
      const double f = std::exp(lk1 - (a + 1.0) * lk);
      const Vector xwe = data.points.transpose() * we.matrix();
      return -xwe + we.sum() * ratio_A_over_x(p, kappa) * xi +
             w.sum() * f * ratio_A_diff_over_x(p, 1.0 + a, kappa) * xi;
    }
    case LossSpec::Kind::GammaDiv: {
      const double g = spec.tuning;
      const double lk1 = log_K(p, (1.0 + g) * kappa);
      const Eigen::ArrayXd we = w * (g * dots - g / (1.0 + g) * lk1).exp();
      const Vector xwe = data.points.transpose() * we.matrix();
      return -xwe +
             we.sum() * (1.0 + g) * ratio_A_over_x(p, (1.0 + g) * kappa) * xi;
    }
  }
  throw std::invalid_argument("invalid loss spec");
}

}  // namespace rvmf::losses
