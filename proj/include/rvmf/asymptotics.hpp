#pragma once

#include <cmath>

#include "rvmf/core.hpp"
#include "rvmf/specfun.hpp"

namespace rvmf::asymptotics {

using specfun::hess_coeff_over_x2;
using specfun::log_K;
using specfun::ratio_A_diff_over_x;
using specfun::ratio_A_over_x;

/// One closed-form information-type matrix in its spectral form
///   M = exp(log_scale) * (c1 * I + c2 * xi xi' / ||xi||^2).
/// Eigenvalues: c1 (multiplicity p-1) and c1 + c2 (eigenvector xi),
/// both times the scale factor.
struct StructuredMatrix {
  double log_scale = 0.0;
  double c1 = 0.0;  // coefficient of the identity
  double c2 = 0.0;  // coefficient of xi xi' / kappa^2

  double log_det(int p) const {
    return p * log_scale + (p - 1) * std::log(c1) + std::log(c1 + c2);
  }
  double eig_perp() const { return std::exp(log_scale) * c1; }
  double eig_axis() const { return std::exp(log_scale) * (c1 + c2); }

  Matrix dense(const Vector& xi) const {
    const int p = static_cast<int>(xi.size());
    const double k2 = xi.squaredNorm();
    Matrix m = c1 * Matrix::Identity(p, p);
    if (k2 > 0.0) m += c2 / k2 * (xi * xi.transpose());
    return std::exp(log_scale) * m;
  }
};

struct InfoPair {
  StructuredMatrix I_struct, J_struct;
  Matrix I, J;  // dense forms
  LossSpec spec;
};

namespace detail {

// B(s k)/k^2 * k^2 = 1 - A^2 - (p/(sk))A evaluated stably; the structured
// coefficients below are expressed against xi xi' / k^2, so this is what
// multiplies that dyad.
inline double b_of(int p, double s, double kappa) {
  return hess_coeff_over_x2(p, s, kappa) * kappa * kappa;
}

inline StructuredMatrix info_kl(int p, double kappa) {
  StructuredMatrix m;
  m.log_scale = 0.0;
  m.c1 = ratio_A_over_x(p, kappa);
  m.c2 = b_of(p, 1.0, kappa);
  return m;
}

}  // namespace detail

/// Closed-form I^(d) and J^(d) at the model (data-generating density vM(xi)).
inline InfoPair info_matrices(const Vector& xi, const LossSpec& spec) {
  const int p = static_cast<int>(xi.size());
  require(p >= 2, "dimension must be >= 2");
  const double kappa = xi.norm();
  InfoPair out;
  out.spec = spec;

  const StructuredMatrix kl = detail::info_kl(p, kappa);
  switch (spec.kind) {
    case LossSpec::Kind::Kl: {
      out.I_struct = kl;
      out.J_struct = kl;
      break;
    }
    case LossSpec::Kind::Dpd: {
      const double a = spec.tuning;
      const double lk = log_K(p, kappa);
      const double lk1 = log_K(p, (1.0 + a) * kappa);
      const double lk2 = log_K(p, (2.0 * a + 1.0) * kappa);
      const double diff1 = ratio_A_diff_over_x(p, 1.0 + a, kappa) * kappa;
      const double diff2 = ratio_A_diff_over_x(p, 2.0 * a + 1.0, kappa) * kappa;

      StructuredMatrix I;
      I.log_scale = lk2 - (2.0 * a + 1.0) * lk;
      I.c1 = ratio_A_over_x(p, (2.0 * a + 1.0) * kappa);
      I.c2 = detail::b_of(p, 2.0 * a + 1.0, kappa) + diff2 * diff2 -
             std::exp(2.0 * lk1 - lk - lk2) * diff1 * diff1;

      StructuredMatrix J;
      J.log_scale = lk1 - (a + 1.0) * lk;
      J.c1 = specfun::ratio_A_over_x(p, (1.0 + a) * kappa);
      J.c2 = detail::b_of(p, 1.0 + a, kappa) + diff1 * diff1;

      out.I_struct = I;
      out.J_struct = J;
      break;
    }
    case LossSpec::Kind::GammaDiv: {
      const double g = spec.tuning;
      const double lk = log_K(p, kappa);
      const double lk1 = log_K(p, (1.0 + g) * kappa);
      const double lk2 = log_K(p, (2.0 * g + 1.0) * kappa);
      // A((2g+1)k) - A((1+g)k), against xi xi'/k^2 after squaring
      const double diff12 = (ratio_A_diff_over_x(p, 2.0 * g + 1.0, kappa) -
                             ratio_A_diff_over_x(p, 1.0 + g, kappa)) *
                            kappa;

      StructuredMatrix I;
      I.log_scale = lk2 - lk - 2.0 * g / (1.0 + g) * lk1;
      I.c1 = specfun::ratio_A_over_x(p, (2.0 * g + 1.0) * kappa);
      I.c2 = detail::b_of(p, 2.0 * g + 1.0, kappa) + diff12 * diff12;

      StructuredMatrix J;
      J.log_scale = lk1 / (1.0 + g) - lk;
      J.c1 = specfun::ratio_A_over_x(p, (1.0 + g) * kappa);
      J.c2 = detail::b_of(p, 1.0 + g, kappa);

      out.I_struct = I;
      out.J_struct = J;
      break;
    }
  }
  out.I = out.I_struct.dense(xi);
  out.J = out.J_struct.dense(xi);
  return out;
}

/// Sandwich covariance J^-1 I J^-1 via symmetric solves on the dense pair.
inline Matrix sandwich_cov(const Vector& xi, const LossSpec& spec) {
  const InfoPair info = info_matrices(xi, spec);
  Eigen::SelfAdjointEigenSolver<Matrix> es(info.J);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw numerical_error("ill-conditioned J matrix in sandwich covariance");
  Eigen::LLT<Matrix> llt(info.J);
  Matrix x = llt.solve(info.I);
  Matrix v = llt.solve(x.transpose()).transpose();
  return 0.5 * (v + v.transpose());
}

/// Asymptotic relative efficiency (det V_KL / det V_d)^(1/p), computed from
/// the two-eigenvalue structure of the closed-form matrices.
inline double are(const LossSpec& spec, const Vector& xi) {
  const int p = static_cast<int>(xi.size());
  const InfoPair kl = info_matrices(xi, LossSpec::kl());
  const InfoPair d = info_matrices(xi, spec);
  // log det V = log det I - 2 log det J
  const double logdet_v_kl = -kl.I_struct.log_det(p);
  const double logdet_v_d = d.I_struct.log_det(p) - 2.0 * d.J_struct.log_det(p);
  return std::exp((logdet_v_kl - logdet_v_d) / p);
}

/// Solves are(spec(t), xi_pilot) = target for the tuning t by bisection,
/// expanding the upper bracket by doubling from 1 up to 64.
inline double select_tuning(LossSpec::Kind kind, const Vector& xi_pilot,
                            double target) {
  require(kind != LossSpec::Kind::Kl, "tuning selection needs DPD or gamma");
  require(target > 0.0 && target < 1.0, "target efficiency must be in (0,1)");
  require(xi_pilot.norm() > 0.0, "pilot concentration must be positive");
  auto make = [&](double t) {
    return kind == LossSpec::Kind::Dpd ? LossSpec::dpd(t)
                                       : LossSpec::gamma_div(t);
  };
  double lo = 1e-6;
  if (are(make(lo), xi_pilot) < target)
    return lo;  // target effectively 1; root at the lower bracket edge
  double hi = 1.0;
  while (are(make(hi), xi_pilot) > target) {
    hi *= 2.0;
    if (hi > 64.0)
      throw numerical_error("ARE never drops below target on (0, 64]");
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (are(make(mid), xi_pilot) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace rvmf::asymptotics
