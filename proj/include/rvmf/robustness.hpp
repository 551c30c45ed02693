#pragma once

#include <cmath>
#include <vector>

#include "rvmf/asymptotics.hpp"
#include "rvmf/core.hpp"
#include "rvmf/specfun.hpp"
#include "rvmf/wbb.hpp"

namespace rvmf::robustness {

using specfun::log_K;

/// Arrow field of influence vectors and standardised norms over a grid of
/// contamination locations.
struct SifField {
  Matrix probes;       // rows: probe locations y on the sphere
  Matrix if_vectors;   // rows: IF_n at each probe
  Vector sif_norms;    // nonnegative
  Matrix standardizer; // S used in the quadratic form
};

/// The centered perturbation kernel k_d(xi; y, g) for a vMF data-generating
/// density g = f_eta. K_p with a vector argument is K_p at the vector's
/// norm, since K_p depends on its argument only through the norm.
inline double k_function(const Vector& xi, const Vector& y, const Vector& eta,
                         const LossSpec& spec) {
  require(xi.size() == y.size() && xi.size() == eta.size(),
          "dimension mismatch");
  const int p = static_cast<int>(xi.size());
  const double kappa = xi.norm();
  switch (spec.kind) {
    case LossSpec::Kind::Kl: {
      const double eta_norm = eta.norm();
      const Vector centre = specfun::ratio_A_over_x(p, eta_norm) * eta;
      return xi.dot(y - centre);
    }
    case LossSpec::Kind::Dpd: {
      const double a = spec.tuning;
      const double lk = log_K(p, kappa);
      const double mix = (a * xi + eta).norm();
      const double t1 = std::exp(a * xi.dot(y) - a * lk);
      const double t2 = std::exp(log_K(p, mix) - log_K(p, eta.norm()) - a * lk);
      return (t1 - t2) / a;
    }
    case LossSpec::Kind::GammaDiv: {
      const double g = spec.tuning;
      const double lc = g / (1.0 + g) * log_K(p, (1.0 + g) * kappa);
      const double mix = (g * xi + eta).norm();
      const double t1 = std::exp(g * xi.dot(y) - lc);
      const double t2 = std::exp(log_K(p, mix) - log_K(p, eta.norm()) - lc);
      return (t1 - t2) / g;
    }
  }
  throw std::invalid_argument("invalid loss spec");
}

/// Fixed-n influence function of the posterior-mean functional at probe y:
/// n * Cov(xi, k(xi; y, g)) under the posterior, estimated from WBB draws.
inline Vector influence(const wbb::PosteriorDraws& draws, const Vector& y,
                        const Vector& eta, int n) {
  std::vector<int> keep;
  for (std::size_t m = 0; m < draws.reports.size(); ++m)
    if (draws.reports[m].converged) keep.push_back(static_cast<int>(m));
  if (static_cast<int>(keep.size()) < 200)
    throw numerical_error("influence needs at least 200 converged draws");

  const int p = static_cast<int>(draws.draws.cols());
  Vector xi_bar = Vector::Zero(p);
  double k_bar = 0.0;
  std::vector<double> kvals(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const Vector xi = draws.draws.row(keep[j]).transpose();
    kvals[j] = k_function(xi, y, eta, draws.loss);
    xi_bar += xi;
    k_bar += kvals[j];
  }
  xi_bar /= keep.size();
  k_bar /= keep.size();

  Vector cov = Vector::Zero(p);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const Vector xi = draws.draws.row(keep[j]).transpose();
    cov += (xi - xi_bar) * (kvals[j] - k_bar);
  }
  cov /= keep.size() - 1.0;
  return n * cov;
}

/// Influence field over a probe grid with SIF norms standardised by the
/// asymptotic sandwich covariance at eta.
inline SifField sif_field(const wbb::PosteriorDraws& draws,
                          const Matrix& probes, const Vector& eta, int n) {
  require(probes.rows() >= 1, "probe list must be nonempty");
  const int p = static_cast<int>(probes.cols());
  SifField field;
  field.probes = probes;
  field.if_vectors.resize(probes.rows(), p);
  field.sif_norms.resize(probes.rows());
  field.standardizer = asymptotics::sandwich_cov(eta, draws.loss);

  Eigen::LLT<Matrix> llt(field.standardizer);
  if (llt.info() != Eigen::Success)
    throw numerical_error("singular SIF standardizer");

  for (int i = 0; i < probes.rows(); ++i) {
    const Vector iv = influence(draws, probes.row(i).transpose(), eta, n);
    field.if_vectors.row(i) = iv;
    field.sif_norms[i] = std::sqrt(std::max(0.0, iv.dot(llt.solve(iv))));
  }
  return field;
}

/// Equally spaced circular probe grid (p = 2 helper for the arrow plots).
inline Matrix circle_probes(int count) {
  require(count >= 1, "probe count must be >= 1");
  Matrix probes(count, 2);
  for (int i = 0; i < count; ++i) {
    const double theta = 2.0 * M_PI * i / count;
    probes(i, 0) = std::cos(theta);
    probes(i, 1) = std::sin(theta);
  }
  return probes;
}

}  // namespace rvmf::robustness
