#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "rvmf/core.hpp"
#include "rvmf/losses.hpp"
#include "rvmf/parallel.hpp"
#include "rvmf/rng.hpp"
#include "rvmf/solver.hpp"
#include "rvmf/vmf.hpp"

namespace rvmf::wbb {

/// Penalty attached to the randomly weighted objective: none (uniform
/// prior), or the Gaussian negative log prior lambda*w0*||xi-mean||^2/(2s^2).
struct PriorSpec {
  enum class Kind { Uniform, GaussianOnXi };

  Kind kind = Kind::Uniform;
  double lambda = 0.0;
  Vector mean;
  double scale = 1.0;

  static PriorSpec uniform() { return {}; }
  static PriorSpec gaussian(double lambda, Vector mean, double scale) {
    require(lambda >= 0.0, "lambda must be >= 0");
    require(scale > 0.0, "prior scale must be > 0");
    return {Kind::GaussianOnXi, lambda, std::move(mean), scale};
  }
};

struct PosteriorDraws {
  Matrix draws;  // M x p optimiser solutions, by replicate index
  LossSpec loss;
  PriorSpec prior;
  std::uint64_t seed = 0;
  std::vector<solver::SolveReport> reports;

  int num_converged() const {
    int c = 0;
    for (const auto& r : reports) c += r.converged ? 1 : 0;
    return c;
  }
  double failure_rate() const {
    return reports.empty()
               ? 0.0
               : 1.0 - double(num_converged()) / double(reports.size());
  }
};

struct PosteriorSummary {
  Vector mean_xi;
  Vector mean_direction;
  double mean_kappa = 0.0;
  double resultant_length = 0.0;
  std::optional<std::pair<double, double>> angle_ci;  // p = 2 only
  std::optional<std::pair<double, double>> kappa_ci;
  int draws_used = 0;
  bool high_failure_warning = false;
};

namespace detail {

inline double penalty(const PriorSpec& prior, const Vector& xi) {
  if (prior.kind == PriorSpec::Kind::Uniform || prior.lambda == 0.0) return 0.0;
  const Vector d = xi - prior.mean;
  return d.squaredNorm() / (2.0 * prior.scale * prior.scale);
}

inline Vector penalty_grad(const PriorSpec& prior, const Vector& xi) {
  if (prior.kind == PriorSpec::Kind::Uniform || prior.lambda == 0.0)
    return Vector::Zero(xi.size());
  return Vector((xi - prior.mean) / (prior.scale * prior.scale));
}

}  // namespace detail

/// Minimises sum_i w_i l(x_i; xi) + lambda w0 phi(xi) from the weighted
/// moment start. This is one WBB replicate; with unit weights and w0 = 0
/// it is the plain point estimate.
inline solver::SolveReport solve_weighted(const Dataset& data,
                                          const LossSpec& spec,
                                          const PriorSpec& prior,
                                          const Vector& weights, double w0) {
  const double lw0 = prior.lambda * w0;
  auto objective = [&](const Vector& xi) {
    return losses::empirical_loss(data, xi, spec, &weights) +
           lw0 * detail::penalty(prior, xi);
  };
  auto gradient = [&](const Vector& xi) {
    Vector g = losses::empirical_grad(data, xi, spec, &weights);
    if (lw0 != 0.0) g += lw0 * detail::penalty_grad(prior, xi);
    return g;
  };
  const Vector x0 = vmf::weighted_moment_estimate(data, weights);
  return solver::minimize(objective, gradient, x0);
}

/// Minimum-divergence point estimate (unit weights, no penalty).
inline Vector point_estimate(const Dataset& data, const LossSpec& spec,
                             solver::SolveReport* report_out = nullptr) {
  const Vector w = Vector::Ones(data.n());
  solver::SolveReport report =
      solve_weighted(data, spec, PriorSpec::uniform(), w, 0.0);
  if (!report.converged)
    throw numerical_error("point estimate did not converge (grad norm " +
                          std::to_string(report.gradient_norm) + ")");
  if (report_out) *report_out = report;
  return report.minimizer;
}

/// Weighted Bayesian bootstrap: M independent randomly weighted
/// optimisations. Replicate m draws e_1..e_n ~ Exp(1), sets
/// w_i = n e_i / sum_j e_j and w0 ~ Exp(1). Bit-reproducible per seed;
/// replicates run concurrently with per-replicate generator streams.
inline PosteriorDraws wbb_sample(const Dataset& data, const LossSpec& spec,
                                 const PriorSpec& prior, int M,
                                 std::uint64_t seed, int threads = 0) {
  require(M >= 1, "M must be >= 1");
  const int n = data.n();
  const int p = data.p();
  PosteriorDraws out;
  out.draws.resize(M, p);
  out.loss = spec;
  out.prior = prior;
  out.seed = seed;
  out.reports.resize(M);

  parallel::parallel_for(M, threads, [&](int m) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
    Vector e(n);
    for (int i = 0; i < n; ++i) e[i] = rng.exponential();
    const double w0 = rng.exponential();
    Vector w = n / e.sum() * e;
    try {
      out.reports[m] = solve_weighted(data, spec, prior, w, w0);
    } catch (const numerical_error&) {
      out.reports[m].converged = false;
      out.reports[m].minimizer = Vector::Zero(p);
    }
    out.draws.row(m) = out.reports[m].minimizer;
  });

  if (out.num_converged() == 0)
    throw numerical_error("all WBB replicates failed to converge");
  return out;
}

namespace detail {

inline std::pair<double, double> equal_tailed(std::vector<double> v,
                                              double level) {
  std::sort(v.begin(), v.end());
  const double q = 0.5 * (1.0 - level);
  auto quantile = [&](double prob) {
    const double idx = prob * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = idx - lo;
    return (1.0 - frac) * v[lo] + frac * v[hi];
  };
  return {quantile(q), quantile(1.0 - q)};
}

}  // namespace detail

/// Posterior summary over the converged draws. The p = 2 angle interval is
/// taken on angles unwrapped to (theta_bar - pi, theta_bar + pi] around the
/// circular mean, so the interval is well defined across the +-pi cut.
inline PosteriorSummary summarize(const PosteriorDraws& draws, double level) {
  require(level > 0.0 && level < 1.0, "level must be in (0,1)");
  const int p = static_cast<int>(draws.draws.cols());
  std::vector<int> keep;
  for (std::size_t m = 0; m < draws.reports.size(); ++m)
    if (draws.reports[m].converged) keep.push_back(static_cast<int>(m));
  require(!keep.empty(), "no converged draws to summarise");

  PosteriorSummary s;
  s.draws_used = static_cast<int>(keep.size());
  s.high_failure_warning = draws.failure_rate() > 0.05;

  Vector mean_xi = Vector::Zero(p);
  Vector mean_mu = Vector::Zero(p);
  double mean_kappa = 0.0;
  std::vector<double> kappas;
  kappas.reserve(keep.size());
  for (int m : keep) {
    const Vector xi = draws.draws.row(m).transpose();
    const double kappa = xi.norm();
    mean_xi += xi;
    mean_kappa += kappa;
    kappas.push_back(kappa);
    if (kappa > 0.0) mean_mu += xi / kappa;
  }
  mean_xi /= keep.size();
  mean_mu /= keep.size();
  mean_kappa /= keep.size();

  s.mean_xi = mean_xi;
  s.mean_kappa = mean_kappa;
  s.resultant_length = mean_mu.norm();
  s.mean_direction =
      s.resultant_length > 0.0 ? Vector(mean_mu / s.resultant_length) : mean_mu;

  if (static_cast<int>(keep.size()) >= 100) {
    s.kappa_ci = detail::equal_tailed(kappas, level);
    if (p == 2) {
      const double theta_bar = std::atan2(mean_mu[1], mean_mu[0]);
      std::vector<double> angles;
      angles.reserve(keep.size());
      for (int m : keep) {
        double theta = std::atan2(draws.draws(m, 1), draws.draws(m, 0));
        while (theta <= theta_bar - M_PI) theta += 2.0 * M_PI;
        while (theta > theta_bar + M_PI) theta -= 2.0 * M_PI;
        angles.push_back(theta);
      }
      s.angle_ci = detail::equal_tailed(angles, level);
    }
  }
  return s;
}

}  // namespace rvmf::wbb
