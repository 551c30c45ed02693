#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rvmf/asymptotics.hpp"
#include "rvmf/core.hpp"
#include "rvmf/parallel.hpp"
#include "rvmf/rng.hpp"
#include "rvmf/vmf.hpp"
#include "rvmf/wbb.hpp"

namespace rvmf::simlab {

struct Contamination {
  enum class Kind { UniformSphere, PointMass, VmfAt };

  Kind kind = Kind::UniformSphere;
  Vector y;    // PointMass location
  Vector eta;  // VmfAt parameter

  static Contamination uniform_sphere() { return {}; }
  static Contamination point_mass(Vector y) {
    return {Kind::PointMass, std::move(y), {}};
  }
  static Contamination vmf_at(Vector eta) {
    return {Kind::VmfAt, {}, std::move(eta)};
  }
};

struct SimConfig {
  int p = 2;
  int n = 100;
  double epsilon = 0.0;
  Vector true_xi;
  Contamination contamination;
  int replications = 100;
  std::vector<LossSpec> losses;
  std::uint64_t seed = 0;
  int wbb_M = 300;
  bool use_wbb = true;  // false: plain point estimates (faster switch)
  double are_target = 0.95;
  bool auto_tune = false;  // resolve DPD/gamma tunings at the true xi
  int threads = 0;
};

/// Rows keyed by (loss name, metric in {xi, mu, kappa}).
struct MseTable {
  std::map<std::pair<std::string, std::string>, double> values;
  int replications_used = 0;
  int replications_dropped = 0;
  std::uint64_t seed = 0;
};

/// One draw from the contamination mixture (1-eps) vMF(xi) + eps * u.
inline Dataset gen_contaminated(const SimConfig& config, int replicate) {
  require(config.epsilon >= 0.0 && config.epsilon < 1.0,
          "epsilon must be in [0,1)");
  Rng rng(derive_seed(config.seed, 0x100000000ULL + replicate));
  Dataset data;
  data.points.resize(config.n, config.p);
  for (int i = 0; i < config.n; ++i) {
    if (rng.uniform() < config.epsilon) {
      switch (config.contamination.kind) {
        case Contamination::Kind::UniformSphere: {
          Vector z = rng.gaussian_vector(config.p);
          data.points.row(i) = z / z.norm();
          break;
        }
        case Contamination::Kind::PointMass:
          data.points.row(i) = config.contamination.y;
          break;
        case Contamination::Kind::VmfAt:
          data.points.row(i) = vmf::sample_one(config.contamination.eta, rng);
          break;
      }
    } else {
      data.points.row(i) = vmf::sample_one(config.true_xi, rng);
    }
  }
  return data;
}

/// The three MSE metrics over a list of (xi_hat, mu_hat, kappa_hat):
/// sum ||xi_j - xi||^2 / (R p), sum (1 - mu_j' mu) / R, sum (k_j - k)^2 / R.
struct Estimate {
  Vector xi;
  Vector mu;
  double kappa;
};

struct MseRow {
  double xi = 0.0;
  double mu = 0.0;
  double kappa = 0.0;
};

inline MseRow mse_metrics(const std::vector<Estimate>& estimates,
                          const Vector& truth) {
  require(!estimates.empty(), "empty estimate list");
  const int p = static_cast<int>(truth.size());
  const double kappa_true = truth.norm();
  require(kappa_true > 0.0, "truth must have positive concentration");
  const Vector mu_true = truth / kappa_true;
  MseRow row;
  for (const auto& e : estimates) {
    require(e.xi.size() == p, "dimension mismatch in estimates");
    row.xi += (e.xi - truth).squaredNorm();
    row.mu += 1.0 - e.mu.dot(mu_true);
    row.kappa += (e.kappa - kappa_true) * (e.kappa - kappa_true);
  }
  const double r = static_cast<double>(estimates.size());
  row.xi /= r * p;
  row.mu /= r;
  row.kappa /= r;
  return row;
}

/// Replicated contamination study. Losses are compared on identical
/// datasets within each replicate; a replicate failing for any loss is
/// dropped for all losses.
inline MseTable run_study(const SimConfig& config) {
  require(config.replications >= 1, "replications must be >= 1");
  require(!config.losses.empty(), "no losses configured");

  // resolve auto tunings once, at the true parameter
  std::vector<LossSpec> losses = config.losses;
  if (config.auto_tune) {
    for (auto& spec : losses) {
      if (spec.kind != LossSpec::Kind::Kl) {
        spec.tuning = asymptotics::select_tuning(spec.kind, config.true_xi,
                                                 config.are_target);
      }
    }
  }

  const int R = config.replications;
  const int L = static_cast<int>(losses.size());
  std::vector<std::vector<Estimate>> fits(L);
  for (auto& v : fits) v.resize(R);
  std::vector<char> ok(R, 1);

  parallel::parallel_for(R, config.threads, [&](int j) {
    const Dataset data = gen_contaminated(config, j);
    for (int l = 0; l < L; ++l) {
      try {
        Estimate est;
        if (config.use_wbb) {
          auto draws =
              wbb::wbb_sample(data, losses[l], wbb::PriorSpec::uniform(),
                              config.wbb_M, derive_seed(config.seed, j), 1);
          auto s = wbb::summarize(draws, 0.95);
          est.xi = s.mean_xi;
          est.mu = s.mean_direction;
          est.kappa = s.mean_kappa;
        } else {
          est.xi = wbb::point_estimate(data, losses[l]);
          est.kappa = est.xi.norm();
          est.mu = est.kappa > 0.0 ? Vector(est.xi / est.kappa) : est.xi;
        }
        fits[l][j] = std::move(est);
      } catch (const numerical_error&) {
        ok[j] = 0;  // paired comparison: drop the replicate for all losses
      }
    }
  });

  MseTable table;
  table.seed = config.seed;
  for (int l = 0; l < L; ++l) {
    std::vector<Estimate> kept;
    kept.reserve(R);
    for (int j = 0; j < R; ++j)
      if (ok[j]) kept.push_back(fits[l][j]);
    if (l == 0) {
      table.replications_used = static_cast<int>(kept.size());
      table.replications_dropped = R - table.replications_used;
    }
    require(!kept.empty(), "all replicates failed");
    const MseRow row = mse_metrics(kept, config.true_xi);
    const std::string name = losses[l].name();
    table.values[{name, "xi"}] = row.xi;
    table.values[{name, "mu"}] = row.mu;
    table.values[{name, "kappa"}] = row.kappa;
  }
  return table;
}

}  // namespace rvmf::simlab
