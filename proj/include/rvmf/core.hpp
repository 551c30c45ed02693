#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rvmf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Input or file-format problem (CLI maps this to exit code 2).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: failed optimisation, singular or ill-conditioned
/// matrix (CLI maps this to exit code 3).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Observations on the unit sphere, one per row.
struct Dataset {
  Matrix points;  // n x p, every row unit norm

  int n() const { return static_cast<int>(points.rows()); }
  int p() const { return static_cast<int>(points.cols()); }
};

// Points within this distance of unit norm are renormalised on ingest;
// anything further off is rejected.
inline constexpr double kUnitNormTol = 1e-6;

inline void validate_dataset(const Dataset& data) {
  require(data.n() >= 1 && data.p() >= 2, "dataset must be n>=1, p>=2");
  for (int i = 0; i < data.n(); ++i) {
    double norm = data.points.row(i).norm();
    require(std::abs(norm - 1.0) <= 1e-9,
            "row " + std::to_string(i) + " is not unit norm");
  }
}

/// Choice of per-observation loss: negative log-likelihood (KL), density
/// power divergence with tuning alpha, or gamma-divergence with tuning gamma.
struct LossSpec {
  enum class Kind { Kl, Dpd, GammaDiv };

  Kind kind = Kind::Kl;
  double tuning = 0.0;  // alpha or gamma; unused for KL

  static LossSpec kl() { return {Kind::Kl, 0.0}; }
  static LossSpec dpd(double alpha) {
    require(alpha > 0.0 && std::isfinite(alpha), "DPD tuning must be > 0");
    return {Kind::Dpd, alpha};
  }
  static LossSpec gamma_div(double gamma) {
    require(gamma > 0.0 && std::isfinite(gamma), "gamma tuning must be > 0");
    return {Kind::GammaDiv, gamma};
  }

  std::string name() const {
    switch (kind) {
      case Kind::Kl: return "kl";
      case Kind::Dpd: return "dpd:" + std::to_string(tuning);
      case Kind::GammaDiv: return "gamma:" + std::to_string(tuning);
    }
    return "?";
  }
};

}  // namespace rvmf
