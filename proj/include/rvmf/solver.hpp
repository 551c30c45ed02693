#pragma once

#include <cmath>
#include <deque>
#include <functional>

#include "rvmf/core.hpp"
#include "rvmf/rng.hpp"

namespace rvmf::solver {

struct Options {
  double grad_tol = 1e-7;  // relative to max(1, ||x||) at the iterate
  int max_iterations = 500;
  int memory = 8;
  int max_restarts = 3;
};

struct SolveReport {
  Vector minimizer;
  double objective = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 0;
};

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;

namespace detail {

struct Pair {
  Vector s, y;
  double rho;
};

/// Two-loop recursion; returns the (descent) quasi-Newton direction.
inline Vector lbfgs_direction(const Vector& grad, const std::deque<Pair>& mem) {
  Vector q = -grad;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  if (!mem.empty()) {
    const Pair& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return q;
}

inline SolveReport run_once(const Objective& f, const Gradient& g, Vector x,
                            const Options& opt) {
  SolveReport report;
  double fx = f(x);
  if (!std::isfinite(fx))
    throw numerical_error("objective not finite at start point");
  Vector grad = g(x);
  std::deque<Pair> mem;

  // The stopping scale follows the iterate, not the start point: gradients
  // of the empirical losses shrink like 1/||xi|| in curvature, so a fixed
  // tolerance taken at a small start is unreachable when the minimiser has
  // large norm (the Armijo test then drowns in rounding of the objective).
  auto tol_at = [&](const Vector& v) {
    return opt.grad_tol * std::max(1.0, v.norm());
  };

  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    const double gnorm = grad.norm();
    if (gnorm <= tol_at(x)) {
      report.converged = true;
      break;
    }
    Vector dir = lbfgs_direction(grad, mem);
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {  // curvature info unusable; fall back
      dir = -grad;
      slope = -gnorm * gnorm;
      mem.clear();
    }
    // backtracking line search with Armijo sufficient decrease
    const double c1 = 1e-4;
    double step = 1.0;
    bool accepted = false;
    Vector x_new;
    double f_new = fx;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no finite sufficient-decrease step found
      break;
    }
    Vector grad_new = g(x_new);
    Vector s = x_new - x;
    Vector y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      mem.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }
    x = std::move(x_new);
    fx = f_new;
    grad = std::move(grad_new);
  }

  report.minimizer = x;
  report.objective = fx;
  report.gradient_norm = grad.norm();
  report.iterations = iter;
  if (report.gradient_norm <= tol_at(x)) report.converged = true;
  return report;
}

}  // namespace detail

/// Limited-memory quasi-Newton minimisation with backtracking line search.
/// On non-convergence, retries from deterministically perturbed starts.
inline SolveReport minimize(const Objective& f, const Gradient& g,
                            const Vector& x0, const Options& opt = {}) {
  SolveReport best = detail::run_once(f, g, x0, opt);
  int restarts = 0;
  while (!best.converged && restarts < opt.max_restarts) {
    ++restarts;
    Rng rng(derive_seed(0x5eedULL, static_cast<std::uint64_t>(restarts)));
    Vector d = rng.gaussian_vector(static_cast<int>(x0.size()));
    d *= 0.1 * (x0.norm() + 1.0) / d.norm();
    SolveReport r = detail::run_once(f, g, x0 + d, opt);
    if (r.converged || r.objective < best.objective) best = r;
    if (best.converged) break;
  }
  best.restarts_used = restarts;
  return best;
}

}  // namespace rvmf::solver
