#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "rvmf/robustness.hpp"
#include "rvmf/vmf.hpp"
#include "rvmf/wbb.hpp"

using namespace rvmf;

TEST_CASE("KL k-function is linear in the probe") {
  Rng rng(61);
  Vector xi = 3.0 * rng.gaussian_vector(2).normalized();
  Vector eta = 5.0 * rng.gaussian_vector(2).normalized();
  for (int t = 0; t < 10; ++t) {
    Vector y = rng.gaussian_vector(2).normalized();
    Vector y2 = rng.gaussian_vector(2).normalized();
    const double lhs =
        robustness::k_function(xi, y, eta, LossSpec::kl()) -
        robustness::k_function(xi, y2, eta, LossSpec::kl());
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(xi.dot(y - y2), 1e-12));
  }
}

TEST_CASE("k-functions are centered under the data-generating density") {
  const int n = 100000;
  Vector eta(2);
  eta << 5.0, 0.0;
  Vector xi(2);
  xi << 4.0, 1.0;
  Dataset data = vmf::sample(eta, n, 71);
  for (const auto& spec :
       {LossSpec::kl(), LossSpec::dpd(0.3), LossSpec::gamma_div(0.3)}) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = robustness::k_function(
          xi, data.points.row(i).transpose(), eta, spec);
      sum += k;
      sq += k * k;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    INFO("spec=" << spec.name());
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 4.0 * se));
  }
}

TEST_CASE("mixture-normalizer identity vs circle quadrature") {
  // int f_xi^a f_eta = K(a xi + eta) / (K(|xi|)^a K(|eta|))
  Rng rng(62);
  for (int t = 0; t < 5; ++t) {
    const double a = 0.15 + 0.5 * rng.uniform();
    Vector xi = (1.0 + 4.0 * rng.uniform()) *
                rng.gaussian_vector(2).normalized();
    Vector eta = (1.0 + 4.0 * rng.uniform()) *
                 rng.gaussian_vector(2).normalized();
    const double integral = oracles::circle_quadrature([&](double theta) {
      Vector y(2);
      y << std::cos(theta), std::sin(theta);
      return std::exp(a * vmf::log_density(y, xi) +
                      vmf::log_density(y, eta));
    });
    const double closed = std::exp(
        specfun::log_K(2, (a * xi + eta).norm()) -
        a * specfun::log_K(2, xi.norm()) - specfun::log_K(2, eta.norm()));
    INFO("a=" << a);
    CHECK_THAT(integral, Catch::Matchers::WithinRel(closed, 1e-7));
  }
}

TEST_CASE("k-function boundedness over the probe sphere") {
  Vector xi(2);
  xi << 4.0, 1.0;
  Vector eta(2);
  eta << 5.0, 0.0;
  const double a = 0.3;
  const double kappa = xi.norm();
  // |k_a| <= (exp(a kappa) + K(a xi + eta)/K(|eta|)) / (a K^a)
  const double bound =
      (std::exp(a * kappa) +
       std::exp(specfun::log_K(2, (a * xi + eta).norm()) -
                specfun::log_K(2, eta.norm()))) /
      (a * std::exp(a * specfun::log_K(2, kappa)));
  const Matrix probes = robustness::circle_probes(72);
  for (int i = 0; i < probes.rows(); ++i) {
    const double k = robustness::k_function(xi, probes.row(i).transpose(),
                                            eta, LossSpec::dpd(a));
    CHECK(std::abs(k) <= bound);
  }
}

TEST_CASE("influence of identical draws is zero") {
  const int M = 250;
  wbb::PosteriorDraws draws;
  draws.draws.resize(M, 2);
  draws.reports.resize(M);
  draws.loss = LossSpec::kl();
  for (int m = 0; m < M; ++m) {
    draws.draws.row(m) << 3.0, 1.0;
    draws.reports[m].converged = true;
  }
  Vector y(2), eta(2);
  y << -1.0, 0.0;
  eta << 5.0, 0.0;
  CHECK(robustness::influence(draws, y, eta, 100).norm() < 1e-12);
}

TEST_CASE("influence requires enough converged draws") {
  wbb::PosteriorDraws draws;
  draws.draws.resize(50, 2);
  draws.reports.resize(50);
  draws.loss = LossSpec::kl();
  for (int m = 0; m < 50; ++m) {
    draws.draws.row(m) << 1.0, 0.0;
    draws.reports[m].converged = true;
  }
  Vector y(2), eta(2);
  y << 0.0, 1.0;
  eta << 5.0, 0.0;
  CHECK_THROWS_AS(robustness::influence(draws, y, eta, 100),
                  numerical_error);
}

TEST_CASE("antipodal influence: KL dwarfs DPD") {
  // Arrow-field configuration mu0 = (1,0), kappa0 = 5; frozen seed
  Vector eta(2);
  eta << 5.0, 0.0;
  const int n = 100;
  Dataset data = vmf::sample(eta, n, 314);
  Vector y(2);
  y << -1.0, 0.0;

  const auto kl_draws = wbb::wbb_sample(data, LossSpec::kl(),
                                        wbb::PriorSpec::uniform(), 250, 11);
  const auto dpd_draws = wbb::wbb_sample(data, LossSpec::dpd(0.15),
                                         wbb::PriorSpec::uniform(), 250, 11);
  const double kl_if = robustness::influence(kl_draws, y, eta, n).norm();
  const double dpd_if = robustness::influence(dpd_draws, y, eta, n).norm();
  CHECK(kl_if > dpd_if);
}

TEST_CASE("sif_field geometry and scaling") {
  const Matrix probes = robustness::circle_probes(36);
  REQUIRE(probes.rows() == 36);
  for (int i = 0; i < 36; ++i)
    CHECK_THAT(probes.row(i).norm(), Catch::Matchers::WithinRel(1.0, 1e-12));
  CHECK_THAT(probes(0, 0), Catch::Matchers::WithinRel(1.0, 1e-12));

  // identical draws: every IF is zero, so every SIF norm is zero
  const int M = 250;
  wbb::PosteriorDraws draws;
  draws.draws.resize(M, 2);
  draws.reports.resize(M);
  draws.loss = LossSpec::dpd(0.3);
  for (int m = 0; m < M; ++m) {
    draws.draws.row(m) << 4.0, 1.0;
    draws.reports[m].converged = true;
  }
  Vector eta(2);
  eta << 5.0, 0.0;
  const auto field = robustness::sif_field(draws, probes, eta, 100);
  CHECK(field.sif_norms.maxCoeff() < 1e-10);
  CHECK(field.standardizer.rows() == 2);
  // standardizer is the sandwich covariance at eta
  CHECK((field.standardizer -
         asymptotics::sandwich_cov(eta, draws.loss)).norm() < 1e-14);
}

TEST_CASE("influence rotation equivariance", "[.][slow]") {
  Vector eta(2);
  eta << 5.0, 0.0;
  const int n = 100;
  Dataset data = vmf::sample(eta, n, 99);
  const double phi = 0.8;
  Matrix q(2, 2);
  q << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Dataset rotated;
  rotated.points = data.points * q.transpose();

  Vector y(2);
  y << -1.0, 0.0;
  const auto d1 = wbb::wbb_sample(data, LossSpec::dpd(0.3),
                                  wbb::PriorSpec::uniform(), 300, 5);
  const auto d2 = wbb::wbb_sample(rotated, LossSpec::dpd(0.3),
                                  wbb::PriorSpec::uniform(), 300, 5);
  const Vector if1 = robustness::influence(d1, y, eta, n);
  const Vector if2 =
      robustness::influence(d2, Vector(q * y), Vector(q * eta), n);
  CHECK((if2 - q * if1).norm() < 0.2 * (if1.norm() + 0.1));
}

TEST_CASE("epsilon-mixture derivative matches IF prediction", "[.][slow]") {
  // Recompute the posterior mean under a small contamination at y and
  // compare the shift against eps * IF_n / n.
  Vector eta(2);
  eta << 5.0, 0.0;
  const int n = 200;
  Dataset data = vmf::sample(eta, n, 17);
  Vector y(2);
  y << -1.0, 0.0;
  const double eps = 0.02;
  const int n_replace = static_cast<int>(eps * n + 0.5);
  Dataset mixed = data;
  for (int i = 0; i < n_replace; ++i) mixed.points.row(i) = y;

  const LossSpec spec = LossSpec::dpd(0.3);
  const auto base = wbb::wbb_sample(data, spec, wbb::PriorSpec::uniform(),
                                    600, 23);
  const auto bump = wbb::wbb_sample(mixed, spec, wbb::PriorSpec::uniform(),
                                    600, 23);
  const Vector mean_base = wbb::summarize(base, 0.95).mean_xi;
  const Vector mean_bump = wbb::summarize(bump, 0.95).mean_xi;
  // first-order von Mises expansion: T(F_eps) - T(F) ~ eps * IF(y)
  const Vector shift = mean_bump - mean_base;
  const Vector pred = eps * robustness::influence(base, y, eta, n);
  CHECK((shift - pred).norm() < std::max(0.25 * pred.norm(), 0.05));
}
