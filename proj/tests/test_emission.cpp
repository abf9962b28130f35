#include <catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "windhmm/emission.hpp"
#include "windhmm/errors.hpp"

using namespace windhmm;
using Catch::Approx;

namespace {

double poisson_direct(int y, double lambda) {
  return std::exp(y * std::log(lambda) - lambda - std::lgamma(y + 1.0));
}

// Sum of exp(obs_loglik) over every completion of the latent cell that is
// consistent with what was recorded.
double brute_force_observed(const ObservationCell& cell, const RegimeParams& psi,
                            const DiscreteCircle& c, const WindingConfig& cfg) {
  int y_lo = 0, y_hi = 400;
  if (cell.y_star && *cell.y_star >= 2) y_lo = y_hi = *cell.y_star;
  else if (cell.y_star) y_hi = 1;
  double total = 0.0;
  for (int y = y_lo; y <= y_hi; ++y) {
    const int w = y >= 2 ? 1 : 0;
    std::vector<Direction> dirs;
    if (cell.x.is_missing()) {
      dirs.push_back(Direction::calm());
      for (int j = 0; j < c.size(); ++j) dirs.push_back(Direction::at(j));
    } else {
      dirs.push_back(cell.x);
    }
    for (const Direction& x : dirs) {
      if (x.is_calm()) {
        if (y == 0) total += std::exp(obs_loglik(x, std::nullopt, y, w, psi, c));
        continue;
      }
      for (int k = 0; k <= cfg.k_max; ++k) total += std::exp(obs_loglik(x, k, y, w, psi, c));
    }
  }
  return total;
}

}  // namespace

TEST_CASE("speed collapse identity") {
  for (double lambda : {0.1, 1.0, 5.0, 30.0}) {
    for (int y = 0; y <= 200; ++y) {
      const int w = y >= 2 ? 1 : 0;
      const double oracle = poisson_direct(y, lambda);
      INFO("lambda " << lambda << " y " << y);
      REQUIRE(std::exp(joint_yw_logpmf(y, w, lambda)) == Approx(oracle).epsilon(1e-12));
      // Two-stage form: P(W = w) P(Y = y | W = w).
      const double pw = w ? w_success_prob(lambda) : std::exp(-lambda) * (1.0 + lambda);
      REQUIRE(pw * std::exp(linear_logpmf(y, w, lambda)) == Approx(oracle).epsilon(1e-10));
    }
  }
  REQUIRE_THROWS_AS(joint_yw_logpmf(3, 0, 1.0), DomainError);
  REQUIRE_THROWS_AS(linear_logpmf(1, 1, 1.0), DomainError);
}

TEST_CASE("hurdle") {
  REQUIRE(hurdle_prob(0, 0.3) == 0.3);
  REQUIRE(hurdle_prob(4, 0.3) == 0.0);
  const DiscreteCircle c;
  const RegimeParams psi{2.0, {5.0, 1, 0}, 0.4};
  REQUIRE(std::exp(obs_loglik(Direction::calm(), std::nullopt, 0, 0, psi, c)) ==
          Approx(std::exp(-2.0) * 0.4));
  REQUIRE_THROWS_AS(obs_loglik(Direction::calm(), std::nullopt, 2, 1, psi, c), DomainError);
  REQUIRE_THROWS_AS(obs_loglik(Direction::at(3), std::nullopt, 2, 1, psi, c), DomainError);
  REQUIRE_THROWS_AS(obs_loglik(Direction::missing(), std::nullopt, 0, 0, psi, c), DomainError);
}

TEST_CASE("recorded cells are validated") {
  const DiscreteCircle c;
  REQUIRE_NOTHROW(validate(ObservationCell{1, Direction::calm()}, c));
  REQUIRE_NOTHROW(validate(ObservationCell{std::nullopt, Direction::calm()}, c));
  REQUIRE_THROWS_AS(validate(ObservationCell{5, Direction::calm()}, c), DomainError);
  REQUIRE_THROWS_AS(validate(ObservationCell{-1, Direction::at(0)}, c), DomainError);
  REQUIRE_THROWS_AS(validate(ObservationCell{3, Direction::at(36)}, c), DomainError);
}

TEST_CASE("observed likelihood sums out the latent data") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  Rng gen(77);
  std::uniform_real_distribution<double> lam_y(0.05, 40.0), lam_x(0.0, 200.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> idx(0, 35);
  const std::vector<std::optional<int>> speeds{std::nullopt, 0, 1, 2, 7};
  for (int trial = 0; trial < 25; ++trial) {
    const RegimeParams psi{lam_y(gen), {lam_x(gen), gen() % 2 ? 1 : -1, idx(gen)}, unit(gen)};
    const auto table = iwp_log_pmf_table(psi.iwp, c, cfg);
    for (const auto& s : speeds) {
      for (const Direction& x : {Direction::missing(), Direction::calm(), Direction::at(idx(gen))}) {
        const ObservationCell cell{s, x};
        if (x.is_calm() && s && *s >= 2) continue;
        const double oracle = brute_force_observed(cell, psi, c, cfg);
        INFO("trial " << trial << " y* " << (s ? *s : -1) << " kind " << static_cast<int>(x.kind()));
        REQUIRE(std::exp(observed_loglik(cell, psi, table)) == Approx(oracle).epsilon(1e-9).margin(1e-300));
      }
    }
  }
}

TEST_CASE("generative draw frequencies") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  Rng rng(8);
  const RegimeParams psi{1.0, {5.0, -1, 5}, 0.1};
  const int n = 100000;
  long calm = 0;
  std::vector<double> ys;
  for (int i = 0; i < n; ++i) {
    const LatentCell cell = sample_observation(psi, c, cfg, rng);
    REQUIRE(cell.w == (cell.y >= 2 ? 1 : 0));
    if (cell.x.is_calm()) {
      ++calm;
      REQUIRE(cell.y == 0);
      REQUIRE_FALSE(cell.k.has_value());
    }
    ys.push_back(cell.y);
  }
  const double p = std::exp(-1.0) * 0.1;
  REQUIRE(std::abs(calm / static_cast<double>(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  const auto [m, se] = testing::mean_se(ys);
  REQUIRE(std::abs(m - 1.0) < 4.0 * se);

  const RegimeParams no_hurdle{0.5, {1.0, 1, 0}, 0.0};
  for (int i = 0; i < 2000; ++i) REQUIRE_FALSE(sample_observation(no_hurdle, c, cfg, rng).x.is_calm());
}
