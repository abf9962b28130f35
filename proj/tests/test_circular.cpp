#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "support.hpp"
#include "windhmm/circular.hpp"
#include "windhmm/errors.hpp"
#include "windhmm/gibbs.hpp"

using namespace windhmm;
using Catch::Approx;

namespace {

// pmf straight from the generative definition: push Poisson mass of every
// q through x = eta (q + xi) mod l, with q running far past any truncation.
std::vector<double> wrapped_by_definition(const IwpParams& p, const DiscreteCircle& circle) {
  std::vector<double> pmf(circle.size(), 0.0);
  const long q_max = static_cast<long>(p.lambda_x + 60.0 * std::sqrt(p.lambda_x + 1.0) + 200.0);
  for (long q = 0; q <= q_max; ++q) {
    pmf[circle.wrap(p.eta * (q + p.xi))] += std::exp(log_poisson(q, p.lambda_x));
  }
  return pmf;
}

}  // namespace

TEST_CASE("discrete circle") {
  const DiscreteCircle c;
  REQUIRE(c.size() == 36);
  REQUIRE(c.angle(9) == Approx(std::numbers::pi / 2));
  REQUIRE(c.wrap(-1) == 35);
  REQUIRE(c.wrap(73) == 1);
  REQUIRE_THROWS_AS(DiscreteCircle(1), ConfigError);

  REQUIRE(grid_index(std::numbers::pi / 2, c) == 9);
  REQUIRE(grid_index(2 * std::numbers::pi * 7 / 36 + 4 * std::numbers::pi, c) == 7);
  REQUIRE(grid_index(-2 * std::numbers::pi / 36, c) == 35);
  REQUIRE_THROWS_AS(grid_index(0.1, c), GridError);
}

TEST_CASE("winding truncation") {
  const DiscreteCircle c;
  REQUIRE(compute_k_max(500.0, c) == 16);
  REQUIRE(WindingConfig::from_lambda_max(500.0, c).max_unwrapped(c) == 611);
  REQUIRE(compute_k_max(20.0, DiscreteCircle(6)) ==
          static_cast<int>(std::ceil(3 * std::sqrt(20.0) / 6 + 20.0 / 6 - 0.5)));
  REQUIRE_THROWS_AS(compute_k_max(0.0, c), ConfigError);
}

TEST_CASE("unwrapped index") {
  const DiscreteCircle c;
  REQUIRE(unwrapped_index(7, 0, {1.0, 1, 7}, c) == 0);
  REQUIRE(unwrapped_index(7, 2, {1.0, 1, 5}, c) == 2 + 72);
  // eta = -1 reads the circle backwards: x = -(q + xi).
  REQUIRE(unwrapped_index(c.wrap(-(3 + 5)), 0, {1.0, -1, 5}, c) == 3);
}

TEST_CASE("iwp pmf against the generative definition") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  Rng gen(2024);
  std::uniform_real_distribution<double> lam(0.0, 300.0);
  std::uniform_int_distribution<int> idx(0, 35);
  for (int trial = 0; trial < 40; ++trial) {
    const IwpParams p{lam(gen), gen() % 2 ? 1 : -1, idx(gen)};
    const auto oracle = wrapped_by_definition(p, c);
    double total = 0.0;
    for (int x = 0; x < 36; ++x) {
      const double v = iwp_pmf(x, p, c, cfg);
      INFO("lambda " << p.lambda_x << " eta " << p.eta << " xi " << p.xi << " x " << x);
      REQUIRE(v == Approx(oracle[x]).margin(1e-12));
      total += v;
    }
    REQUIRE(total == Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("truncation deficit at large lambda is the Poisson tail") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  double total = 0.0;
  for (int x = 0; x < 36; ++x) total += iwp_pmf(x, {500.0, 1, 0}, c, cfg);
  // P(Q > 611) = P(612, 500), regularized lower incomplete gamma.
  const double tail = boost::math::gamma_p(612.0, 500.0);
  REQUIRE(1.0 - total == Approx(tail).epsilon(1e-6));
  REQUIRE_THROWS_AS(iwp_pmf(0, {501.0, 1, 0}, c, cfg), ConfigError);
}

TEST_CASE("augmented pmf marginalizes to the pmf") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  for (double lambda : {0.5, 1.0, 5.0, 50.0, 300.0, 500.0}) {
    const IwpParams p{lambda, -1, 11};
    const auto table = iwp_log_pmf_table(p, c, cfg);
    for (int x = 0; x < 36; ++x) {
      double s = 0.0;
      for (int k = 0; k <= cfg.k_max; ++k) s += std::exp(iwp_augmented_logpmf(x, k, p, c));
      REQUIRE(std::abs(s - iwp_pmf(x, p, c, cfg)) < 1e-12);
      REQUIRE(std::exp(table[x]) == Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("closed-form mean direction and concentration") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  for (double lambda : {0.0, 0.5, 1.0, 5.0, 20.0, 50.0}) {
    for (int eta : {-1, 1}) {
      const IwpParams p{lambda, eta, 13};
      std::complex<double> r = 0.0;
      for (int x = 0; x < 36; ++x) r += iwp_pmf(x, p, c, cfg) * std::polar(1.0, c.angle(x));
      INFO("lambda " << lambda << " eta " << eta);
      REQUIRE(iwp_concentration(p, c) == Approx(std::abs(r)).margin(1e-6));
      const double diff = std::remainder(iwp_mean(p, c) - std::arg(r), kTwoPi);
      REQUIRE(std::abs(diff) < 1e-6);
    }
  }
  REQUIRE(iwp_concentration({93.374, 1, 0}, c) == Approx(0.242062).margin(5e-7));
}

TEST_CASE("invariance under rotation and reflection of the grid") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  for (double lambda : {0.7, 12.0, 150.0}) {
    for (int x = 0; x < 36; ++x) {
      const double base = iwp_pmf(x, {lambda, 1, 4}, c, cfg);
      REQUIRE(iwp_pmf(c.wrap(x + 9), {lambda, 1, 13}, c, cfg) == Approx(base).epsilon(1e-12));
      REQUIRE(iwp_pmf(c.wrap(-x), {lambda, -1, 4}, c, cfg) == Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("iwp sampler matches the pmf") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  Rng rng(9);
  for (const IwpParams p : {IwpParams{5.0, -1, 5}, IwpParams{300.0, 1, 10}, IwpParams{0.0, 1, 7}}) {
    std::vector<long> counts(36, 0);
    std::vector<double> probs(36);
    for (int x = 0; x < 36; ++x) probs[x] = iwp_pmf(x, p, c, cfg);
    for (int i = 0; i < 36000; ++i) {
      const IwpDraw d = iwp_sample(p, c, cfg, rng);
      REQUIRE(d.k >= 0);
      REQUIRE(d.k <= cfg.k_max);
      ++counts[d.x];
    }
    INFO("lambda " << p.lambda_x);
    REQUIRE(testing::chi_square_p(counts, probs) > 1e-3);
  }
  // No spread at lambda 0: every draw is xi.
  const IwpDraw d = iwp_sample({0.0, 1, 7}, c, cfg, rng);
  REQUIRE(d.x == 7);
  REQUIRE(d.k == 0);
}

TEST_CASE("winding number conditional") {
  const DiscreteCircle c;
  const auto cfg = WindingConfig::from_lambda_max(500.0, c);
  SECTION("lambda 1: k = 0 except with negligible probability") {
    // P(k >= 1 | x) <= Poisson(>= 36; 1) / Poisson(x; 1) < 1e-30 for x < 5.
    const WindingTable table({1.0, 1, 0}, c, cfg);
    for (int x = 0; x < 5; ++x) REQUIRE(1.0 - table.cdf[x * table.width] < 1e-30);
  }
  SECTION("lambda 300: modal winding number 8") {
    Rng rng(4);
    std::vector<long> counts(cfg.k_max + 1, 0);
    for (int i = 0; i < 4000; ++i) ++counts[update_k(12, {300.0, 1, 0}, c, cfg, rng)];
    REQUIRE(std::max_element(counts.begin(), counts.end()) - counts.begin() == 8);
  }
  SECTION("table draws agree with update_k") {
    Rng a(1), b(2);
    const IwpParams p{80.0, -1, 3};
    const WindingTable table(p, c, cfg);
    std::vector<long> ca(cfg.k_max + 1, 0), cb(cfg.k_max + 1, 0);
    for (int i = 0; i < 20000; ++i) {
      ++ca[update_k(20, p, c, cfg, a)];
      ++cb[table.draw(20, b)];
    }
    std::vector<double> probs(cfg.k_max + 1);
    double total = 0.0;
    for (int k = 0; k <= cfg.k_max; ++k) total += probs[k] = std::exp(iwp_augmented_logpmf(20, k, p, c));
    for (auto& v : probs) v /= total;
    REQUIRE(testing::chi_square_p(ca, probs) > 1e-3);
    REQUIRE(testing::chi_square_p(cb, probs) > 1e-3);
  }
}
