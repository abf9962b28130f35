#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>

#include "support.hpp"
#include "windhmm/errors.hpp"
#include "windhmm/hdp.hpp"

using namespace windhmm;
using Catch::Approx;

namespace {

double row_total(const HdpState& h, std::size_t r) {
  return std::accumulate(h.pi[r].begin(), h.pi[r].end(), 0.0) + h.pi_rest[r];
}

HdpState frozen_two_state() {
  HdpState h;
  h.beta = {0.5, 0.3};
  h.beta_rest = 0.2;
  h.pi = {{0.6, 0.4}, {0.25, 0.75}};
  h.pi_rest = {0.0, 0.0};
  return h;
}

}  // namespace

TEST_CASE("stick breaking") {
  const std::vector<double> props{0.5, 0.5, 0.2};
  const StickWeights s = stick_break(props);
  REQUIRE(s.beta[0] == 0.5);
  REQUIRE(s.beta[1] == 0.25);
  REQUIRE(s.beta[2] == Approx(0.05));
  REQUIRE(s.rest == Approx(0.2));
  REQUIRE_THROWS_AS(stick_break(std::vector<double>{1.0}), DomainError);
}

TEST_CASE("transition row prior and posterior means") {
  Rng rng(1);
  const std::vector<double> beta{0.4, 0.3};
  const double rest = 0.3, rho = 0.6, gamma = 8.0;
  const std::vector<int> counts{3, 10};
  std::vector<double> sum(3, 0.0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const TransitionRow row = sample_pi_row(0, beta, rest, rho, gamma, rng, counts);
    REQUIRE(row.p[0] + row.p[1] + row.rest == Approx(1.0));
    sum[0] += row.p[0];
    sum[1] += row.p[1];
    sum[2] += row.rest;
  }
  // Dirichlet(gamma((1-rho) beta + rho delta_0) + counts) means.
  const std::vector<double> alpha{gamma * ((1 - rho) * 0.4 + rho) + 3, gamma * (1 - rho) * 0.3 + 10,
                                  gamma * (1 - rho) * 0.3};
  const double a0 = alpha[0] + alpha[1] + alpha[2];
  for (int j = 0; j < 3; ++j) {
    const double m = alpha[j] / a0;
    REQUIRE(std::abs(sum[j] / n - m) < 4.0 * std::sqrt(m * (1 - m) / (a0 + 1) / n));
  }
}

TEST_CASE("state instantiation keeps rows and beta normalized") {
  Rng rng(2);
  HdpState h = sample_hdp_prior(3, 0.5, 10.0, 2.0, rng);
  REQUIRE(h.size() == 3);
  for (int i = 0; i < 20; ++i) add_state(h, rng);
  REQUIRE(std::accumulate(h.beta.begin(), h.beta.end(), 0.0) + h.beta_rest == Approx(1.0));
  for (std::size_t r = 0; r < h.size(); ++r) {
    REQUIRE(h.pi[r].size() == h.size());
    REQUIRE(row_total(h, r) == Approx(1.0));
  }
  const std::size_t added = extend_representation(h, 1e-3, rng);
  (void)added;
  for (double rest : h.pi_rest) REQUIRE(rest < 1e-3);
}

TEST_CASE("slice variables") {
  Rng rng(3);
  const HdpState h = frozen_two_state();
  const std::vector<int> z{1, 1, 0, 1};
  for (int rep = 0; rep < 1000; ++rep) {
    const auto u = beam_slice(z, h, rng);
    REQUIRE(u[0] > 0.0);
    REQUIRE(u[0] < h.pi[0][1]);
    REQUIRE(u[1] < h.pi[1][1]);
    REQUIRE(u[2] < h.pi[1][0]);
    REQUIRE(u[3] < h.pi[0][1]);
  }
}

TEST_CASE("beam FFBS against enumeration for fixed slices") {
  Rng rng(4);
  const HdpState h = frozen_two_state();
  const std::vector<double> loglik{-1.0, -2.0, -0.5, -0.1, -3.0, -1.2};
  const std::vector<double> u{0.3, 0.2, 0.5};
  // p(z | u, y) is proportional to prod_t I(pi > u_t) exp(loglik).
  std::vector<double> exact(8, 0.0);
  for (int code = 0; code < 8; ++code) {
    int prev = 0;
    double w = 1.0;
    for (int t = 0; t < 3; ++t) {
      const int s = (code >> t) & 1;
      w *= (h.pi[prev][s] > u[t] ? 1.0 : 0.0) * std::exp(loglik[t * 2 + s]);
      prev = s;
    }
    exact[code] = w;
  }
  const double total = std::accumulate(exact.begin(), exact.end(), 0.0);
  for (auto& e : exact) e /= total;
  std::vector<long> counts(8, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto z = ffbs_states(loglik, 2, h, u, rng);
    ++counts[z[0] | (z[1] << 1) | (z[2] << 2)];
  }
  for (int code = 0; code < 8; ++code) {
    if (exact[code] == 0.0) REQUIRE(counts[code] == 0);
  }
  REQUIRE(testing::chi_square_p(counts, exact) > 1e-3);
}

TEST_CASE("beam FFBS errors") {
  Rng rng(5);
  const HdpState h = frozen_two_state();
  const std::vector<double> loglik{0.0, 0.0};
  REQUIRE_THROWS_AS(ffbs_states(loglik, 2, h, std::vector<double>{0.9}, rng), NumericalError);
  REQUIRE_THROWS_AS(ffbs_states(loglik, 2, h, std::vector<double>{0.1, 0.1}, rng), DomainError);
  REQUIRE(ffbs_states(std::vector<double>{}, 2, h, std::vector<double>{}, rng).empty());
}

TEST_CASE("transition counts include the origin") {
  const std::vector<int> z{0, 1, 1, 0};
  const TransitionCounts c = count_transitions(z, 2);
  REQUIRE(c.n_at(0, 0) == 1);
  REQUIRE(c.n_at(0, 1) == 1);
  REQUIRE(c.n_at(1, 1) == 1);
  REQUIRE(c.n_at(1, 0) == 1);
  REQUIRE(c.total_transitions() == 4);
  REQUIRE_THROWS_AS(count_transitions(std::vector<int>{2}, 2), DomainError);
}

TEST_CASE("auxiliary table counts") {
  Rng rng(6);
  HdpState h;
  h.beta = {0.3, 0.5};
  h.beta_rest = 0.2;
  h.pi = {{0.5, 0.5}, {0.5, 0.5}};
  h.pi_rest = {0.0, 0.0};
  h.gamma = 6.0;
  h.rho = 0.4;
  TransitionCounts c = count_transitions(std::vector<int>{1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0}, 2);
  const int n11 = c.n_at(1, 1);
  const double conc11 = h.gamma * (1 - h.rho) * h.beta[1] + h.gamma * h.rho;
  // Chinese restaurant table count: E[m] = sum_i c / (c + i).
  double expected_m = 0.0;
  for (int i = 0; i < n11; ++i) expected_m += conc11 / (conc11 + i);
  const double p_override = h.rho / (h.rho + h.beta[1] * (1 - h.rho));
  std::vector<double> m11, w1, dish0;
  for (int i = 0; i < 40000; ++i) {
    sample_auxiliary_counts(c, h, rng);
    m11.push_back(c.tables[1 * 2 + 1]);
    w1.push_back(c.overrides[1] - p_override * c.tables[1 * 2 + 1]);
    dish0.push_back(c.dish_tables[0]);
    REQUIRE(c.tables[0 * 2 + 1] >= 1);
    REQUIRE(c.overrides[1] <= c.tables[1 * 2 + 1]);
  }
  const auto [mm, mse] = testing::mean_se(m11);
  REQUIRE(std::abs(mm - expected_m) < 4.0 * mse);
  const auto [wm, wse] = testing::mean_se(w1);
  REQUIRE(std::abs(wm) < 4.0 * wse);
  for (double d : dish0) REQUIRE(d >= 1.0);
}

TEST_CASE("global weights given dish tables") {
  Rng rng(7);
  TransitionCounts c = count_transitions(std::vector<int>{}, 3);
  c.dish_tables = {4, 0, 2};
  const double tau = 1.5;
  std::vector<double> b0, rest;
  for (int i = 0; i < 40000; ++i) {
    const StickWeights s = resample_beta(c, tau, rng);
    REQUIRE(s.beta[1] > 0.0);
    REQUIRE(std::accumulate(s.beta.begin(), s.beta.end(), 0.0) + s.rest == Approx(1.0));
    b0.push_back(s.beta[0]);
    rest.push_back(s.beta[1] + s.rest);
  }
  // Aggregation: (beta_0, beta_2, beta_1 + rest) ~ Dir(4, 2, tau).
  const auto [m0, se0] = testing::mean_se(b0);
  REQUIRE(std::abs(m0 - 4.0 / 7.5) < 4.0 * se0);
  const auto [mr, ser] = testing::mean_se(rest);
  REQUIRE(std::abs(mr - 1.5 / 7.5) < 4.0 * ser);
}

TEST_CASE("hyperparameters without data follow the prior") {
  Rng rng(8);
  HdpState h = sample_hdp_prior(1, 0.5, 10.0, 1.0, rng);
  TransitionCounts c = count_transitions(std::vector<int>{}, 1);
  std::vector<double> gammas, rhos, taus;
  const HyperPriors priors;
  for (int i = 0; i < 20000; ++i) {
    resample_hypers(c, h, priors, rng);
    gammas.push_back(h.gamma);
    rhos.push_back(h.rho);
    taus.push_back(h.tau);
  }
  const auto g = testing::mean_se(gammas);
  REQUIRE(std::abs(g.mean - 10.0) < 4.0 * g.se);
  const auto r = testing::mean_se(rhos);
  REQUIRE(std::abs(r.mean - 0.5) < 4.0 * r.se);
  const auto t = testing::mean_se(taus);
  REQUIRE(std::abs(t.mean - 10.0) < 4.0 * t.se);
}

TEST_CASE("pruning keeps the origin and moves mass to the remainder") {
  Rng rng(9);
  HdpState h = sample_hdp_prior(4, 0.5, 5.0, 1.0, rng);
  const double beta_total = std::accumulate(h.beta.begin(), h.beta.end(), 0.0) + h.beta_rest;
  std::vector<int> z{2, 2, 3, 2};
  const auto map = prune_states(z, h);
  REQUIRE(map == std::vector<int>{0, -1, 1, 2});
  REQUIRE(z == std::vector<int>{1, 1, 2, 1});
  REQUIRE(h.size() == 3);
  REQUIRE(std::accumulate(h.beta.begin(), h.beta.end(), 0.0) + h.beta_rest == Approx(beta_total));
  for (std::size_t r = 0; r < h.size(); ++r) REQUIRE(row_total(h, r) == Approx(1.0));
}

TEST_CASE("successor draws match the row") {
  Rng rng(10);
  HdpState h = frozen_two_state();
  h.pi[1] = {0.2, 0.5};
  h.pi_rest[1] = 0.3;
  h.rho = 0.5;
  h.gamma = 4.0;
  long to_rest = 0, to0 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    HdpState copy = h;
    const std::size_t s = sample_successor(copy, 1, rng);
    if (s >= 2) ++to_rest;
    if (s == 0) ++to0;
    REQUIRE(s < copy.size());
  }
  REQUIRE(std::abs(to_rest / double(n) - 0.3) < 4.0 * std::sqrt(0.21 / n));
  REQUIRE(std::abs(to0 / double(n) - 0.2) < 4.0 * std::sqrt(0.16 / n));
}
