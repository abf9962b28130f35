#include "windhmm/summary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "windhmm/emission.hpp"
#include "windhmm/errors.hpp"
#include "windhmm/sampling.hpp"

namespace windhmm {

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int modal_r(const std::map<int, double>& pmf) {
  int best = 0;
  double best_p = -1.0;
  for (const auto& [r, p] : pmf) {
    if (p > best_p) {
      best = r;
      best_p = p;
    }
  }
  return best;
}

std::map<int, double> r_distribution(const std::vector<Draw>& draws) {
  std::map<int, double> pmf;
  for (const Draw& d : draws) pmf[d.regimes()] += 1.0;
  for (auto& [r, p] : pmf) p /= static_cast<double>(draws.size());
  return pmf;
}

std::vector<Draw> modal_draws(const std::vector<Draw>& draws, int r) {
  std::vector<Draw> out;
  for (const Draw& d : draws) {
    if (d.regimes() == r) out.push_back(relabel(d));
  }
  return out;
}

}  // namespace

Estimate summarize_values(std::vector<double> values) {
  if (values.empty()) throw DomainError("no values to summarize");
  std::sort(values.begin(), values.end());
  Estimate e;
  // Summation rounding can push the mean of a constant sample past it.
  e.mean = std::clamp(std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()),
                      values.front(), values.back());
  e.lo = quantile(values, 0.025);
  e.hi = quantile(values, 0.975);
  return e;
}

Estimate summarize_angles(const std::vector<double>& angles) {
  if (angles.empty()) throw DomainError("no values to summarize");
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  double mean = std::atan2(s, c);
  if (mean < 0.0) mean += kTwoPi;
  std::vector<double> dev;
  dev.reserve(angles.size());
  for (double a : angles) dev.push_back(std::remainder(a - mean, kTwoPi));
  std::sort(dev.begin(), dev.end());
  return {mean, mean + std::min(0.0, quantile(dev, 0.025)), mean + std::max(0.0, quantile(dev, 0.975))};
}

Draw relabel(const Draw& d) {
  std::vector<std::size_t> order(d.states.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = d.states[a].psi;
    const auto& pb = d.states[b].psi;
    if (pa.lambda_y != pb.lambda_y) return pa.lambda_y < pb.lambda_y;
    return pa.iwp.lambda_x < pb.iwp.lambda_x;
  });
  Draw out = d;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.states[i] = d.states[order[i]];
    for (std::size_t j = 0; j < order.size(); ++j) out.pi[i][j] = d.pi[order[i]][order[j]];
  }
  return out;
}

PosteriorSummary summarize(const std::vector<Draw>& draws, const DiscreteCircle& circle) {
  if (draws.empty()) throw DomainError("cannot summarize an empty draw set");
  PosteriorSummary s;
  s.draws = static_cast<long>(draws.size());
  s.circle_points = circle.size();
  s.r_pmf = r_distribution(draws);
  s.r_mode = modal_r(s.r_pmf);

  std::vector<double> rho, gamma, tau;
  for (const Draw& d : draws) {
    rho.push_back(d.rho);
    gamma.push_back(d.gamma);
    tau.push_back(d.tau);
  }
  s.rho = summarize_values(rho);
  s.gamma = summarize_values(gamma);
  s.tau = summarize_values(tau);

  const std::vector<Draw> kept = modal_draws(draws, s.r_mode);
  s.mode_draws = static_cast<long>(kept.size());
  const auto R = static_cast<std::size_t>(s.r_mode);
  const auto n = static_cast<double>(kept.size());
  for (std::size_t r = 0; r < R; ++r) {
    std::vector<double> ly, lx, nu, mu, c, occ;
    RegimeSummary rs;
    rs.xi_pmf.assign(circle.size(), 0.0);
    for (const Draw& d : kept) {
      const RegimeParams& p = d.states[r].psi;
      ly.push_back(p.lambda_y);
      lx.push_back(p.iwp.lambda_x);
      nu.push_back(p.nu);
      mu.push_back(iwp_mean(p.iwp, circle));
      c.push_back(iwp_concentration(p.iwp, circle));
      occ.push_back(static_cast<double>(d.states[r].occupancy));
      if (p.iwp.eta == 1) rs.eta_positive += 1.0 / n;
      rs.xi_pmf[p.iwp.xi] += 1.0 / n;
    }
    rs.lambda_y = summarize_values(ly);
    rs.lambda_x = summarize_values(lx);
    rs.nu = summarize_values(nu);
    rs.mu = summarize_angles(mu);
    rs.c = summarize_values(c);
    rs.occupancy = summarize_values(occ);
    s.regimes.push_back(std::move(rs));
  }
  s.transition.assign(R, std::vector<Estimate>(R));
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < R; ++j) {
      std::vector<double> v;
      for (const Draw& d : kept) v.push_back(d.pi[i][j]);
      s.transition[i][j] = summarize_values(v);
    }
  }
  return s;
}

nlohmann::json to_json(const Estimate& e) { return {{"mean", e.mean}, {"lo", e.lo}, {"hi", e.hi}}; }

nlohmann::json to_json(const PosteriorSummary& s, const DiscreteCircle& circle) {
  nlohmann::json r_pmf = nlohmann::json::object();
  for (const auto& [r, p] : s.r_pmf) r_pmf[std::to_string(r)] = p;
  nlohmann::json regimes = nlohmann::json::array();
  for (std::size_t r = 0; r < s.regimes.size(); ++r) {
    const RegimeSummary& rs = s.regimes[r];
    nlohmann::json xi = nlohmann::json::object();
    for (int j = 0; j < circle.size(); ++j) {
      if (rs.xi_pmf[j] > 0.0) xi[std::to_string(j)] = rs.xi_pmf[j];
    }
    regimes.push_back({{"regime", r + 1},
                       {"lambda_y", to_json(rs.lambda_y)},
                       {"lambda_x", to_json(rs.lambda_x)},
                       {"nu", to_json(rs.nu)},
                       {"mu", to_json(rs.mu)},
                       {"c", to_json(rs.c)},
                       {"occupancy", to_json(rs.occupancy)},
                       {"eta", {{"-1", 1.0 - rs.eta_positive}, {"+1", rs.eta_positive}}},
                       {"xi", xi}});
  }
  nlohmann::json transition = nlohmann::json::array();
  for (const auto& row : s.transition) {
    nlohmann::json jr = nlohmann::json::array();
    for (const Estimate& e : row) jr.push_back(to_json(e));
    transition.push_back(jr);
  }
  return {{"draws", s.draws},
          {"circle_points", s.circle_points},
          {"R", {{"pmf", r_pmf}, {"mode", s.r_mode}, {"mode_draws", s.mode_draws}}},
          {"regimes", regimes},
          {"transition", transition},
          {"rho", to_json(s.rho)},
          {"gamma", to_json(s.gamma)},
          {"tau", to_json(s.tau)}};
}

std::vector<RegimeDensity> predictive_density(const std::vector<Draw>& draws,
                                              const DiscreteCircle& circle,
                                              const WindingConfig& cfg, int y_max) {
  if (draws.empty()) throw DomainError("cannot build densities from an empty draw set");
  if (y_max < 0) throw ConfigError("y_max must be nonnegative");
  const int R = modal_r(r_distribution(draws));
  const std::vector<Draw> kept = modal_draws(draws, R);
  const double w = 1.0 / static_cast<double>(kept.size());
  const int l = circle.size();

  std::vector<RegimeDensity> out(R);
  for (auto& rd : out) {
    rd.direction.assign(l, 0.0);
    rd.speed.assign(y_max + 1, 0.0);
  }
  std::vector<double> iwp(l);
  for (const Draw& d : kept) {
    for (int r = 0; r < R; ++r) {
      const RegimeParams& p = d.states[r].psi;
      RegimeDensity& rd = out[r];
      const double calm = std::exp(-p.lambda_y) * p.nu;
      double total = 0.0;
      for (int j = 0; j < l; ++j) total += iwp[j] = iwp_pmf(j, p.iwp, circle, cfg);
      rd.calm += w * calm;
      for (int j = 0; j < l; ++j) rd.direction[j] += w * (1.0 - calm) * iwp[j] / total;
      double below = 0.0;
      for (int v = 0; v <= y_max; ++v) {
        const double pv = std::exp(log_poisson(v, p.lambda_y));
        below += pv;
        rd.speed[v] += w * pv;
      }
      rd.speed_tail += w * std::max(0.0, 1.0 - below);
    }
  }
  return out;
}

}  // namespace windhmm
