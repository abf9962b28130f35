#include "windhmm/hdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "windhmm/errors.hpp"

namespace windhmm {

StickWeights stick_break(std::span<const double> beta_star) {
  StickWeights out;
  out.beta.reserve(beta_star.size());
  for (double b : beta_star) {
    if (!(b > 0.0 && b < 1.0)) throw DomainError("stick proportions must lie in (0, 1)");
    out.beta.push_back(b * out.rest);
    out.rest *= 1.0 - b;
  }
  return out;
}

TransitionRow sample_pi_row(std::size_t r, std::span<const double> beta, double beta_rest,
                            double rho, double gamma, Rng& rng, std::span<const int> counts) {
  const std::size_t K = beta.size();
  std::vector<double> alpha(K + 1);
  for (std::size_t j = 0; j < K; ++j) {
    alpha[j] = gamma * ((1.0 - rho) * beta[j] + (j == r ? rho : 0.0));
    if (!counts.empty()) alpha[j] += counts[j];
  }
  alpha[K] = gamma * (1.0 - rho) * beta_rest;
  std::vector<double> draw = sample_dirichlet(alpha, rng);
  TransitionRow row;
  row.rest = draw.back();
  draw.pop_back();
  row.p = std::move(draw);
  return row;
}

HdpState sample_hdp_prior(std::size_t states, double rho, double gamma, double tau, Rng& rng) {
  HdpState hdp;
  hdp.rho = rho;
  hdp.gamma = gamma;
  hdp.tau = tau;
  for (std::size_t i = 0; i < std::max<std::size_t>(states, 1); ++i) add_state(hdp, rng);
  return hdp;
}

std::vector<double> beam_slice(std::span<const int> z, const HdpState& hdp, Rng& rng) {
  std::vector<double> u(z.size());
  int prev = 0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    const double p = hdp.pi[prev][z[t]];
    if (!(p > 0.0)) throw NumericalError("current path uses a zero-probability transition");
    u[t] = uniform_open(rng) * p;
    prev = z[t];
  }
  return u;
}

void add_state(HdpState& hdp, Rng& rng) {
  const double stick = sample_beta(1.0, hdp.tau, rng);
  const double b_new = stick * hdp.beta_rest;
  hdp.beta_rest *= 1.0 - stick;
  hdp.beta.push_back(b_new);

  const double a = hdp.gamma * (1.0 - hdp.rho) * b_new;
  const double b = hdp.gamma * (1.0 - hdp.rho) * hdp.beta_rest;
  for (std::size_t r = 0; r < hdp.pi.size(); ++r) {
    const double split = (a > 0.0 || b > 0.0) ? sample_beta(a, b, rng) : 0.0;
    hdp.pi[r].push_back(hdp.pi_rest[r] * split);
    hdp.pi_rest[r] *= 1.0 - split;
  }
  TransitionRow row =
      sample_pi_row(hdp.beta.size() - 1, hdp.beta, hdp.beta_rest, hdp.rho, hdp.gamma, rng);
  hdp.pi.push_back(std::move(row.p));
  hdp.pi_rest.push_back(row.rest);
}

std::size_t extend_representation(HdpState& hdp, double threshold, Rng& rng) {
  std::size_t added = 0;
  const auto max_rest = [&] {
    return hdp.pi_rest.empty() ? 1.0 : *std::max_element(hdp.pi_rest.begin(), hdp.pi_rest.end());
  };
  while (hdp.size() == 0 || max_rest() >= threshold) {
    if (added >= 10000) {
      throw NumericalError("remainder mass did not fall below the slice threshold after 10^4 "
                           "extensions");
    }
    add_state(hdp, rng);
    ++added;
  }
  return added;
}

std::vector<int> ffbs_states(std::span<const double> loglik, std::size_t K, const HdpState& hdp,
                             std::span<const double> u, Rng& rng) {
  if (K == 0 || loglik.size() % K != 0) throw DomainError("likelihood matrix shape mismatch");
  const std::size_t T = loglik.size() / K;
  if (u.size() != T) throw DomainError("slice vector length mismatch");
  if (hdp.size() < K) throw DomainError("fewer represented states than likelihood columns");
  std::vector<int> z(T);
  if (T == 0) return z;

  // Columns of each row in decreasing transition probability, so the
  // admissible set {j : pi_ij > u} is a prefix.
  std::vector<std::vector<std::size_t>> order(K);
  for (std::size_t i = 0; i < K; ++i) {
    order[i].resize(K);
    std::iota(order[i].begin(), order[i].end(), 0);
    std::sort(order[i].begin(), order[i].end(), [&](std::size_t a, std::size_t b) {
      return hdp.pi[i][a] > hdp.pi[i][b] || (hdp.pi[i][a] == hdp.pi[i][b] && a < b);
    });
  }

  std::vector<double> filt(T * K, 0.0);
  std::vector<double> pred(K);
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(pred.begin(), pred.end(), 0.0);
    if (t == 0) {
      for (std::size_t j : order[0]) {
        if (!(hdp.pi[0][j] > u[0])) break;
        pred[j] = 1.0;
      }
    } else {
      const double* prev = &filt[(t - 1) * K];
      for (std::size_t i = 0; i < K; ++i) {
        if (prev[i] == 0.0) continue;
        for (std::size_t j : order[i]) {
          if (!(hdp.pi[i][j] > u[t])) break;
          pred[j] += prev[i];
        }
      }
    }
    const double* ll = &loglik[t * K];
    double hi = kNegInf;
    for (std::size_t j = 0; j < K; ++j) {
      if (pred[j] > 0.0) hi = std::max(hi, ll[j]);
    }
    if (hi == kNegInf) {
      throw NumericalError("no admissible state with positive likelihood at t=" +
                           std::to_string(t));
    }
    double* cur = &filt[t * K];
    double total = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      cur[j] = pred[j] > 0.0 ? pred[j] * std::exp(ll[j] - hi) : 0.0;
      total += cur[j];
    }
    for (std::size_t j = 0; j < K; ++j) cur[j] /= total;
  }

  z[T - 1] = static_cast<int>(
      sample_categorical(std::span<const double>(&filt[(T - 1) * K], K), rng));
  std::vector<double> back(K);
  for (std::size_t t = T - 1; t-- > 0;) {
    const int next = z[t + 1];
    for (std::size_t i = 0; i < K; ++i) {
      back[i] = hdp.pi[i][next] > u[t + 1] ? filt[t * K + i] : 0.0;
    }
    z[t] = static_cast<int>(sample_categorical(back, rng));
  }
  return z;
}

int TransitionCounts::total_transitions() const { return std::accumulate(n.begin(), n.end(), 0); }
int TransitionCounts::total_tables() const {
  return std::accumulate(tables.begin(), tables.end(), 0);
}
int TransitionCounts::total_overrides() const {
  return std::accumulate(overrides.begin(), overrides.end(), 0);
}

TransitionCounts count_transitions(std::span<const int> z, std::size_t K) {
  TransitionCounts c;
  c.K = K;
  c.n.assign(K * K, 0);
  c.tables.assign(K * K, 0);
  c.overrides.assign(K, 0);
  c.dish_tables.assign(K, 0);
  int prev = 0;
  for (int s : z) {
    if (s < 0 || static_cast<std::size_t>(s) >= K) throw DomainError("state label out of range");
    ++c.n[static_cast<std::size_t>(prev) * K + s];
    prev = s;
  }
  return c;
}

void sample_auxiliary_counts(TransitionCounts& c, const HdpState& hdp, Rng& rng) {
  const std::size_t K = c.K;
  const double alpha = hdp.gamma * (1.0 - hdp.rho);
  const double kappa = hdp.gamma * hdp.rho;
  std::fill(c.tables.begin(), c.tables.end(), 0);
  std::fill(c.overrides.begin(), c.overrides.end(), 0);
  std::fill(c.dish_tables.begin(), c.dish_tables.end(), 0);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      const int n = c.n_at(j, k);
      if (n == 0) continue;
      const double conc = alpha * hdp.beta[k] + (j == k ? kappa : 0.0);
      int m = 0;
      for (int i = 0; i < n; ++i) {
        if (sample_bernoulli(conc / (i + conc), rng)) ++m;
      }
      c.tables[j * K + k] = std::max(m, 1);
    }
  }
  for (std::size_t j = 0; j < K; ++j) {
    const int m = c.tables[j * K + j];
    const double p = hdp.rho / (hdp.rho + hdp.beta[j] * (1.0 - hdp.rho));
    c.overrides[j] = sample_binomial(m, p, rng);
  }
  for (std::size_t k = 0; k < K; ++k) {
    int col = 0;
    for (std::size_t j = 0; j < K; ++j) col += c.tables[j * K + k];
    c.dish_tables[k] = col - c.overrides[k];
  }
  // The origin is the size-biased first stick: one extra draw from beta.
  if (K > 0) c.dish_tables[0] += 1;
}

StickWeights resample_beta(const TransitionCounts& c, double tau, Rng& rng) {
  const std::size_t K = c.K;
  std::vector<double> alpha;
  std::vector<std::size_t> with_tables;
  for (std::size_t k = 0; k < K; ++k) {
    if (c.dish_tables[k] > 0) {
      with_tables.push_back(k);
      alpha.push_back(c.dish_tables[k]);
    }
  }
  alpha.push_back(tau);
  const std::vector<double> draw = sample_dirichlet(alpha, rng);
  StickWeights out;
  out.beta.assign(K, 0.0);
  for (std::size_t i = 0; i < with_tables.size(); ++i) out.beta[with_tables[i]] = draw[i];
  out.rest = draw.back();
  for (std::size_t k = 0; k < K; ++k) {
    if (c.dish_tables[k] > 0) continue;
    const double stick = sample_beta(1.0, tau, rng);
    out.beta[k] = stick * out.rest;
    out.rest *= 1.0 - stick;
  }
  return out;
}

void resample_hypers(const TransitionCounts& c, HdpState& hdp, const HyperPriors& priors,
                     Rng& rng) {
  const std::size_t K = c.K;
  const int m_total = c.total_tables();

  // gamma: one Beta/Bernoulli auxiliary pair per restaurant with customers.
  double shape = priors.gamma_shape + m_total;
  double rate = priors.gamma_rate;
  for (std::size_t j = 0; j < K; ++j) {
    int nj = 0;
    for (std::size_t k = 0; k < K; ++k) nj += c.n_at(j, k);
    if (nj == 0) continue;
    const double r = sample_beta(hdp.gamma + 1.0, nj, rng);
    if (sample_bernoulli(nj / (nj + hdp.gamma), rng)) shape -= 1.0;
    rate -= std::log(r);
  }
  hdp.gamma = sample_gamma(shape, rate, rng);

  const int w_total = c.total_overrides();
  hdp.rho = sample_beta(1.0 + w_total, 1.0 + m_total - w_total, rng);

  int dishes = 0;
  int dish_total = 0;
  for (int d : c.dish_tables) {
    if (d > 0) ++dishes;
    dish_total += d;
  }
  if (dish_total == 0) {
    hdp.tau = sample_gamma(priors.tau_shape, priors.tau_rate, rng);
  } else {
    const double eta = sample_beta(hdp.tau + 1.0, dish_total, rng);
    const bool s = sample_bernoulli(dish_total / (dish_total + hdp.tau), rng);
    hdp.tau = sample_gamma(priors.tau_shape + dishes - (s ? 1.0 : 0.0),
                           priors.tau_rate - std::log(eta), rng);
  }
}

void resample_pi(const TransitionCounts& c, HdpState& hdp, Rng& rng) {
  const std::size_t K = c.K;
  for (std::size_t r = 0; r < K; ++r) {
    TransitionRow row =
        sample_pi_row(r, hdp.beta, hdp.beta_rest, hdp.rho, hdp.gamma, rng,
                      std::span<const int>(&c.n[r * K], K));
    hdp.pi[r] = std::move(row.p);
    hdp.pi_rest[r] = row.rest;
  }
}

std::vector<int> prune_states(std::vector<int>& z, HdpState& hdp) {
  const std::size_t K = hdp.size();
  std::vector<int> occupancy(K, 0);
  for (int s : z) ++occupancy[s];
  std::vector<int> map(K, -1);
  int next = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (k == 0 || occupancy[k] > 0) map[k] = next++;
  }
  if (static_cast<std::size_t>(next) == K) return map;

  HdpState out;
  out.rho = hdp.rho;
  out.gamma = hdp.gamma;
  out.tau = hdp.tau;
  out.beta_rest = hdp.beta_rest;
  for (std::size_t k = 0; k < K; ++k) {
    if (map[k] >= 0) {
      out.beta.push_back(hdp.beta[k]);
    } else {
      out.beta_rest += hdp.beta[k];
    }
  }
  for (std::size_t r = 0; r < K; ++r) {
    if (map[r] < 0) continue;
    std::vector<double> row;
    double rest = hdp.pi_rest[r];
    for (std::size_t k = 0; k < K; ++k) {
      if (map[k] >= 0) {
        row.push_back(hdp.pi[r][k]);
      } else {
        rest += hdp.pi[r][k];
      }
    }
    out.pi.push_back(std::move(row));
    out.pi_rest.push_back(rest);
  }
  hdp = std::move(out);
  for (int& s : z) s = map[s];
  return map;
}

std::size_t sample_successor(HdpState& hdp, std::size_t from, Rng& rng) {
  double v = uniform_open(rng);
  const auto& row = hdp.pi[from];
  for (std::size_t j = 0; j < row.size(); ++j) {
    v -= row[j];
    if (v < 0.0) return j;
  }
  // Landed in the remainder: instantiate states until one absorbs v.
  for (std::size_t added = 0; added < 10000; ++added) {
    add_state(hdp, rng);
    const std::size_t fresh = hdp.size() - 1;
    v -= hdp.pi[from][fresh];
    if (v < 0.0 || !(hdp.pi_rest[from] > 0.0)) return fresh;
  }
  throw NumericalError("successor draw did not terminate");
}

}  // namespace windhmm
