#include "windhmm/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "windhmm/errors.hpp"

namespace windhmm {

void ChainConfig::validate() const {
  if (n_iter <= 0) throw ConfigError("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw ConfigError("burn_in must lie in [0, n_iter)");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (init_states < 1) throw ConfigError("init_states must be at least 1");
  if (circle_points < 2) throw ConfigError("circle needs at least 2 points");
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(priors.a_y, "a_y");
  positive(priors.b_y, "b_y");
  positive(priors.c_y, "c_y");
  positive(priors.a_x, "a_x");
  positive(priors.b_x, "b_x");
  positive(priors.lambda_max, "lambda_max");
  positive(priors.hyper.gamma_shape, "gamma_shape");
  positive(priors.hyper.gamma_rate, "gamma_rate");
  positive(priors.hyper.tau_shape, "tau_shape");
  positive(priors.hyper.tau_rate, "tau_rate");
}

void check_invariants(const SweepState& s, std::span<const ObservationCell> data,
                      const DiscreteCircle& circle, const WindingConfig& cfg) {
  if (s.cells.size() != data.size() || s.z.size() != data.size()) {
    throw DomainError("sweep state length does not match the data");
  }
  if (s.psi.size() != s.hdp.size()) throw DomainError("psi and hdp state counts differ");
  for (std::size_t t = 0; t < data.size(); ++t) {
    const LatentCell& c = s.cells[t];
    const std::string at = " at t=" + std::to_string(t);
    if (c.w != (c.y >= 2 ? 1 : 0)) throw DomainError("w != I(y >= 2)" + at);
    if (c.x.is_missing()) throw DomainError("latent direction left missing" + at);
    if (c.x.is_calm() && (c.y != 0 || c.k)) throw DomainError("calm cell with speed or k" + at);
    if (c.x.is_grid() && (!c.k || *c.k < 0 || *c.k > cfg.k_max || !circle.contains(c.x.index()))) {
      throw DomainError("grid cell with invalid winding number" + at);
    }
    const ObservationCell& o = data[t];
    if (o.y_star && *o.y_star >= 2 && c.y != *o.y_star) throw DomainError("y != y*" + at);
    if (o.y_star && *o.y_star < 2 && c.y >= 2) throw DomainError("y outside {0,1}" + at);
    if (!o.x.is_missing() && !(o.x == c.x)) throw DomainError("recorded direction changed" + at);
    if (s.z[t] < 0 || static_cast<std::size_t>(s.z[t]) >= s.psi.size()) {
      throw DomainError("regime label out of range" + at);
    }
  }
}

double update_lambda_y(long sum_y, long n, const Priors& priors, Rng& rng) {
  return sample_truncated_gamma(priors.a_y + static_cast<double>(sum_y),
                                priors.b_y + static_cast<double>(n), priors.c_y, rng);
}

double update_lambda_x(long sum_m, long n, const Priors& priors, Rng& rng) {
  return sample_truncated_gamma(priors.a_x + static_cast<double>(sum_m),
                                priors.b_x + static_cast<double>(n), priors.lambda_max, rng);
}

int update_k(int x, const IwpParams& p, const DiscreteCircle& circle, const WindingConfig& cfg,
             Rng& rng) {
  std::vector<double> logw(cfg.k_max + 1);
  for (int k = 0; k <= cfg.k_max; ++k) logw[k] = iwp_augmented_logpmf(x, k, p, circle);
  return static_cast<int>(sample_categorical_log(logw, rng));
}

WindingTable::WindingTable(const IwpParams& p, const DiscreteCircle& circle,
                           const WindingConfig& cfg)
    : width(cfg.k_max + 1), cdf(static_cast<std::size_t>(circle.size()) * width) {
  std::vector<double> logw(width);
  for (int x = 0; x < circle.size(); ++x) {
    for (int k = 0; k < width; ++k) logw[k] = iwp_augmented_logpmf(x, k, p, circle);
    const double norm = log_sum_exp(logw);
    if (!std::isfinite(norm)) throw NumericalError("direction has zero probability for every k");
    double acc = 0.0;
    for (int k = 0; k < width; ++k) cdf[x * width + k] = acc += std::exp(logw[k] - norm);
  }
}

int WindingTable::draw(int x, Rng& rng) const {
  const double* row = cdf.data() + static_cast<std::size_t>(x) * width;
  const double u = uniform_open(rng) * row[width - 1];
  const auto k = static_cast<int>(std::upper_bound(row, row + width, u) - row);
  return std::min(k, width - 1);
}

std::vector<int> direction_histogram(std::span<const LatentCell> cells,
                                     const DiscreteCircle& circle, const WindingConfig& cfg) {
  const int width = cfg.k_max + 1;
  std::vector<int> hist(static_cast<std::size_t>(circle.size()) * width, 0);
  for (const LatentCell& c : cells) {
    if (c.x.is_grid()) ++hist[c.x.index() * width + *c.k];
  }
  return hist;
}

std::vector<double> eta_xi_log_weights(std::span<const int> histogram, double lambda_x,
                                       const DiscreteCircle& circle, const WindingConfig& cfg) {
  const int l = circle.size();
  const int width = cfg.k_max + 1;
  struct Bin {
    int x, k, count;
  };
  std::vector<Bin> bins;
  for (int x = 0; x < l; ++x) {
    for (int k = 0; k < width; ++k) {
      if (const int c = histogram[x * width + k]; c > 0) bins.push_back({x, k, c});
    }
  }
  std::vector<double> out(2 * static_cast<std::size_t>(l), 0.0);
  for (int e = 0; e < 2; ++e) {
    const IwpParams probe{lambda_x, e == 0 ? -1 : 1, 0};
    for (int s = 0; s < l; ++s) {
      IwpParams p = probe;
      p.xi = s;
      double acc = 0.0;
      for (const Bin& b : bins) acc += b.count * iwp_augmented_logpmf(b.x, b.k, p, circle);
      out[e * l + s] = acc;
    }
  }
  return out;
}

std::pair<int, int> update_eta_xi(std::span<const int> histogram, double lambda_x,
                                  const DiscreteCircle& circle, const WindingConfig& cfg, Rng& rng) {
  const std::vector<double> logw = eta_xi_log_weights(histogram, lambda_x, circle, cfg);
  const int l = circle.size();
  const auto idx = static_cast<int>(sample_categorical_log(logw, rng));
  return {idx < l ? -1 : 1, idx % l};
}

std::vector<int> direction_counts(std::span<const LatentCell> cells, const DiscreteCircle& circle) {
  std::vector<int> counts(circle.size(), 0);
  for (const LatentCell& c : cells) {
    if (c.x.is_grid()) ++counts[c.x.index()];
  }
  return counts;
}

double collapsed_direction_loglik(std::span<const int> counts, const IwpParams& p,
                                  const DiscreteCircle& circle, const WindingConfig& cfg) {
  const std::vector<double> table = iwp_log_pmf_table(p, circle, cfg);
  double acc = 0.0;
  for (int x = 0; x < circle.size(); ++x) {
    if (counts[x] > 0) acc += counts[x] * table[x];
  }
  return acc;
}

double lambda_x_marginal_loglik(std::span<const int> counts, double lambda_x,
                                const DiscreteCircle& circle, const WindingConfig& cfg) {
  return log_sum_exp(eta_xi_collapsed_log_weights(counts, lambda_x, circle, cfg));
}

double update_lambda_x_collapsed(std::span<const int> counts, double lambda_x,
                                 const Priors& priors, const DiscreteCircle& circle,
                                 const WindingConfig& cfg, Rng& rng) {
  double cur = lambda_x;
  double cur_ll = lambda_x_marginal_loglik(counts, cur, circle, cfg);
  const auto log_prior = [&](double lam) { return (priors.a_x - 1.0) * std::log(lam) - priors.b_x * lam; };
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const double scale : {0.05, 0.3, 1.0}) {
    const double prop = cur * std::exp(scale * normal(rng));
    if (!(prop > 0.0) || prop >= priors.lambda_max) continue;
    const double prop_ll = lambda_x_marginal_loglik(counts, prop, circle, cfg);
    // log-scale walk: the Jacobian contributes prop/cur.
    const double log_ratio =
        prop_ll - cur_ll + log_prior(prop) - log_prior(cur) + std::log(prop / cur);
    if (std::log(uniform_open(rng)) < log_ratio) {
      cur = prop;
      cur_ll = prop_ll;
    }
  }
  const double prop = sample_truncated_gamma(priors.a_x, priors.b_x, priors.lambda_max, rng);
  const double prop_ll = lambda_x_marginal_loglik(counts, prop, circle, cfg);
  if (std::log(uniform_open(rng)) < prop_ll - cur_ll) cur = prop;
  return cur;
}

std::vector<double> eta_xi_collapsed_log_weights(std::span<const int> counts, double lambda_x,
                                                 const DiscreteCircle& circle,
                                                 const WindingConfig& cfg) {
  const int l = circle.size();
  // P(x | eta, xi) = base((eta x - xi) mod l) with base the pmf at (1, 0).
  const std::vector<double> base = iwp_log_pmf_table({lambda_x, 1, 0}, circle, cfg);
  std::vector<double> out(2 * static_cast<std::size_t>(l), 0.0);
  for (int e = 0; e < 2; ++e) {
    const int eta = e == 0 ? -1 : 1;
    for (int s = 0; s < l; ++s) {
      double acc = 0.0;
      for (int x = 0; x < l; ++x) {
        if (counts[x] > 0) acc += counts[x] * base[circle.wrap(static_cast<long>(eta) * x - s)];
      }
      out[e * l + s] = acc;
    }
  }
  return out;
}

std::pair<int, int> update_eta_xi_collapsed(std::span<const int> counts, double lambda_x,
                                            const DiscreteCircle& circle, const WindingConfig& cfg,
                                            Rng& rng) {
  const std::vector<double> logw = eta_xi_collapsed_log_weights(counts, lambda_x, circle, cfg);
  const int l = circle.size();
  const auto idx = static_cast<int>(sample_categorical_log(logw, rng));
  return {idx < l ? -1 : 1, idx % l};
}

double update_nu(long n_calm, long n_zero_with_direction, Rng& rng) {
  return sample_beta(1.0 + static_cast<double>(n_calm),
                     1.0 + static_cast<double>(n_zero_with_direction), rng);
}

SpeedDraw impute_y_w(const ObservationCell& cell, const RegimeParams& psi, Rng& rng) {
  const double lam = psi.lambda_y;
  const double nu = psi.nu;
  if (cell.y_star && *cell.y_star >= 2) return {*cell.y_star, 1};
  if (cell.x.is_calm()) return {0, 0};

  if (cell.y_star) {
    // Unreliable recording: y in {0, 1}.  With a recorded direction the
    // y = 0 branch also pays the hurdle factor (1 - nu).
    const double zero = cell.x.is_grid() ? 1.0 - nu : 1.0;
    if (!(lam + zero > 0.0)) throw DomainError("cell has zero probability under regime");
    return {sample_bernoulli(lam / (lam + zero), rng) ? 1 : 0, 0};
  }

  int y = 0;
  if (cell.x.is_missing()) {
    y = sample_poisson(lam, rng);
  } else {
    const double e = std::exp(-lam);
    const double total = 1.0 - nu * e;
    if (!(total > 0.0)) throw DomainError("cell has zero probability under regime");
    y = sample_bernoulli(e * (1.0 - nu) / total, rng) ? 0 : sample_zero_truncated_poisson(lam, rng);
  }
  return {y, y >= 2 ? 1 : 0};
}

DirectionDraw impute_x(int y, const RegimeParams& psi, const DiscreteCircle& circle,
                       const WindingConfig& cfg, Rng& rng) {
  if (y == 0 && sample_bernoulli(psi.nu, rng)) return {Direction::calm(), std::nullopt};
  const IwpDraw d = iwp_sample(psi.iwp, circle, cfg, rng);
  return {Direction::at(d.x), d.k};
}

RegimeParams sample_regime_prior(const Priors& priors, const DiscreteCircle& circle, Rng& rng) {
  RegimeParams psi;
  psi.lambda_y = sample_truncated_gamma(priors.a_y, priors.b_y, priors.c_y, rng);
  psi.iwp.lambda_x = sample_truncated_gamma(priors.a_x, priors.b_x, priors.lambda_max, rng);
  psi.iwp.eta = sample_bernoulli(0.5, rng) ? 1 : -1;
  std::uniform_int_distribution<int> grid(0, circle.size() - 1);
  psi.iwp.xi = grid(rng);
  psi.nu = uniform_open(rng);
  return psi;
}

Sampler::Sampler(std::vector<ObservationCell> data, ChainConfig config)
    : data_(std::move(data)),
      config_(config),
      circle_(config.circle_points),
      winding_(WindingConfig::from_lambda_max(config.priors.lambda_max, circle_)),
      rng_(config.seed) {
  config_.validate();
  for (const auto& cell : data_) validate(cell, circle_);
  initialize();
}

void Sampler::set_data(std::vector<ObservationCell> data) {
  if (data.size() != data_.size()) throw DomainError("replacement data changes the length");
  for (const auto& cell : data) validate(cell, circle_);
  data_ = std::move(data);
}

void Sampler::initialize() {
  const std::size_t T = data_.size();
  state_.cells.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const ObservationCell& o = data_[t];
    LatentCell& c = state_.cells[t];
    c.y = o.x.is_calm() ? 0 : o.y_star.value_or(0);
    c.w = c.y >= 2 ? 1 : 0;
    c.x = o.x.is_missing() ? Direction::at(0) : o.x;
    c.k = c.x.is_grid() ? std::optional<int>(0) : std::nullopt;
  }

  // Seed regimes by splitting the time points into speed quantiles.
  const auto S = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(config_.init_states), std::max<std::size_t>(T, 1)));
  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data_[a].y_star.value_or(0) < data_[b].y_star.value_or(0);
  });
  state_.z.assign(T, 0);
  for (std::size_t i = 0; i < T; ++i) state_.z[order[i]] = static_cast<int>(i * S / T);

  state_.hdp = sample_hdp_prior(static_cast<std::size_t>(S), 0.5, 10.0, 1.0, rng_);
  state_.psi.clear();
  for (int s = 0; s < S; ++s) state_.psi.push_back(sample_regime_prior(config_.priors, circle_, rng_));
  const std::vector<int> map = prune_states(state_.z, state_.hdp);
  std::vector<RegimeParams> kept(state_.hdp.size());
  for (std::size_t k = 0; k < map.size(); ++k) {
    if (map[k] >= 0) kept[map[k]] = state_.psi[k];
  }
  state_.psi = std::move(kept);

  for (int round = 0; round < 10; ++round) {
    impute_latents();
    update_regime_params();
  }
  update_transitions();
}

void Sampler::impute_latents() {
  std::vector<WindingTable> tables;
  tables.reserve(state_.psi.size());
  for (const RegimeParams& psi : state_.psi) tables.emplace_back(psi.iwp, circle_, winding_);
  for (std::size_t t = 0; t < data_.size(); ++t) {
    const ObservationCell& o = data_[t];
    const RegimeParams& psi = state_.psi[state_.z[t]];
    LatentCell& c = state_.cells[t];
    const SpeedDraw sd = impute_y_w(o, psi, rng_);
    c.y = sd.y;
    c.w = sd.w;
    if (o.x.is_missing()) {
      const DirectionDraw dd = impute_x(c.y, psi, circle_, winding_, rng_);
      c.x = dd.x;
      c.k = dd.k;
    } else {
      c.x = o.x;
      c.k = c.x.is_grid() ? std::optional<int>(tables[state_.z[t]].draw(c.x.index(), rng_))
                          : std::nullopt;
    }
  }
}

void Sampler::update_regime_params() {
  const std::size_t K = state_.psi.size();
  std::vector<std::vector<std::size_t>> members(K);
  for (std::size_t t = 0; t < state_.z.size(); ++t) members[state_.z[t]].push_back(t);

  std::vector<LatentCell> grid_cells;
  for (std::size_t r = 0; r < K; ++r) {
    RegimeParams& psi = state_.psi[r];
    long sum_y = 0, n_calm = 0, n_zero_grid = 0;
    grid_cells.clear();
    for (std::size_t t : members[r]) {
      const LatentCell& c = state_.cells[t];
      sum_y += c.y;
      if (c.x.is_calm()) {
        ++n_calm;
      } else {
        if (c.y == 0) ++n_zero_grid;
        grid_cells.push_back(c);
      }
    }
    psi.lambda_y = update_lambda_y(sum_y, static_cast<long>(members[r].size()), config_.priors, rng_);
    psi.nu = update_nu(n_calm, n_zero_grid, rng_);

    long sum_m = 0;
    for (const LatentCell& c : grid_cells) sum_m += unwrapped_index(c.x.index(), *c.k, psi.iwp, circle_);
    psi.iwp.lambda_x =
        update_lambda_x(sum_m, static_cast<long>(grid_cells.size()), config_.priors, rng_);

    const std::vector<int> hist = direction_histogram(grid_cells, circle_, winding_);
    const auto [eta, xi] = update_eta_xi(hist, psi.iwp.lambda_x, circle_, winding_, rng_);
    psi.iwp.eta = eta;
    psi.iwp.xi = xi;

    const std::vector<int> counts = direction_counts(grid_cells, circle_);
    psi.iwp.lambda_x = update_lambda_x_collapsed(counts, psi.iwp.lambda_x, config_.priors, circle_, winding_, rng_);
    const auto [eta2, xi2] = update_eta_xi_collapsed(counts, psi.iwp.lambda_x, circle_, winding_, rng_);
    psi.iwp.eta = eta2;
    psi.iwp.xi = xi2;

    const WindingTable table(psi.iwp, circle_, winding_);
    for (std::size_t t : members[r]) {
      LatentCell& c = state_.cells[t];
      if (c.x.is_grid()) c.k = table.draw(c.x.index(), rng_);
    }
  }
}

void Sampler::update_transitions() {
  HdpState& hdp = state_.hdp;
  TransitionCounts counts = count_transitions(state_.z, hdp.size());
  sample_auxiliary_counts(counts, hdp, rng_);
  StickWeights sw = resample_beta(counts, hdp.tau, rng_);
  hdp.beta = std::move(sw.beta);
  hdp.beta_rest = sw.rest;
  resample_hypers(counts, hdp, config_.priors.hyper, rng_);
  resample_pi(counts, hdp, rng_);
}

void Sampler::sweep() {
  HdpState& hdp = state_.hdp;
  const std::vector<double> u = beam_slice(state_.z, hdp, rng_);
  const double threshold = u.empty() ? 2.0 : *std::min_element(u.begin(), u.end());
  const std::size_t added = extend_representation(hdp, threshold, rng_);
  for (std::size_t i = 0; i < added; ++i) {
    state_.psi.push_back(sample_regime_prior(config_.priors, circle_, rng_));
  }

  const std::size_t K = hdp.size();
  const std::size_t T = data_.size();
  std::vector<double> loglik(T * K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::vector<double> log_iwp = iwp_log_pmf_table(state_.psi[k].iwp, circle_, winding_);
    for (std::size_t t = 0; t < T; ++t) {
      loglik[t * K + k] = observed_loglik(data_[t], state_.psi[k], log_iwp);
    }
  }
  state_.z = ffbs_states(loglik, K, hdp, u, rng_);

  const std::vector<int> map = prune_states(state_.z, hdp);
  std::vector<RegimeParams> kept(hdp.size());
  for (std::size_t k = 0; k < map.size(); ++k) {
    if (map[k] >= 0) kept[map[k]] = state_.psi[k];
  }
  state_.psi = std::move(kept);

  impute_latents();
  update_regime_params();
  update_transitions();
}

Draw Sampler::snapshot(long iteration) const {
  Draw d;
  d.iteration = iteration;
  d.rho = state_.hdp.rho;
  d.gamma = state_.hdp.gamma;
  d.tau = state_.hdp.tau;
  const std::size_t K = state_.psi.size();
  std::vector<long> occupancy(K, 0);
  for (int s : state_.z) ++occupancy[s];
  std::vector<std::size_t> occupied;
  for (std::size_t k = 0; k < K; ++k) {
    if (occupancy[k] > 0) {
      occupied.push_back(k);
      d.states.push_back({occupancy[k], state_.psi[k]});
    }
  }
  for (std::size_t i : occupied) {
    std::vector<double> row;
    row.reserve(occupied.size());
    for (std::size_t j : occupied) row.push_back(state_.hdp.pi[i][j]);
    d.pi.push_back(std::move(row));
  }
  return d;
}

void run_chain(std::vector<ObservationCell> data, const ChainConfig& config,
               const std::function<void(const Draw&)>& sink) {
  config.validate();
  Sampler sampler(std::move(data), config);
  for (long it = 1; it <= config.n_iter; ++it) {
    sampler.sweep();
    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) sink(sampler.snapshot(it));
  }
}

}  // namespace windhmm
