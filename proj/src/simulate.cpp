#include "windhmm/simulate.hpp"

#include <cmath>
#include <string>

#include "windhmm/errors.hpp"

namespace windhmm {

void SimSpec::validate() const {
  const auto R = psi.size();
  if (R == 0) throw ConfigError("simulation needs at least one regime");
  if (transition.size() != R) throw ConfigError("transition matrix must be R x R");
  for (const auto& row : transition) {
    if (row.size() != R) throw ConfigError("transition matrix must be R x R");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw ConfigError("negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("transition row does not sum to 1");
  }
  if (initial < 0 || initial >= static_cast<int>(R)) throw ConfigError("initial regime out of range");
  if (T < 0) throw ConfigError("T must be nonnegative");
  const DiscreteCircle circle(circle_points);
  for (const auto& p : psi) {
    if (!(p.lambda_y >= 0.0)) throw ConfigError("lambda_y must be nonnegative");
    if (!(p.nu >= 0.0 && p.nu <= 1.0)) throw ConfigError("nu must lie in [0, 1]");
    if (p.iwp.lambda_x > lambda_max) throw ConfigError("lambda_x exceeds lambda_max");
    windhmm::validate(p.iwp, circle);
  }
  for (double d : {speed_dropout, direction_dropout}) {
    if (!(d >= 0.0 && d <= 1.0)) throw ConfigError("dropout rate must lie in [0, 1]");
  }
}

SimSpec builtin_example(int id) {
  struct Row {
    double lambda_y, lambda_x;
    int eta, xi;
    double nu;
  };
  std::vector<Row> rows;
  switch (id) {
    case 1: rows = {{1, 5, -1, 5, 0.1}, {10, 1, 1, 15, 0}, {30, 5, 1, 0, 0}}; break;
    case 2: rows = {{1, 5, -1, 10, 0.1}, {5, 1, 1, 15, 0}, {10, 5, 1, 10, 0}}; break;
    case 3: rows = {{1, 300, -1, 5, 0.1}, {10, 1, 1, 15, 0}, {30, 5, 1, 0, 0}}; break;
    case 4: rows = {{1, 300, -1, 10, 0.1}, {5, 1, 1, 15, 0}, {10, 5, 1, 10, 0}}; break;
    default: throw ConfigError("unknown example id " + std::to_string(id) + " (expected 1..4)");
  }
  SimSpec spec;
  for (const Row& r : rows) spec.psi.push_back({r.lambda_y, {r.lambda_x, r.eta, r.xi}, r.nu});
  spec.transition = {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
  return spec;
}

int apply_recording_censor(int y, CensorRule rule, Rng& rng) {
  if (y >= 2) return y;
  switch (rule) {
    case CensorRule::zero: return 0;
    case CensorRule::uniform: return sample_bernoulli(0.5, rng) ? 1 : 0;
    case CensorRule::identity: break;
  }
  return y;
}

SimResult simulate_dataset(const SimSpec& spec, Rng& rng) {
  spec.validate();
  const DiscreteCircle circle(spec.circle_points);
  const WindingConfig cfg = WindingConfig::from_lambda_max(spec.lambda_max, circle);
  SimResult out;
  out.observations.reserve(spec.T);
  out.truth.reserve(spec.T);
  out.z.reserve(spec.T);
  int state = spec.initial;
  for (long t = 0; t < spec.T; ++t) {
    state = static_cast<int>(sample_categorical(spec.transition[state], rng));
    const LatentCell cell = sample_observation(spec.psi[state], circle, cfg, rng);
    ObservationCell obs;
    obs.y_star = apply_recording_censor(cell.y, spec.censor, rng);
    obs.x = cell.x;
    if (spec.speed_dropout > 0.0 && sample_bernoulli(spec.speed_dropout, rng)) obs.y_star.reset();
    if (spec.direction_dropout > 0.0 && sample_bernoulli(spec.direction_dropout, rng)) {
      obs.x = Direction::missing();
    }
    out.z.push_back(state);
    out.truth.push_back(cell);
    out.observations.push_back(obs);
  }
  return out;
}

SimResult simulate_dataset(const SimSpec& spec) {
  Rng rng(spec.seed);
  return simulate_dataset(spec, rng);
}

}  // namespace windhmm
