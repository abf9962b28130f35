#pragma once

// Synthetic datasets from the hurdle IWP-Poisson HMM, including the four
// built-in three-regime examples.

#include <cstdint>
#include <vector>

#include "windhmm/circular.hpp"
#include "windhmm/emission.hpp"

namespace windhmm {

/// How speeds below 2 knots are written to the record.  The model only uses
/// the event y* < 2, so the rule does not affect inference.
enum class CensorRule {
  identity,  // y* = y
  zero,      // y* = 0
  uniform,   // y* uniform on {0, 1}
};

struct SimSpec {
  std::vector<RegimeParams> psi;
  std::vector<std::vector<double>> transition;
  /// Regime of the origin z_0; z_1 is drawn from its row.
  int initial = 0;
  long T = 3000;
  int circle_points = 36;
  double lambda_max = 500.0;
  std::uint64_t seed = 1;
  /// Independent probability of losing the speed / direction of a record.
  double speed_dropout = 0.0;
  double direction_dropout = 0.0;
  CensorRule censor = CensorRule::identity;

  int regimes() const { return static_cast<int>(psi.size()); }
  /// Throws ConfigError.
  void validate() const;
};

/// Built-in examples 1..4 (three regimes, T = 3000, diagonal 0.8).  Throws
/// ConfigError for any other id.
SimSpec builtin_example(int id);

struct SimResult {
  std::vector<ObservationCell> observations;
  std::vector<LatentCell> truth;
  std::vector<int> z;
};

int apply_recording_censor(int y, CensorRule rule, Rng& rng);

SimResult simulate_dataset(const SimSpec& spec, Rng& rng);
/// Same, seeded from spec.seed.
SimResult simulate_dataset(const SimSpec& spec);

}  // namespace windhmm
