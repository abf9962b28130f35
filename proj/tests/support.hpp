#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace testing {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

/// Standard error of the mean of an autocorrelated series by batch means.
inline MeanSe batch_means(std::span<const double> v, std::size_t batches = 50) {
  const std::size_t len = v.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto first = v.begin() + static_cast<std::ptrdiff_t>(b * len);
    means.push_back(std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) /
                    static_cast<double>(len));
  }
  return mean_se(means);
}

/// Pearson goodness-of-fit p-value.  Cells with expected count below 5 are
/// pooled into one.
inline double chi_square_p(std::span<const long> observed, std::span<const double> probs) {
  double n = 0.0;
  for (long o : observed) n += static_cast<double>(o);
  double stat = 0.0, pooled_o = 0.0, pooled_e = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * probs[i];
    if (e < 5.0) {
      pooled_o += static_cast<double>(observed[i]);
      pooled_e += e;
      continue;
    }
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / std::max(pooled_e, 1e-300);
    ++cells;
  }
  if (cells < 2) return 1.0;
  const boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("windhmm-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
