#pragma once

// CSV ingestion/export, flat key=value configuration and line-delimited
// JSON draw files.

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "windhmm/gibbs.hpp"
#include "windhmm/simulate.hpp"

namespace windhmm {

namespace fs = std::filesystem;

/// Environment variable naming the default output directory of `fit`.
inline constexpr const char* kOutputDirEnv = "WINDHMM_OUTPUT_DIR";

// --- observations -------------------------------------------------------

/// Reads "timestamp,speed,direction" rows.  Speed is integer knots or NA;
/// direction is integer degrees on the grid, CALM or NA.  Throws ParseError
/// (with the line number) and GridError.
std::vector<ObservationCell> read_observations(std::istream& in, const DiscreteCircle& circle);
std::vector<ObservationCell> ingest_csv(const fs::path& path, const DiscreteCircle& circle);

/// ISO-8601 stamp of the t-th record of a 3-hourly series starting
/// 2010-01-01T00:00.
std::string timestamp_for(long t);

void write_observations(std::ostream& out, const std::vector<ObservationCell>& obs,
                        const DiscreteCircle& circle);
void write_csv(const fs::path& path, const std::vector<ObservationCell>& obs,
               const DiscreteCircle& circle);

/// Sidecar with the latent truth: t,regime,y,w,direction,k.
void write_truth(const fs::path& path, const SimResult& sim, const DiscreteCircle& circle);

// --- configuration ------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment.  Throws ParseError.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const fs::path& path);

/// Applies recognized keys to the chain configuration.  Unknown keys and
/// malformed values throw ConfigError.
void apply_config(const KeyValues& kv, ChainConfig& config);
std::string config_to_text(const ChainConfig& config);

nlohmann::json config_to_json(const ChainConfig& config);
ChainConfig config_from_json(const nlohmann::json& j);

// --- draw files ---------------------------------------------------------

nlohmann::json draw_to_json(const Draw& d);
Draw draw_from_json(const nlohmann::json& j);

/// Streams draws to `<path>.partial` and renames onto `path` on commit().
/// An uncommitted writer removes its partial file.
class DrawWriter {
 public:
  DrawWriter(fs::path path, const nlohmann::json& header);
  ~DrawWriter();
  DrawWriter(const DrawWriter&) = delete;
  DrawWriter& operator=(const DrawWriter&) = delete;

  void write(const Draw& d);
  void commit();
  long count() const noexcept { return count_; }

 private:
  fs::path path_;
  fs::path partial_;
  std::unique_ptr<std::ofstream> out_;
  long count_ = 0;
  bool committed_ = false;
};

nlohmann::json make_header(const ChainConfig& config, int chain, const std::string& source, long T);

struct DrawFile {
  nlohmann::json header;
  std::vector<Draw> draws;
};

DrawFile read_draw_file(const fs::path& path);

/// Reads a single draw file or every *.jsonl file of a directory (sorted by
/// name).  All files must share the circle size.
std::vector<DrawFile> read_draw_files(const fs::path& path);

}  // namespace windhmm
