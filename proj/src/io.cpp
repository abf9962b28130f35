#include "windhmm/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "windhmm/errors.hpp"

namespace windhmm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T value{};
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string format_degrees(int index, const DiscreteCircle& circle) {
  const double deg = 360.0 * index / circle.size();
  if (deg == std::floor(deg)) return std::to_string(static_cast<long>(deg));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", deg);
  return buf;
}

std::string direction_text(const Direction& x, const DiscreteCircle& circle) {
  if (x.is_calm()) return "CALM";
  if (x.is_missing()) return "NA";
  return format_degrees(x.index(), circle);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::vector<ObservationCell> read_observations(std::istream& in, const DiscreteCircle& circle) {
  std::vector<ObservationCell> out;
  std::string line;
  long lineno = 0;
  bool header = false;
  const double step_deg = 360.0 / circle.size();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!header) {
      if (fields.size() != 3 || lower(fields[0]) != "timestamp" || lower(fields[1]) != "speed" ||
          lower(fields[2]) != "direction") {
        throw ParseError(lineno, "header must be timestamp,speed,direction");
      }
      header = true;
      continue;
    }
    if (fields.size() != 3) {
      throw ParseError(lineno, "expected 3 fields, found " + std::to_string(fields.size()));
    }
    ObservationCell cell;
    if (fields[1] != "NA") {
      const auto v = parse_number<int>(fields[1]);
      if (!v || *v < 0) throw ParseError(lineno, "speed '" + fields[1] + "' is not a nonnegative integer");
      cell.y_star = *v;
    }
    if (fields[2] == "CALM") {
      cell.x = Direction::calm();
    } else if (fields[2] != "NA") {
      const auto deg = parse_number<double>(fields[2]);
      if (!deg || !std::isfinite(*deg)) {
        throw ParseError(lineno, "direction '" + fields[2] + "' is not a number, CALM or NA");
      }
      const double q = *deg / step_deg;
      const double r = std::round(q);
      if (std::abs(q - r) > 1e-9) {
        throw GridError("line " + std::to_string(lineno) + ": direction " + fields[2] +
                        " is not on the " + std::to_string(circle.size()) + "-point grid");
      }
      cell.x = Direction::at(circle.wrap(static_cast<long>(r)));
    }
    try {
      validate(cell, circle);
    } catch (const DomainError& e) {
      throw ParseError(lineno, e.what());
    }
    out.push_back(cell);
  }
  if (!header) throw ParseError(lineno, "missing header row");
  return out;
}

std::vector<ObservationCell> ingest_csv(const fs::path& path, const DiscreteCircle& circle) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_observations(in, circle);
}

std::string timestamp_for(long t) {
  using namespace std::chrono;
  const sys_seconds start = sys_days{year{2010} / January / 1};
  const sys_seconds stamp = start + hours{3 * t};
  const auto day = floor<days>(stamp);
  const year_month_day ymd{day};
  const auto hh = duration_cast<hours>(stamp - day).count();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hh));
  return buf;
}

void write_observations(std::ostream& out, const std::vector<ObservationCell>& obs,
                        const DiscreteCircle& circle) {
  out << "timestamp,speed,direction\n";
  for (std::size_t t = 0; t < obs.size(); ++t) {
    out << timestamp_for(static_cast<long>(t)) << ','
        << (obs[t].y_star ? std::to_string(*obs[t].y_star) : "NA") << ','
        << direction_text(obs[t].x, circle) << '\n';
  }
}

void write_csv(const fs::path& path, const std::vector<ObservationCell>& obs,
               const DiscreteCircle& circle) {
  auto out = open_out(path);
  write_observations(out, obs, circle);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_truth(const fs::path& path, const SimResult& sim, const DiscreteCircle& circle) {
  auto out = open_out(path);
  out << "t,regime,y,w,direction,k\n";
  for (std::size_t t = 0; t < sim.truth.size(); ++t) {
    const LatentCell& c = sim.truth[t];
    out << t << ',' << sim.z[t] + 1 << ',' << c.y << ',' << c.w << ',' << direction_text(c.x, circle)
        << ',' << (c.k ? std::to_string(*c.k) : "NA") << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (kv.contains(key)) throw ParseError(lineno, "duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

KeyValues load_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_key_values(in);
}

void apply_config(const KeyValues& kv, ChainConfig& c) {
  for (const auto& [key, value] : kv) {
    const auto real = [&](double& target) {
      const auto v = parse_number<double>(value);
      if (!v) throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
      target = *v;
    };
    const auto integer = [&](auto& target) {
      const auto v = parse_number<long long>(value);
      if (!v) throw ConfigError("config key '" + key + "': '" + value + "' is not an integer");
      target = static_cast<std::remove_reference_t<decltype(target)>>(*v);
    };
    if (key == "n_iter") integer(c.n_iter);
    else if (key == "burn_in") integer(c.burn_in);
    else if (key == "thin") integer(c.thin);
    else if (key == "seed") {
      const auto v = parse_number<std::uint64_t>(value);
      if (!v) throw ConfigError("config key 'seed': '" + value + "' is not an unsigned integer");
      c.seed = *v;
    }
    else if (key == "circle_points") integer(c.circle_points);
    else if (key == "init_states") integer(c.init_states);
    else if (key == "a_y") real(c.priors.a_y);
    else if (key == "b_y") real(c.priors.b_y);
    else if (key == "c_y") real(c.priors.c_y);
    else if (key == "a_x") real(c.priors.a_x);
    else if (key == "b_x") real(c.priors.b_x);
    else if (key == "lambda_max") real(c.priors.lambda_max);
    else if (key == "gamma_shape") real(c.priors.hyper.gamma_shape);
    else if (key == "gamma_rate") real(c.priors.hyper.gamma_rate);
    else if (key == "tau_shape") real(c.priors.hyper.tau_shape);
    else if (key == "tau_rate") real(c.priors.hyper.tau_rate);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
}

nlohmann::json config_to_json(const ChainConfig& c) {
  return {
      {"n_iter", c.n_iter},
      {"burn_in", c.burn_in},
      {"thin", c.thin},
      {"seed", c.seed},
      {"circle_points", c.circle_points},
      {"init_states", c.init_states},
      {"a_y", c.priors.a_y},
      {"b_y", c.priors.b_y},
      {"c_y", c.priors.c_y},
      {"a_x", c.priors.a_x},
      {"b_x", c.priors.b_x},
      {"lambda_max", c.priors.lambda_max},
      {"gamma_shape", c.priors.hyper.gamma_shape},
      {"gamma_rate", c.priors.hyper.gamma_rate},
      {"tau_shape", c.priors.hyper.tau_shape},
      {"tau_rate", c.priors.hyper.tau_rate},
  };
}

ChainConfig config_from_json(const nlohmann::json& j) {
  ChainConfig c;
  c.n_iter = j.at("n_iter").get<long>();
  c.burn_in = j.at("burn_in").get<long>();
  c.thin = j.at("thin").get<long>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.circle_points = j.at("circle_points").get<int>();
  c.init_states = j.at("init_states").get<int>();
  c.priors.a_y = j.at("a_y").get<double>();
  c.priors.b_y = j.at("b_y").get<double>();
  c.priors.c_y = j.at("c_y").get<double>();
  c.priors.a_x = j.at("a_x").get<double>();
  c.priors.b_x = j.at("b_x").get<double>();
  c.priors.lambda_max = j.at("lambda_max").get<double>();
  c.priors.hyper.gamma_shape = j.at("gamma_shape").get<double>();
  c.priors.hyper.gamma_rate = j.at("gamma_rate").get<double>();
  c.priors.hyper.tau_shape = j.at("tau_shape").get<double>();
  c.priors.hyper.tau_rate = j.at("tau_rate").get<double>();
  return c;
}

std::string config_to_text(const ChainConfig& c) {
  std::ostringstream out;
  const nlohmann::json j = config_to_json(c);
  for (const auto& [key, value] : j.items()) out << key << " = " << value.dump() << '\n';
  return out.str();
}

nlohmann::json draw_to_json(const Draw& d) {
  nlohmann::json states = nlohmann::json::array();
  for (const StateDraw& s : d.states) {
    states.push_back({{"n", s.occupancy},
                      {"lambda_y", s.psi.lambda_y},
                      {"lambda_x", s.psi.iwp.lambda_x},
                      {"eta", s.psi.iwp.eta},
                      {"xi", s.psi.iwp.xi},
                      {"nu", s.psi.nu}});
  }
  return {{"iter", d.iteration}, {"rho", d.rho}, {"gamma", d.gamma},
          {"tau", d.tau},        {"states", states}, {"pi", d.pi}};
}

Draw draw_from_json(const nlohmann::json& j) {
  Draw d;
  d.iteration = j.at("iter").get<long>();
  d.rho = j.at("rho").get<double>();
  d.gamma = j.at("gamma").get<double>();
  d.tau = j.at("tau").get<double>();
  for (const auto& s : j.at("states")) {
    StateDraw sd;
    sd.occupancy = s.at("n").get<long>();
    sd.psi.lambda_y = s.at("lambda_y").get<double>();
    sd.psi.iwp.lambda_x = s.at("lambda_x").get<double>();
    sd.psi.iwp.eta = s.at("eta").get<int>();
    sd.psi.iwp.xi = s.at("xi").get<int>();
    sd.psi.nu = s.at("nu").get<double>();
    d.states.push_back(sd);
  }
  d.pi = j.at("pi").get<std::vector<std::vector<double>>>();
  if (d.pi.size() != d.states.size()) throw DomainError("transition block does not match state count");
  for (const auto& row : d.pi) {
    if (row.size() != d.states.size()) throw DomainError("transition block does not match state count");
  }
  return d;
}

DrawWriter::DrawWriter(fs::path path, const nlohmann::json& header)
    : path_(std::move(path)), partial_(path_.string() + ".partial") {
  out_ = std::make_unique<std::ofstream>(partial_);
  if (!*out_) throw std::runtime_error("cannot open " + partial_.string() + " for writing");
  *out_ << header.dump() << '\n';
}

DrawWriter::~DrawWriter() {
  if (!committed_) {
    out_.reset();
    std::error_code ec;
    fs::remove(partial_, ec);
  }
}

void DrawWriter::write(const Draw& d) {
  *out_ << draw_to_json(d).dump() << '\n';
  ++count_;
}

void DrawWriter::commit() {
  out_->flush();
  if (!*out_) throw std::runtime_error("write failed: " + partial_.string());
  out_->close();
  fs::rename(partial_, path_);
  committed_ = true;
}

nlohmann::json make_header(const ChainConfig& config, int chain, const std::string& source, long T) {
  return {{"format", "windhmm-draws"}, {"version", 1}, {"chain", chain},
          {"source", source},          {"T", T},       {"config", config_to_json(config)}};
}

DrawFile read_draw_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  DrawFile file;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (file.header.is_null()) {
        if (j.value("format", "") != "windhmm-draws") throw ParseError(lineno, "not a draw file header");
        file.header = std::move(j);
      } else {
        file.draws.push_back(draw_from_json(j));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, std::string(path.filename()) + ": " + e.what());
    } catch (const DomainError& e) {
      throw ParseError(lineno, std::string(path.filename()) + ": " + e.what());
    }
  }
  if (file.header.is_null()) throw ParseError(lineno, path.string() + " has no header");
  return file;
}

std::vector<DrawFile> read_draw_files(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .jsonl draw files in " + path.string());
  } else {
    files.push_back(path);
  }
  std::vector<DrawFile> out;
  for (const auto& f : files) out.push_back(read_draw_file(f));
  const int points = out.front().header.at("config").at("circle_points").get<int>();
  for (const auto& f : out) {
    if (f.header.at("config").at("circle_points").get<int>() != points) {
      throw ConfigError("draw files disagree on the circle size");
    }
  }
  return out;
}

}  // namespace windhmm
