#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "windhmm/errors.hpp"
#include "windhmm/io.hpp"
#include "windhmm/simulate.hpp"
#include "windhmm/summary.hpp"

using namespace windhmm;

namespace {

std::mutex log_mutex;

void note(const std::string& msg) {
  std::lock_guard lock(log_mutex);
  std::cerr << msg << '\n';
}

struct SimulateArgs {
  int example = 1;
  std::uint64_t seed = 1;
  std::string output;
  std::string truth;
  long length = -1;
  double speed_dropout = 0.0;
  double direction_dropout = 0.0;
  std::string censor = "identity";
};

struct FitArgs {
  std::string data;
  std::string config_file;
  std::string out_dir;
  long iters = 0, burnin = 0, thin = 0;
  std::uint64_t seed = 0;
  int chains = 1;
  int init_states = 0;
  bool quiet = false;
};

struct ReadArgs {
  std::string draws;
  std::string output;
  int y_max = 50;
};

int run_simulate(const SimulateArgs& a) {
  SimSpec spec = builtin_example(a.example);
  spec.seed = a.seed;
  if (a.length >= 0) spec.T = a.length;
  spec.speed_dropout = a.speed_dropout;
  spec.direction_dropout = a.direction_dropout;
  if (a.censor == "zero") spec.censor = CensorRule::zero;
  else if (a.censor == "uniform") spec.censor = CensorRule::uniform;
  const SimResult sim = simulate_dataset(spec);
  const DiscreteCircle circle(spec.circle_points);
  write_csv(a.output, sim.observations, circle);
  fs::path truth = a.truth;
  if (truth.empty()) {
    truth = fs::path(a.output);
    truth.replace_extension(".truth.csv");
  }
  write_truth(truth, sim, circle);
  return 0;
}

void fit_chain(const std::vector<ObservationCell>& data, ChainConfig config, int chain,
               const fs::path& out_dir, const std::string& source, bool quiet) {
  const fs::path path = out_dir / ("chain-" + std::to_string(chain) + ".jsonl");
  DrawWriter writer(path, make_header(config, chain, source, static_cast<long>(data.size())));
  Sampler sampler(data, config);
  const long step = std::max(1L, config.n_iter / 10);
  for (long it = 1; it <= config.n_iter; ++it) {
    sampler.sweep();
    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) writer.write(sampler.snapshot(it));
    if (!quiet && it % step == 0) {
      note("chain " + std::to_string(chain) + ": " + std::to_string(it) + "/" +
           std::to_string(config.n_iter) + " sweeps, " + std::to_string(sampler.state().psi.size()) +
           " states");
    }
  }
  writer.commit();
  if (!quiet) note("chain " + std::to_string(chain) + ": wrote " + std::to_string(writer.count()) +
                   " draws to " + path.string());
}

int run_fit(const FitArgs& a, const CLI::App& cmd) {
  ChainConfig config;
  if (!a.config_file.empty()) apply_config(load_key_values(a.config_file), config);
  if (cmd.count("--iters")) config.n_iter = a.iters;
  if (cmd.count("--burnin")) config.burn_in = a.burnin;
  if (cmd.count("--thin")) config.thin = a.thin;
  if (cmd.count("--seed")) config.seed = a.seed;
  if (cmd.count("--init-states")) config.init_states = a.init_states;
  config.validate();
  if (a.chains < 1) throw ConfigError("--chains must be at least 1");

  fs::path out_dir = a.out_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    out_dir = env && *env ? env : "draws";
  }
  fs::create_directories(out_dir);

  const DiscreteCircle circle(config.circle_points);
  const std::vector<ObservationCell> data = ingest_csv(a.data, circle);

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(a.chains);
  for (int c = 0; c < a.chains; ++c) {
    ChainConfig cc = config;
    cc.seed = config.seed + static_cast<std::uint64_t>(c);
    workers.emplace_back([&, cc, c] {
      try {
        fit_chain(data, cc, c + 1, out_dir, a.data, a.quiet);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return 0;
}

std::vector<Draw> load_draws(const std::string& path, int& circle_points, double& lambda_max) {
  std::vector<Draw> draws;
  const auto files = read_draw_files(path);
  circle_points = files.front().header.at("config").at("circle_points").get<int>();
  lambda_max = files.front().header.at("config").at("lambda_max").get<double>();
  for (const auto& f : files) draws.insert(draws.end(), f.draws.begin(), f.draws.end());
  return draws;
}

int run_summarize(const ReadArgs& a) {
  int points = 36;
  double lambda_max = 500.0;
  const std::vector<Draw> draws = load_draws(a.draws, points, lambda_max);
  if (draws.size() < 100) note("warning: only " + std::to_string(draws.size()) + " draws");
  const DiscreteCircle circle(points);
  const std::string text = to_json(summarize(draws, circle), circle).dump(2) + "\n";
  if (a.output.empty() || a.output == "-") {
    std::cout << text;
  } else {
    const fs::path partial = a.output + ".partial";
    {
      std::ofstream out(partial);
      out << text;
      if (!out) throw std::runtime_error("write failed: " + partial.string());
    }
    fs::rename(partial, a.output);
  }
  return 0;
}

int run_predict(const ReadArgs& a) {
  int points = 36;
  double lambda_max = 500.0;
  const std::vector<Draw> draws = load_draws(a.draws, points, lambda_max);
  const DiscreteCircle circle(points);
  const WindingConfig cfg = WindingConfig::from_lambda_max(lambda_max, circle);
  const auto densities = predictive_density(draws, circle, cfg, a.y_max);
  const fs::path dir = a.output.empty() ? fs::path(".") : fs::path(a.output);
  fs::create_directories(dir);
  for (std::size_t r = 0; r < densities.size(); ++r) {
    const RegimeDensity& d = densities[r];
    const std::string tag = std::to_string(r + 1);
    std::ofstream dir_out(dir / ("direction_r" + tag + ".txt"));
    dir_out.precision(10);
    dir_out << "# regime " << tag << " direction pmf (degrees, probability)\n# calm " << d.calm << '\n';
    for (int j = 0; j < circle.size(); ++j) dir_out << 360.0 * j / circle.size() << ' ' << d.direction[j] << '\n';
    std::ofstream speed_out(dir / ("speed_r" + tag + ".txt"));
    speed_out.precision(10);
    speed_out << "# regime " << tag << " speed pmf (knots, probability)\n# tail above " << a.y_max << ' '
              << d.speed_tail << '\n';
    for (int v = 0; v <= a.y_max; ++v) speed_out << v << ' ' << d.speed[v] << '\n';
    if (!dir_out || !speed_out) throw std::runtime_error("write failed in " + dir.string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hidden Markov regimes for discrete wind speed and direction"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a built-in example dataset");
  simulate->add_option("--example", sim.example, "example id (1-4)")->required()->check(CLI::Range(1, 4));
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("-o,--output", sim.output, "output CSV")->required();
  simulate->add_option("--truth", sim.truth, "latent truth CSV (default <output>.truth.csv)");
  simulate->add_option("--length", sim.length, "number of records (default 3000)");
  simulate->add_option("--speed-dropout", sim.speed_dropout, "probability a speed is lost")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--direction-dropout", sim.direction_dropout, "probability a direction is lost")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--censor", sim.censor, "recording of speeds below 2 knots")
      ->check(CLI::IsMember({"identity", "zero", "uniform"}));

  FitArgs fit;
  auto* fitcmd = app.add_subcommand("fit", "run the sampler and write draw files");
  fitcmd->add_option("data", fit.data, "input CSV")->required()->check(CLI::ExistingFile);
  fitcmd->add_option("--iters", fit.iters, "sweeps (default 100000)");
  fitcmd->add_option("--burnin", fit.burnin, "burn-in sweeps (default 50000)");
  fitcmd->add_option("--thin", fit.thin, "keep every n-th sweep (default 10)");
  fitcmd->add_option("--seed", fit.seed, "seed of the first chain");
  fitcmd->add_option("--chains", fit.chains, "independent chains, run in parallel");
  fitcmd->add_option("--init-states", fit.init_states, "initial number of regimes");
  fitcmd->add_option("--config", fit.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  fitcmd->add_option("--out", fit.out_dir, std::string("draw directory (default $") + kOutputDirEnv + " or ./draws)");
  fitcmd->add_flag("-q,--quiet", fit.quiet, "no progress output");

  ReadArgs summ;
  auto* summarize_cmd = app.add_subcommand("summarize", "posterior summary as JSON");
  summarize_cmd->add_option("draws", summ.draws, "draw file or directory")->required()->check(CLI::ExistingPath);
  summarize_cmd->add_option("-o,--output", summ.output, "output JSON (default stdout)");

  ReadArgs pred;
  auto* predict = app.add_subcommand("predict", "per-regime predictive density tables");
  predict->add_option("draws", pred.draws, "draw file or directory")->required()->check(CLI::ExistingPath);
  predict->add_option("-o,--output", pred.output, "output directory (default .)");
  predict->add_option("--y-max", pred.y_max, "largest speed tabulated");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(sim);
    if (*fitcmd) return run_fit(fit, *fitcmd);
    if (*summarize_cmd) return run_summarize(summ);
    if (*predict) return run_predict(pred);
  } catch (const std::exception& e) {
    std::cerr << "windhmm: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
