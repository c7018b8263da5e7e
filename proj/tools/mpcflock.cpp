// Command-line front end: run scenarios, render snapshots, validate configs.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mpcflock.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInvalidConfig = 2, kSolverFailure = 3, kIoFailure = 4 };

std::vector<int> parse_times(const std::string &csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int t = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad step '" + item + "'");
    out.push_back(t);
  }
  return out;
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mpcflock::IoError("cannot open '" + path + "' for writing");
  out << text;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Distributed MPC flock navigation simulator"};
  app.require_subcommand(1);

  std::string scenario_path, trace_path, metrics_path, ablation = "none", times_csv, out_path;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;

  auto *run = app.add_subcommand("run", "simulate a scenario");
  run->add_option("--scenario", scenario_path, "scenario file")->required();
  run->add_option("--steps", steps, "number of steps (overrides run.steps)");
  run->add_option("--seed", seed, "jitter seed (overrides run.seed)");
  run->add_option("--ablate", ablation, "rule ablation")
      ->check(CLI::IsMember({"none", "static-q", "cs-align", "flat-hierarchy", "horizon-1"}));
  run->add_option("--trace", trace_path, "trace output file");
  run->add_option("--metrics", metrics_path, "metrics output file");

  auto *render = app.add_subcommand("render", "draw trace snapshots as SVG");
  render->add_option("--trace", trace_path, "trace file")->required();
  render->add_option("--scenario", scenario_path, "scenario file")->required();
  render->add_option("--times", times_csv, "comma-separated trace steps")->required();
  render->add_option("--out", out_path, "SVG output file")->required();

  auto *validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--scenario", scenario_path, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  using namespace mpcflock;
  try {
    auto cfg = parse_scenario(scenario_path);

    if (*validate) {
      std::cout << "ok: " << cfg.name << " (" << cfg.agents.size() << " agents, digest " << config_digest(cfg) << ")\n";
      return kOk;
    }

    if (*run) {
      if (steps) cfg.steps = *steps;
      if (seed) cfg.seed = *seed;
      if (ablation != "none") cfg = apply_ablation(cfg, ablation);
      cfg.validate();
      const auto result = mpcflock::run(cfg);
      if (!trace_path.empty()) write_trace(trace_path, result.trace, {cfg.name, config_digest(cfg)});
      const auto m = metrics_to_json(result.metrics);
      if (!metrics_path.empty()) write_text(metrics_path, m.dump(2) + "\n");
      std::cout << "steps=" << cfg.steps << " ablation=" << to_string(cfg.ablation)
                << " arrived=" << (result.metrics.arrived ? "true" : "false")
                << " min_pairwise=" << m["min_pairwise_distance"].dump()
                << " inside_obstacles=" << result.metrics.inside_obstacles
                << " converged_solves=" << result.metrics.converged_solves << "/" << result.metrics.solves << "\n";
      return kOk;
    }

    if (*render) {
      TraceHeader header;
      const auto trace = read_trace(trace_path, &header);
      if (header.config_digest != config_digest(cfg))
        std::cerr << "warning: trace digest " << header.config_digest << " does not match the scenario\n";
      render_snapshots(out_path, trace, cfg, parse_times(times_csv));
      return kOk;
    }
  } catch (const ConfigError &e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const SolverError &e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const IoError &e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
