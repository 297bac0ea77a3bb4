#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lrtc/experiments.hpp"
#include "lrtc/image_io.hpp"
#include "lrtc/solver.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lrtc;
using namespace lrtc::cli;

namespace {

constexpr ClipRange kPixelRange{0.0, 255.0};

struct Flags {
  std::string config;
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::vector<double> ratios;
  std::optional<std::size_t> repeats;
  std::string mask;
  std::string warm_start;
  std::optional<std::size_t> t_max;
  bool serial = false;
};

void configure_logging(const std::string& flag_level) {
  auto logger = spdlog::stderr_color_mt("lrtc");
  spdlog::set_default_logger(logger);
  std::string level = flag_level;
  if (level.empty()) {
    const char* env = std::getenv("LRTC_LOG_LEVEL");
    level = env ? env : "info";
  }
  spdlog::set_level(spdlog::level::from_str(level));
}

RunConfig load_config(const Flags& f, const std::string& command) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = parse_run_config(read_text_file(f.config), kPixelRange);
  cfg.command = command;
  if (!f.input.empty()) cfg.input = f.input;
  if (!f.output.empty()) cfg.output = f.output;
  if (f.seed) cfg.seed = *f.seed;
  if (f.ratio) cfg.ratios = {*f.ratio};
  if (!f.ratios.empty()) cfg.ratios = f.ratios;
  if (f.repeats) cfg.repeats = *f.repeats;
  if (!f.mask.empty()) cfg.mask = f.mask;
  if (!f.warm_start.empty()) cfg.warm_start = f.warm_start;
  if (f.t_max) cfg.t_max = *f.t_max;
  if (!cfg.input) throw std::invalid_argument("no input image (use --input or the config's \"input\")");
  if (!cfg.output) throw std::invalid_argument("no output directory (use --output or the config's \"output\")");
  return cfg;
}

void apply_overrides(RunConfig& cfg, bool serial) {
  for (NamedConfig& n : cfg.solvers) {
    if (cfg.t_max) n.cfg.t_max = *cfg.t_max;
    if (serial) n.cfg.execution = Execution::serial;
  }
}

/// Refuses to write over any file the run reads.
void guard_inputs(const RunConfig& cfg, const std::vector<fs::path>& outputs) {
  std::vector<fs::path> inputs;
  if (cfg.input) inputs.push_back(*cfg.input);
  if (cfg.mask) inputs.push_back(*cfg.mask);
  if (cfg.warm_start) inputs.push_back(*cfg.warm_start);
  for (const fs::path& out : outputs) {
    if (!fs::exists(out)) continue;
    for (const fs::path& in : inputs) {
      if (fs::exists(in) && fs::equivalent(in, out)) {
        throw std::invalid_argument("output '" + out.string() + "' would overwrite an input file");
      }
    }
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed to write '" + path.string() + "'");
}

void write_history_file(std::span<const IterationRecord> history, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "'");
  write_history(history, out);
}

std::string ratio_tag(double ratio) { return fmt::format("r{:.2f}", ratio); }

int run_complete(const Flags& f) {
  RunConfig cfg = load_config(f, "complete");
  if (cfg.solvers.empty()) cfg.solvers = {NamedConfig{"proposed", SolverConfig{}, std::nullopt}};
  for (NamedConfig& n : cfg.solvers) {
    if (!n.cfg.clip_range) n.cfg.clip_range = kPixelRange;
  }
  if (cfg.solvers.size() != 1) throw std::invalid_argument("complete takes exactly one solver config");
  if (cfg.solvers.front().warm_start_from) {
    throw std::invalid_argument("complete takes a warm-start image (--warm-start), not warm_start_from");
  }
  if (!cfg.mask && cfg.ratios.size() != 1) {
    throw std::invalid_argument("complete needs --mask or a single --ratio");
  }
  apply_overrides(cfg, f.serial);
  const SolverConfig& solver = cfg.solvers.front().cfg;

  const fs::path out_dir = *cfg.output;
  const std::vector<fs::path> outputs{out_dir / "reconstruction.png", out_dir / "observed.png",
                                      out_dir / "history.csv", out_dir / "manifest.json"};
  guard_inputs(cfg, outputs);

  const DenseTensor truth = load_image(*cfg.input);
  std::optional<std::uint64_t> seed_used;
  ObservationMask mask;
  if (cfg.mask) {
    mask = load_mask_image(*cfg.mask, truth.shape());
  } else {
    seed_used = mask_seed(cfg.seed, cfg.ratios.front(), 0);
    mask = generate_mask(truth.shape(), cfg.ratios.front(), *seed_used);
  }
  const DenseTensor observed = apply_mask(truth, mask);
  std::optional<DenseTensor> warm;
  if (cfg.warm_start) {
    warm = load_image(*cfg.warm_start);
    if (warm->shape() != truth.shape()) throw std::invalid_argument("warm-start image size differs from input");
  }

  const SolveResult result = solve(observed, mask, solver, warm ? &*warm : nullptr, &truth);
  const double err = nmse(result.x, truth);

  fs::create_directories(out_dir);
  save_image(result.x, outputs[0]);
  save_image(observed, outputs[1]);
  write_history_file(result.history, outputs[2]);
  json extra{{"lambda", result.lambda},
             {"rho0", result.rho0},
             {"iterations", result.iterations()},
             {"status", std::string(to_string(result.status))},
             {"nmse", err},
             {"observed_ratio", mask.ratio()}};
  if (seed_used) extra["mask_seed"] = *seed_used;
  write_json(make_manifest(cfg, extra), outputs[3]);

  std::cout << fmt::format("complete: nmse={:.6g} iterations={} status={} lambda={:.6g}\n", err,
                           result.iterations(), to_string(result.status), result.lambda);
  return 0;
}

int run_sweep_command(const Flags& f) {
  RunConfig cfg = load_config(f, "sweep");
  if (cfg.ratios.empty()) cfg.ratios = {0.2, 0.3, 0.4, 0.5, 0.6};
  if (cfg.solvers.empty()) cfg.solvers = default_sweep_solvers(kPixelRange);
  if (cfg.mask || cfg.warm_start) throw std::invalid_argument("sweep draws its own masks and warm starts");
  apply_overrides(cfg, f.serial);

  const fs::path out_dir = *cfg.output;
  guard_inputs(cfg, {out_dir / "summary.csv", out_dir / "cells.csv", out_dir / "manifest.json"});

  ExperimentSpec spec;
  spec.instance = ImageInstance{cfg.input->string()};
  spec.ratios = cfg.ratios;
  spec.seed = cfg.seed;
  spec.repeats = cfg.repeats;
  spec.configs = cfg.solvers;
  spec.execution = f.serial ? Execution::serial : Execution::parallel;
  spec.keep_reconstructions = true;
  const SweepResult result = run_sweep(spec);

  fs::create_directories(out_dir / "history");
  fs::create_directories(out_dir / "images");
  {
    std::ofstream out(out_dir / "summary.csv");
    write_summary(result, out);
    if (!out) throw std::runtime_error("failed to write summary.csv");
  }
  {
    std::ofstream out(out_dir / "cells.csv");
    out << "cfg,ratio,repeat,mask_seed,nmse,iters,status,lambda,wall_seconds\n";
    for (const SweepCell& c : result.cells) {
      out << fmt::format("{},{},{},{},{},{},{},{},{:.6f}\n", c.cfg, c.ratio, c.repeat, c.mask_seed,
                         c.nmse, c.iterations, to_string(c.status), c.lambda, c.wall_seconds);
    }
    if (!out) throw std::runtime_error("failed to write cells.csv");
  }
  const DenseTensor truth = load_image(*cfg.input);
  for (const SweepCell& c : result.cells) {
    const std::string stem = fmt::format("{}_{}_rep{}", c.cfg, ratio_tag(c.ratio), c.repeat);
    write_history_file(c.history, out_dir / "history" / (stem + ".csv"));
    if (c.repeat == 0 && c.reconstruction) {
      save_image(*c.reconstruction, out_dir / "images" / fmt::format("{}_{}.png", c.cfg, ratio_tag(c.ratio)));
    }
  }
  for (double ratio : cfg.ratios) {
    const ObservationMask mask = generate_mask(truth.shape(), ratio, mask_seed(cfg.seed, ratio, 0));
    save_image(apply_mask(truth, mask), out_dir / "images" / fmt::format("observed_{}.png", ratio_tag(ratio)));
  }
  write_json(make_manifest(cfg, json::object()), out_dir / "manifest.json");

  std::cout << fmt::format("{:<16} {:>6} {:>12} {:>8}  {}\n", "cfg", "ratio", "nmse", "iters", "status");
  for (const SummaryRow& row : result.summary()) {
    std::cout << fmt::format("{:<16} {:>6.2f} {:>12.6g} {:>8.1f}  {}\n", row.cfg, row.ratio, row.nmse, row.iters,
                             to_string(row.status));
  }
  return 0;
}

int run_synth_test(std::uint64_t seed, std::size_t t_max, bool serial) {
  ExperimentSpec spec;
  spec.instance = SyntheticInstance{{20, 20, 5}, {2, 2, 2}, 0.0};
  spec.ratios = {0.6};
  spec.seed = seed;
  spec.repeats = 3;
  SolverConfig solver;
  solver.t_max = t_max;
  if (serial) solver.execution = Execution::serial;
  spec.configs = {NamedConfig{"proposed", solver, std::nullopt}};
  spec.execution = serial ? Execution::serial : Execution::parallel;
  const SweepResult result = run_sweep(spec);

  for (const SweepCell& c : result.cells) {
    std::cout << fmt::format("repeat {}: nmse={:.3e} iterations={} status={}\n", c.repeat, c.nmse, c.iterations,
                             to_string(c.status));
  }
  const SummaryRow row = result.row("proposed", 0.6);
  const bool pass = row.nmse < 1e-2 && row.status == SolveStatus::converged;
  std::cout << fmt::format("{} synth-test: median nmse={:.3e} (< 1e-2), all converged within {}: {}\n",
                           pass ? "PASS" : "FAIL", row.nmse, t_max,
                           row.status == SolveStatus::converged ? "yes" : "no");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank tensor completion with an adaptive over-relaxed ADMM solver"};
  app.name("lrtc");
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off (default: $LRTC_LOG_LEVEL or info)");

  Flags f;
  auto add_common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    sub->add_option("--input", f.input, "Input PNG image");
    sub->add_option("--output", f.output, "Output directory");
    sub->add_option("--seed", f.seed, "Base seed for masks");
    sub->add_option("--t-max", f.t_max, "Iteration cap for every solver");
    sub->add_flag("--serial", f.serial, "Run every kernel on one thread");
  };

  CLI::App* complete = app.add_subcommand("complete", "Complete one image from a mask or a random sampling ratio");
  add_common(complete);
  complete->add_option("--ratio", f.ratio, "Fraction of entries observed")->check(CLI::Range(0.0, 1.0));
  complete->add_option("--mask", f.mask, "Mask PNG; nonzero entries are observed")->check(CLI::ExistingFile);
  complete->add_option("--warm-start", f.warm_start, "PNG used as the initial estimate")->check(CLI::ExistingFile);

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep sampling ratios over several solver configs");
  add_common(sweep);
  sweep->add_option("--ratios", f.ratios, "Sampling ratios (default 0.2 0.3 0.4 0.5 0.6)");
  sweep->add_option("--repeats", f.repeats, "Masks per ratio (default 3)");

  CLI::App* synth = app.add_subcommand("synth-test", "Recover a random 20x20x5 rank-2 tensor from 60% of entries");
  std::uint64_t synth_seed = 0;
  std::size_t synth_t_max = 2000;
  bool synth_serial = false;
  synth->add_option("--seed", synth_seed, "Base seed");
  synth->add_option("--t-max", synth_t_max, "Iteration cap");
  synth->add_flag("--serial", synth_serial, "Run every kernel on one thread");

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    configure_logging(log_level);
    if (complete->parsed()) return run_complete(f);
    if (sweep->parsed()) return run_sweep_command(f);
    return run_synth_test(synth_seed, synth_t_max, synth_serial);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
