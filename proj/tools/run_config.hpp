#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrtc/experiments.hpp"
#include "lrtc/solver.hpp"

namespace lrtc::cli {

/// Everything one CLI invocation needs. Loaded from a JSON config file,
/// then overridden by command-line flags.
struct RunConfig {
  std::string command;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
  std::uint64_t seed = 0;
  std::vector<double> ratios;
  std::size_t repeats = 3;
  std::optional<std::filesystem::path> mask;
  std::optional<std::filesystem::path> warm_start;
  std::optional<std::size_t> t_max;
  std::vector<NamedConfig> solvers;
  /// Config file contents, echoed verbatim into the manifest.
  std::string config_text;
};

/// Solver entry from JSON. Unknown keys are rejected. "preset" selects the
/// starting point ("proposed" or "fixed-penalty") before other keys apply;
/// a missing "clip" key gets `default_clip`.
NamedConfig parse_solver(const nlohmann::json& j, const std::optional<ClipRange>& default_clip);
nlohmann::json solver_to_json(const NamedConfig& named);

/// Top-level keys: command, input, output, seed, ratio, ratios, repeats,
/// mask, warm_start, t_max, solver, solvers. A "manifest" key is ignored so
/// a written manifest can be fed back in as a config.
RunConfig parse_run_config(const std::string& text, const std::optional<ClipRange>& default_clip);

/// Defaults for image sweeps: the proposed solver, the fixed-penalty
/// baseline, and the proposed solver warm-started from the baseline.
std::vector<NamedConfig> default_sweep_solvers(const std::optional<ClipRange>& clip);

/// Effective configuration plus provenance; parse_run_config() accepts it.
nlohmann::json make_manifest(const RunConfig& cfg, const nlohmann::json& extra);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace lrtc::cli
