#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

namespace lrtc::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
    }
  }
}

std::optional<ClipRange> parse_clip(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("clip must be [lo, hi] or null");
  return ClipRange{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

NamedConfig parse_solver(const json& j, const std::optional<ClipRange>& default_clip) {
  if (!j.is_object()) throw std::invalid_argument("solver entry must be an object");
  reject_unknown(j,
                 {"name", "preset", "warm_start_from", "lambda", "lambda_divisor", "alphas", "xi", "mu",
                  "tau_adapt", "rho_min", "rho_max", "rho_init", "tol", "t_max", "adaptive_rho",
                  "over_relax", "svt_scaling", "clip"},
                 "solver config");
  NamedConfig out;
  const std::string preset = j.value("preset", std::string("proposed"));
  if (preset == "proposed") {
    out.cfg = SolverConfig{};
  } else if (preset == "fixed-penalty") {
    out.cfg = SolverConfig::fixed_penalty();
  } else {
    throw std::invalid_argument("unknown solver preset '" + preset + "'");
  }
  out.name = j.value("name", preset);
  SolverConfig& c = out.cfg;
  if (j.contains("warm_start_from")) out.warm_start_from = j.at("warm_start_from").get<std::string>();
  if (j.contains("lambda") && !j.at("lambda").is_null()) c.lambda = j.at("lambda").get<double>();
  if (j.contains("lambda_divisor")) c.lambda_divisor = j.at("lambda_divisor").get<double>();
  if (j.contains("alphas")) c.alphas = j.at("alphas").get<std::vector<double>>();
  if (j.contains("xi")) c.xi = j.at("xi").get<double>();
  if (j.contains("mu")) c.mu = j.at("mu").get<double>();
  if (j.contains("tau_adapt")) c.tau_adapt = j.at("tau_adapt").get<double>();
  if (j.contains("rho_min")) c.rho_min = j.at("rho_min").get<double>();
  if (j.contains("rho_max")) c.rho_max = j.at("rho_max").get<double>();
  if (j.contains("rho_init") && !j.at("rho_init").is_null()) c.rho_init_override = j.at("rho_init").get<double>();
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
  if (j.contains("t_max")) c.t_max = j.at("t_max").get<std::size_t>();
  if (j.contains("adaptive_rho")) c.adaptive_rho = j.at("adaptive_rho").get<bool>();
  if (j.contains("over_relax")) c.over_relax = j.at("over_relax").get<bool>();
  if (j.contains("svt_scaling")) c.svt_scaling = parse_svt_scaling(j.at("svt_scaling").get<std::string>());
  c.clip_range = j.contains("clip") ? parse_clip(j.at("clip")) : default_clip;
  return out;
}

json solver_to_json(const NamedConfig& named) {
  const SolverConfig& c = named.cfg;
  json j;
  j["name"] = named.name;
  if (named.warm_start_from) j["warm_start_from"] = *named.warm_start_from;
  j["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
  j["lambda_divisor"] = c.lambda_divisor;
  if (!c.alphas.empty()) j["alphas"] = c.alphas;
  j["xi"] = c.xi;
  j["mu"] = c.mu;
  j["tau_adapt"] = c.tau_adapt;
  j["rho_min"] = c.rho_min;
  j["rho_max"] = c.rho_max;
  j["rho_init"] = c.rho_init_override ? json(*c.rho_init_override) : json(nullptr);
  j["tol"] = c.tol;
  j["t_max"] = c.t_max;
  j["adaptive_rho"] = c.adaptive_rho;
  j["over_relax"] = c.over_relax;
  j["svt_scaling"] = std::string(to_string(c.svt_scaling));
  j["clip"] = c.clip_range ? json::array({c.clip_range->lo, c.clip_range->hi}) : json(nullptr);
  return j;
}

std::vector<NamedConfig> default_sweep_solvers(const std::optional<ClipRange>& clip) {
  NamedConfig proposed{"proposed", SolverConfig{}, std::nullopt};
  NamedConfig baseline{"fixed-penalty", SolverConfig::fixed_penalty(), std::nullopt};
  NamedConfig warm{"proposed-warm", SolverConfig{}, std::string("fixed-penalty")};
  for (NamedConfig* n : {&proposed, &baseline, &warm}) n->cfg.clip_range = clip;
  return {proposed, baseline, warm};
}

RunConfig parse_run_config(const std::string& text, const std::optional<ClipRange>& default_clip) {
  RunConfig out;
  out.config_text = text;
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  reject_unknown(j,
                 {"command", "input", "output", "seed", "ratio", "ratios", "repeats", "mask",
                  "warm_start", "t_max", "solver", "solvers", "manifest"},
                 "config");
  if (j.contains("command")) out.command = j.at("command").get<std::string>();
  if (j.contains("input")) out.input = j.at("input").get<std::string>();
  if (j.contains("output")) out.output = j.at("output").get<std::string>();
  if (j.contains("seed")) out.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("ratio")) out.ratios = {j.at("ratio").get<double>()};
  if (j.contains("ratios")) out.ratios = j.at("ratios").get<std::vector<double>>();
  if (j.contains("repeats")) out.repeats = j.at("repeats").get<std::size_t>();
  if (j.contains("mask") && !j.at("mask").is_null()) out.mask = j.at("mask").get<std::string>();
  if (j.contains("warm_start") && !j.at("warm_start").is_null()) {
    out.warm_start = j.at("warm_start").get<std::string>();
  }
  if (j.contains("t_max") && !j.at("t_max").is_null()) out.t_max = j.at("t_max").get<std::size_t>();
  if (j.contains("solver")) out.solvers = {parse_solver(j.at("solver"), default_clip)};
  if (j.contains("solvers")) {
    out.solvers.clear();
    for (const json& s : j.at("solvers")) out.solvers.push_back(parse_solver(s, default_clip));
  }
  return out;
}

json make_manifest(const RunConfig& cfg, const json& extra) {
  json j;
  j["command"] = cfg.command;
  if (cfg.input) j["input"] = cfg.input->string();
  if (cfg.output) j["output"] = cfg.output->string();
  j["seed"] = cfg.seed;
  j["ratios"] = cfg.ratios;
  j["repeats"] = cfg.repeats;
  j["mask"] = cfg.mask ? json(cfg.mask->string()) : json(nullptr);
  j["warm_start"] = cfg.warm_start ? json(cfg.warm_start->string()) : json(nullptr);
  j["t_max"] = cfg.t_max ? json(*cfg.t_max) : json(nullptr);
  json solvers = json::array();
  for (const NamedConfig& n : cfg.solvers) solvers.push_back(solver_to_json(n));
  j["solvers"] = solvers;

  json meta = extra;
  meta["config_text"] = cfg.config_text;
  meta["versions"] = {
      {"lrtc", "0.1.0"},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"compiler", __VERSION__},
  };
  j["manifest"] = meta;
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lrtc::cli
