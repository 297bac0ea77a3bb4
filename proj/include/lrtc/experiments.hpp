#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lrtc/execution.hpp"
#include "lrtc/solver.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

/// Exactly round(ratio * prod I_n) linear indices drawn uniformly without
/// replacement (partial Fisher-Yates), deterministic in seed.
ObservationMask generate_mask(const Shape& shape, double ratio, std::uint64_t seed);

/// Tucker-form tensor: standard normal core of size `ranks`, multiplied in
/// every mode by a random orthonormal factor, plus white noise of the given
/// standard deviation.
DenseTensor synthetic_lowrank(const Shape& shape, const std::vector<std::size_t>& ranks,
                              std::uint64_t seed, double noise_std = 0.0);

struct SyntheticInstance {
  Shape shape;
  std::vector<std::size_t> ranks;
  double noise_std = 0.0;
};

struct ImageInstance {
  std::string path;
};

using Instance = std::variant<SyntheticInstance, ImageInstance>;

struct NamedConfig {
  std::string name;
  SolverConfig cfg;
  /// Name of another config whose reconstruction (same ratio and repeat)
  /// seeds this one.
  std::optional<std::string> warm_start_from;
};

struct ExperimentSpec {
  Instance instance;
  std::vector<double> ratios;
  std::uint64_t seed = 0;
  std::size_t repeats = 3;
  std::vector<NamedConfig> configs;
  /// Cells run concurrently when parallel; results are identical either way.
  Execution execution = Execution::parallel;
  bool keep_reconstructions = false;

  void validate() const;
};

struct SweepCell {
  std::string cfg;
  double ratio = 0.0;
  std::size_t repeat = 0;
  std::uint64_t mask_seed = 0;
  double nmse = 0.0;
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
  SolveStatus status = SolveStatus::max_iters;
  double lambda = 0.0;
  std::vector<IterationRecord> history;
  std::optional<DenseTensor> reconstruction;
};

/// Median over repeats for one (cfg, ratio) pair. status is converged only
/// when every repeat converged.
struct SummaryRow {
  std::string cfg;
  double ratio = 0.0;
  double nmse = 0.0;
  double iters = 0.0;
  SolveStatus status = SolveStatus::max_iters;
};

struct SweepResult {
  /// Ordered by config, then ratio, then repeat.
  std::vector<SweepCell> cells;

  const SweepCell& cell(const std::string& cfg, double ratio, std::size_t repeat) const;
  std::vector<SummaryRow> summary() const;
  SummaryRow row(const std::string& cfg, double ratio) const;
};

/// Seed of the mask shared by every config at (ratio, repeat).
std::uint64_t mask_seed(std::uint64_t base, double ratio, std::size_t repeat);

/// Ground truth for one repeat. Synthetic instances draw a fresh tensor per
/// repeat; image instances ignore the repeat.
DenseTensor load_instance(const Instance& instance, std::uint64_t seed, std::size_t repeat);

SweepResult run_sweep(const ExperimentSpec& spec);

double median(std::vector<double> values);

/// CSV with header t,r,s,rho,objective,nmse; reals printed with 17
/// significant digits, nmse left empty when absent.
void write_history(std::span<const IterationRecord> history, std::ostream& out);

/// CSV with header cfg,ratio,nmse,iters,status, one row per (cfg, ratio).
void write_summary(const SweepResult& result, std::ostream& out);

}  // namespace lrtc
