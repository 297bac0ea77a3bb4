#include "lrtc/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <stdexcept>

#include <Eigen/QR>
#include <spdlog/spdlog.h>

#include "lrtc/image_io.hpp"
#include "lrtc/rng.hpp"

namespace lrtc {

ObservationMask generate_mask(const Shape& shape, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("mask ratio must lie in (0, 1]");
  const std::size_t total = element_count(shape);
  const auto count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));

  std::vector<std::size_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(total - k));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(count);
  return ObservationMask(shape, std::move(pool));
}

DenseTensor synthetic_lowrank(const Shape& shape, const std::vector<std::size_t>& ranks,
                              std::uint64_t seed, double noise_std) {
  if (ranks.size() != shape.size()) throw std::invalid_argument("need one rank per mode");
  for (std::size_t n = 0; n < shape.size(); ++n) {
    if (ranks[n] < 1 || ranks[n] > shape[n]) {
      throw std::invalid_argument("rank of mode " + std::to_string(n) + " exceeds its extent");
    }
  }
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be nonnegative");

  Rng rng(seed);
  DenseTensor t(Shape(ranks.begin(), ranks.end()));
  for (double& v : t.data()) v = rng.normal();

  for (std::size_t n = 0; n < shape.size(); ++n) {
    const auto rows = static_cast<Eigen::Index>(shape[n]);
    const auto cols = static_cast<Eigen::Index>(ranks[n]);
    Matrix gaussian(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) gaussian(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Matrix> qr(gaussian);
    const Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    t = mode_product(t, q, n);
  }
  if (noise_std > 0.0) {
    for (double& v : t.data()) v += noise_std * rng.normal();
  }
  return t;
}

void ExperimentSpec::validate() const {
  if (ratios.empty()) throw std::invalid_argument("experiment needs at least one ratio");
  if (!std::is_sorted(ratios.begin(), ratios.end())) {
    throw std::invalid_argument("experiment ratios must be sorted");
  }
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("experiment ratios must lie in (0, 1]");
  }
  if (configs.empty()) throw std::invalid_argument("experiment needs at least one solver config");
  if (repeats < 1) throw std::invalid_argument("experiment needs at least one repeat");
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (configs[i].name == configs[j].name) {
        throw std::invalid_argument("duplicate config name '" + configs[i].name + "'");
      }
    }
    if (const auto& from = configs[i].warm_start_from) {
      const bool known = std::any_of(configs.begin(), configs.end(),
                                     [&](const NamedConfig& c) { return c.name == *from; });
      if (!known) throw std::invalid_argument("unknown warm start provider '" + *from + "'");
      if (*from == configs[i].name) throw std::invalid_argument("config cannot warm start itself");
    }
  }
}

std::uint64_t mask_seed(std::uint64_t base, double ratio, std::size_t repeat) {
  return mix_seed(base, std::bit_cast<std::uint64_t>(ratio), repeat);
}

DenseTensor load_instance(const Instance& instance, std::uint64_t seed, std::size_t repeat) {
  if (const auto* synth = std::get_if<SyntheticInstance>(&instance)) {
    return synthetic_lowrank(synth->shape, synth->ranks, mix_seed(seed, 0x5eed, repeat),
                             synth->noise_std);
  }
  return load_image(std::get<ImageInstance>(instance).path);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

// Dependency depth of each config along warm_start_from links.
std::vector<std::size_t> warm_start_levels(const ExperimentSpec& spec) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.configs.size(); ++i) index[spec.configs[i].name] = i;
  std::vector<std::size_t> level(spec.configs.size(), 0);
  for (std::size_t i = 0; i < spec.configs.size(); ++i) {
    std::size_t depth = 0;
    std::size_t cur = i;
    while (const auto& from = spec.configs[cur].warm_start_from) {
      cur = index.at(*from);
      if (++depth > spec.configs.size()) throw std::invalid_argument("warm start cycle");
    }
    level[i] = depth;
  }
  return level;
}

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t n_cfg = spec.configs.size();
  const std::size_t n_ratio = spec.ratios.size();
  const std::size_t n_rep = spec.repeats;

  // Truth and masks are fixed up front so every config sees the same data.
  std::vector<DenseTensor> truths;
  const bool synthetic = std::holds_alternative<SyntheticInstance>(spec.instance);
  for (std::size_t rep = 0; rep < (synthetic ? n_rep : 1); ++rep) {
    truths.push_back(load_instance(spec.instance, spec.seed, rep));
  }
  auto truth_of = [&](std::size_t rep) -> const DenseTensor& { return truths[synthetic ? rep : 0]; };

  std::vector<ObservationMask> masks(n_ratio * n_rep);
  std::vector<std::uint64_t> seeds(n_ratio * n_rep);
  for (std::size_t k = 0; k < n_ratio; ++k) {
    for (std::size_t rep = 0; rep < n_rep; ++rep) {
      seeds[k * n_rep + rep] = mask_seed(spec.seed, spec.ratios[k], rep);
      masks[k * n_rep + rep] = generate_mask(truth_of(rep).shape(), spec.ratios[k], seeds[k * n_rep + rep]);
    }
  }

  std::map<std::string, std::size_t> cfg_index;
  for (std::size_t i = 0; i < n_cfg; ++i) cfg_index[spec.configs[i].name] = i;

  SweepResult result;
  result.cells.resize(n_cfg * n_ratio * n_rep);
  std::vector<DenseTensor> outputs(result.cells.size());
  const std::vector<std::size_t> levels = warm_start_levels(spec);
  const std::size_t max_level = *std::max_element(levels.begin(), levels.end());

  for (std::size_t level = 0; level <= max_level; ++level) {
    std::vector<std::size_t> batch;
    for (std::size_t c = 0; c < n_cfg; ++c) {
      if (levels[c] != level) continue;
      for (std::size_t j = 0; j < n_ratio * n_rep; ++j) batch.push_back(c * n_ratio * n_rep + j);
    }

    std::vector<std::exception_ptr> errors(batch.size());
    const auto count = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic) if (is_parallel(spec.execution))
    for (std::ptrdiff_t b = 0; b < count; ++b) {
      try {
        const std::size_t id = batch[b];
        const std::size_t c = id / (n_ratio * n_rep);
        const std::size_t k = (id / n_rep) % n_ratio;
        const std::size_t rep = id % n_rep;
        const NamedConfig& named = spec.configs[c];
        const DenseTensor& truth = truth_of(rep);
        const ObservationMask& mask = masks[k * n_rep + rep];
        const DenseTensor observed = apply_mask(truth, mask);

        const DenseTensor* warm = nullptr;
        if (named.warm_start_from) {
          warm = &outputs[cfg_index.at(*named.warm_start_from) * n_ratio * n_rep + k * n_rep + rep];
        }

        const auto start = std::chrono::steady_clock::now();
        SolveResult solved = solve(observed, mask, named.cfg, warm, &truth);
        const auto stop = std::chrono::steady_clock::now();

        SweepCell& cell = result.cells[id];
        cell.cfg = named.name;
        cell.ratio = spec.ratios[k];
        cell.repeat = rep;
        cell.mask_seed = seeds[k * n_rep + rep];
        cell.nmse = nmse(solved.x, truth);
        cell.iterations = solved.iterations();
        cell.wall_seconds = std::chrono::duration<double>(stop - start).count();
        cell.status = solved.status;
        cell.lambda = solved.lambda;
        cell.history = std::move(solved.history);
        if (spec.keep_reconstructions) cell.reconstruction = solved.x;
        outputs[id] = std::move(solved.x);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (const SweepCell& cell : result.cells) {
    spdlog::info("sweep {} ratio={} repeat={}: nmse={:.6g} iters={} {}", cell.cfg, cell.ratio,
                 cell.repeat, cell.nmse, cell.iterations, to_string(cell.status));
  }
  return result;
}

const SweepCell& SweepResult::cell(const std::string& cfg, double ratio, std::size_t repeat) const {
  for (const SweepCell& c : cells) {
    if (c.cfg == cfg && c.ratio == ratio && c.repeat == repeat) return c;
  }
  throw std::out_of_range("no sweep cell for " + cfg);
}

SummaryRow SweepResult::row(const std::string& cfg, double ratio) const {
  SummaryRow row;
  row.cfg = cfg;
  row.ratio = ratio;
  std::vector<double> errs;
  std::vector<double> iters;
  bool all_converged = true;
  for (const SweepCell& c : cells) {
    if (c.cfg != cfg || c.ratio != ratio) continue;
    errs.push_back(c.nmse);
    iters.push_back(static_cast<double>(c.iterations));
    all_converged = all_converged && c.status == SolveStatus::converged;
  }
  if (errs.empty()) throw std::out_of_range("no sweep cells for " + cfg);
  row.nmse = median(errs);
  row.iters = median(iters);
  row.status = all_converged ? SolveStatus::converged : SolveStatus::max_iters;
  return row;
}

std::vector<SummaryRow> SweepResult::summary() const {
  std::vector<SummaryRow> rows;
  for (const SweepCell& c : cells) {
    const bool seen = std::any_of(rows.begin(), rows.end(), [&](const SummaryRow& r) {
      return r.cfg == c.cfg && r.ratio == c.ratio;
    });
    if (!seen) rows.push_back(row(c.cfg, c.ratio));
  }
  return rows;
}

}  // namespace lrtc
