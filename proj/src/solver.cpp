#include "lrtc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "lrtc/svt.hpp"

namespace lrtc {

std::string_view to_string(SvtScaling s) {
  return s == SvtScaling::fixed ? "fixed" : "penalty-scaled";
}

std::string_view to_string(SolveStatus s) {
  return s == SolveStatus::converged ? "converged" : "max_iters";
}

SvtScaling parse_svt_scaling(std::string_view text) {
  if (text == "fixed") return SvtScaling::fixed;
  if (text == "penalty-scaled") return SvtScaling::penalty_scaled;
  throw std::invalid_argument("unknown svt_scaling '" + std::string(text) + "'");
}

void SolverConfig::validate(std::size_t order) const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("solver config: " + what); };
  if (lambda && !(*lambda > 0.0)) fail("lambda must be positive");
  if (!(lambda_divisor > 0.0)) fail("lambda_divisor must be positive");
  if (!alphas.empty()) {
    if (alphas.size() != order) fail("alphas needs one weight per mode");
    double sum = 0.0;
    for (double a : alphas) {
      if (!(a >= 0.0)) fail("alphas must be nonnegative");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) fail("alphas must sum to 1");
  }
  if (!(xi >= 1.0 && xi < 2.0)) fail("xi must lie in [1, 2)");
  if (!(mu > 1.0)) fail("mu must exceed 1");
  if (!(tau_adapt > 1.0)) fail("tau_adapt must exceed 1");
  if (!(rho_min > 0.0 && rho_min <= rho_max)) fail("need 0 < rho_min <= rho_max");
  if (rho_init_override && !(*rho_init_override > 0.0)) fail("rho_init must be positive");
  if (!(tol > 0.0)) fail("tol must be positive");
  if (t_max < 1) fail("t_max must be at least 1");
  if (clip_range && !(clip_range->lo <= clip_range->hi)) fail("clip range is empty");
}

double SolverConfig::alpha(std::size_t mode, std::size_t order) const {
  if (alphas.empty()) return 1.0 / static_cast<double>(order);
  return alphas.at(mode);
}

SolverConfig SolverConfig::fixed_penalty() {
  SolverConfig cfg;
  cfg.adaptive_rho = false;
  cfg.over_relax = false;
  return cfg;
}

double mean_unfolding_spectrum(const DenseTensor& x, Execution exec) {
  const std::size_t order = x.order();
  double sum = 0.0;
  for (std::size_t n = 0; n < order; ++n) {
    sum += mean_nonzero_singular_value(unfold(x, n, exec));
  }
  return sum / static_cast<double>(order);
}

double svt_threshold(const SolverConfig& cfg, double lambda, double rho, std::size_t mode,
                     std::size_t order) {
  const double tau = cfg.alpha(mode, order) * lambda;
  return cfg.svt_scaling == SvtScaling::fixed ? tau : tau / rho;
}

namespace {

double rho_from_spectrum(double sigma_bar, double lambda, std::size_t order,
                         const SolverConfig& cfg) {
  if (cfg.rho_init_override) return std::clamp(*cfg.rho_init_override, cfg.rho_min, cfg.rho_max);
  if (sigma_bar <= 0.0) {
    spdlog::warn("initial estimate has no nonzero singular values; falling back to rho0 = 1");
    return std::clamp(1.0, cfg.rho_min, cfg.rho_max);
  }
  return std::clamp(sigma_bar / (static_cast<double>(order) * lambda), cfg.rho_min, cfg.rho_max);
}

void require_finite_on(const DenseTensor& t, std::span<const std::size_t> indices,
                       const char* what) {
  for (std::size_t i : indices) {
    if (!std::isfinite(t[i])) throw std::invalid_argument(std::string(what) + " has non-finite entries");
  }
}

}  // namespace

SolverState init_state(const DenseTensor& observed, const ObservationMask& mask,
                       const SolverConfig& cfg, const DenseTensor* warm_start) {
  if (observed.shape() != mask.shape()) throw std::invalid_argument("mask shape does not match tensor");
  if (mask.observed_count() == 0) throw std::invalid_argument("observation mask is empty");
  cfg.validate(observed.order());
  require_finite_on(observed, mask.observed(), "observed tensor");

  SolverState state;
  if (warm_start) {
    if (warm_start->shape() != observed.shape()) {
      throw std::invalid_argument("warm start shape does not match tensor");
    }
    const auto all = warm_start->data();
    if (!std::all_of(all.begin(), all.end(), [](double v) { return std::isfinite(v); })) {
      throw std::invalid_argument("warm start has non-finite entries");
    }
    state.x = *warm_start;
  } else {
    double sum = 0.0;
    for (std::size_t i : mask.observed()) sum += observed[i];
    state.x = DenseTensor::filled(observed.shape(), sum / static_cast<double>(mask.observed_count()));
  }
  for (std::size_t i : mask.observed()) state.x[i] = observed[i];

  const std::size_t order = observed.order();
  const double sigma_bar = mean_unfolding_spectrum(state.x, cfg.execution);
  if (cfg.lambda) {
    state.lambda = *cfg.lambda;
  } else if (sigma_bar > 0.0) {
    state.lambda = sigma_bar / cfg.lambda_divisor;
  } else {
    spdlog::warn("initial estimate is all zero; using lambda = 1");
    state.lambda = 1.0;
  }
  state.rho = rho_from_spectrum(sigma_bar, state.lambda, order, cfg);
  spdlog::debug("init: sigma_bar={} lambda={} rho0={}", sigma_bar, state.lambda, state.rho);

  state.m.resize(order);
  state.u.resize(order);
  for (std::size_t n = 0; n < order; ++n) {
    const Matrix unfolded = unfold(state.x, n, cfg.execution);
    state.m[n] = svt(unfolded, svt_threshold(cfg, state.lambda, state.rho, n, order));
    state.u[n] = Matrix::Zero(unfolded.rows(), unfolded.cols());
  }
  state.m_prev = state.m;
  state.t = 0;
  return state;
}

double init_rho(const SolverState& state, const SolverConfig& cfg) {
  if (cfg.rho_init_override) return std::clamp(*cfg.rho_init_override, cfg.rho_min, cfg.rho_max);
  return rho_from_spectrum(mean_unfolding_spectrum(state.x, cfg.execution), state.lambda,
                           state.x.order(), cfg);
}

DenseTensor x_update(const SolverState& state, const DenseTensor& observed,
                     const ObservationMask& mask, Execution exec) {
  const std::size_t order = state.x.order();
  if (observed.shape() != state.x.shape() || mask.shape() != state.x.shape()) {
    throw std::invalid_argument("x_update: shape mismatch");
  }
  DenseTensor consensus(state.x.shape());
  for (std::size_t n = 0; n < order; ++n) {
    const Matrix diff = state.m[n] - state.u[n];
    fold_accumulate(diff, n, 1.0, consensus, exec);
  }
  const double inv = 1.0 / static_cast<double>(order);
  auto data = consensus.data();
  for (double& v : data) v *= inv;
  for (std::size_t i : mask.observed()) consensus[i] = observed[i];
  return consensus;
}

ModeUpdate m_update(const SolverState& state, const DenseTensor& x_new, const SolverConfig& cfg,
                    std::size_t mode) {
  const double xi = cfg.relaxation();
  const std::size_t order = x_new.order();
  ModeUpdate out;
  // Nested parallel regions are inactive, so this unfold stays serial when
  // step() already distributes modes across threads.
  out.x_hat = unfold(x_new, mode, cfg.execution);
  if (xi != 1.0) out.x_hat = xi * out.x_hat + (1.0 - xi) * state.m[mode];
  Shrinkage shrunk =
      shrink(out.x_hat + state.u[mode], svt_threshold(cfg, state.lambda, state.rho, mode, order));
  out.m_new = std::move(shrunk.value);
  out.nuclear_norm = shrunk.nuclear_norm;
  return out;
}

Matrix u_update(const Matrix& u, const Matrix& x_hat, const Matrix& m_new) {
  if (u.rows() != x_hat.rows() || u.cols() != x_hat.cols() || u.rows() != m_new.rows() ||
      u.cols() != m_new.cols()) {
    throw std::invalid_argument("u_update: shape mismatch");
  }
  return u + x_hat - m_new;
}

Residuals residuals(const SolverState& state, const DenseTensor& x_new) {
  double primal = 0.0;
  double dual = 0.0;
  for (std::size_t n = 0; n < state.m.size(); ++n) {
    primal += (unfold(x_new, n, Execution::serial) - state.m[n]).squaredNorm();
    dual += (state.m[n] - state.m_prev[n]).squaredNorm();
  }
  return {std::sqrt(primal), state.rho * std::sqrt(dual)};
}

double rho_update(double rho, const Residuals& res, const SolverConfig& cfg) {
  if (!cfg.adaptive_rho) return rho;
  if (res.r > cfg.mu * res.s) return std::min(cfg.tau_adapt * rho, cfg.rho_max);
  if (res.s > cfg.mu * res.r) return std::max(rho / cfg.tau_adapt, cfg.rho_min);
  return rho;
}

void rescale_duals(std::span<Matrix> u, double rho_old, double rho_new) {
  if (!(rho_old > 0.0 && rho_new > 0.0)) throw std::invalid_argument("rescale_duals: rho must be positive");
  if (rho_old == rho_new) return;
  const double factor = rho_old / rho_new;
  for (Matrix& un : u) un *= factor;
}

double objective(const SolverState& state, const SolverConfig& cfg) {
  const std::size_t order = state.m.size();
  double sum = 0.0;
  for (std::size_t n = 0; n < order; ++n) sum += cfg.alpha(n, order) * nuclear_norm(state.m[n]);
  return state.lambda * sum;
}

bool has_converged(const SolverState& state, const Residuals& res, const SolverConfig& cfg) {
  const double x_scale =
      std::sqrt(static_cast<double>(state.x.order())) * frobenius_norm(state.x);
  double u_sq = 0.0;
  for (const Matrix& un : state.u) u_sq += un.squaredNorm();
  const double dual_scale = state.rho * std::sqrt(u_sq);
  const double r_rel = res.r / std::max(1.0, x_scale);
  const double s_rel = res.s / std::max(1.0, dual_scale);
  return std::max(r_rel, s_rel) < cfg.tol;
}

IterationRecord step(SolverState& state, const DenseTensor& observed, const ObservationMask& mask,
                     const SolverConfig& cfg, const DenseTensor* truth) {
  const std::size_t order = state.x.order();
  DenseTensor x_new = x_update(state, observed, mask, cfg.execution);

  std::vector<ModeUpdate> updates(order);
  const auto modes = static_cast<std::ptrdiff_t>(order);
#pragma omp parallel for schedule(static) if (is_parallel(cfg.execution))
  for (std::ptrdiff_t n = 0; n < modes; ++n) {
    updates[n] = m_update(state, x_new, cfg, static_cast<std::size_t>(n));
  }

  double weighted_nuclear = 0.0;
  for (std::size_t n = 0; n < order; ++n) {
    state.u[n] = u_update(state.u[n], updates[n].x_hat, updates[n].m_new);
    state.m_prev[n] = std::move(state.m[n]);
    state.m[n] = std::move(updates[n].m_new);
    weighted_nuclear += cfg.alpha(n, order) * updates[n].nuclear_norm;
  }
  state.x = std::move(x_new);
  ++state.t;

  const Residuals res = residuals(state, state.x);
  const double rho_new = rho_update(state.rho, res, cfg);
  rescale_duals(state.u, state.rho, rho_new);
  state.rho = rho_new;

  IterationRecord rec;
  rec.t = state.t;
  rec.r = res.r;
  rec.s = res.s;
  rec.rho = state.rho;
  rec.objective = state.lambda * weighted_nuclear;
  if (truth) rec.nmse = nmse(state.x, *truth);
  return rec;
}

SolveResult solve(const DenseTensor& observed, const ObservationMask& mask, const SolverConfig& cfg,
                  const DenseTensor* warm_start, const DenseTensor* truth) {
  SolverState state = init_state(observed, mask, cfg, warm_start);
  SolveResult result;
  result.lambda = state.lambda;
  result.rho0 = state.rho;
  const bool fully_observed = mask.observed_count() == mask.total();

  for (std::size_t it = 0; it < cfg.t_max; ++it) {
    IterationRecord rec = step(state, observed, mask, cfg, truth);
    result.history.push_back(rec);
    // rho * U is invariant under the rescale inside step(), so the dual
    // scale seen here matches the one the residuals were measured against.
    if (fully_observed || has_converged(state, {rec.r, rec.s}, cfg)) {
      result.status = SolveStatus::converged;
      break;
    }
  }

  result.x = std::move(state.x);
  if (cfg.clip_range) {
    for (double& v : result.x.data()) v = std::clamp(v, cfg.clip_range->lo, cfg.clip_range->hi);
  }
  spdlog::debug("solve: {} after {} iterations", to_string(result.status), result.iterations());
  return result;
}

}  // namespace lrtc
