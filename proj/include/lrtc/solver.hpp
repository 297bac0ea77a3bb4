#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lrtc/execution.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

/// Where the SVT threshold of the M-update comes from.
///  fixed:          tau_n = alpha_n * lambda, independent of rho.
///  penalty_scaled: tau_n = alpha_n * lambda / rho, the exact prox step of
///                  the augmented Lagrangian subproblem.
enum class SvtScaling { fixed, penalty_scaled };

enum class SolveStatus { converged, max_iters };

std::string_view to_string(SvtScaling s);
std::string_view to_string(SolveStatus s);
SvtScaling parse_svt_scaling(std::string_view text);

struct ClipRange {
  double lo = 0.0;
  double hi = 255.0;
  bool operator==(const ClipRange&) const = default;
};

struct SolverConfig {
  /// Regularization weight. Unset means lambda = sigma_bar / lambda_divisor,
  /// with sigma_bar the mean nonzero singular value of the initial estimate's
  /// unfoldings averaged over modes.
  std::optional<double> lambda;
  double lambda_divisor = 50.0;
  /// Mode weights; empty means uniform 1/N.
  std::vector<double> alphas;
  double xi = 1.7;
  double mu = 10.0;
  double tau_adapt = 2.0;
  double rho_min = 0.01;
  double rho_max = 1000.0;
  std::optional<double> rho_init_override;
  double tol = 1e-5;
  std::size_t t_max = 2000;
  bool adaptive_rho = true;
  bool over_relax = true;
  SvtScaling svt_scaling = SvtScaling::fixed;
  std::optional<ClipRange> clip_range;
  Execution execution = Execution::parallel;

  /// Throws std::invalid_argument when an invariant is violated for a
  /// tensor of the given order.
  void validate(std::size_t order) const;

  double alpha(std::size_t mode, std::size_t order) const;
  double relaxation() const { return over_relax ? xi : 1.0; }

  /// Fixed-penalty consensus ADMM: no penalty adaptation, no over-relaxation.
  static SolverConfig fixed_penalty();
};

/// ADMM iterate. m_prev holds the previous M_n so the dual residual can be
/// formed; right after initialization it equals m.
struct SolverState {
  DenseTensor x;
  std::vector<Matrix> m;
  std::vector<Matrix> u;
  std::vector<Matrix> m_prev;
  double rho = 1.0;
  double lambda = 0.0;
  std::size_t t = 0;
};

struct IterationRecord {
  std::size_t t = 0;
  double r = 0.0;
  double s = 0.0;
  double rho = 0.0;
  double objective = 0.0;
  std::optional<double> nmse;

  bool operator==(const IterationRecord&) const = default;
};

struct ModeUpdate {
  Matrix m_new;
  Matrix x_hat;
  double nuclear_norm = 0.0;
};

struct Residuals {
  double r = 0.0;
  double s = 0.0;
};

/// Mean over modes of the mean nonzero singular value of each unfolding.
double mean_unfolding_spectrum(const DenseTensor& x, Execution exec = Execution::parallel);

double svt_threshold(const SolverConfig& cfg, double lambda, double rho, std::size_t mode,
                     std::size_t order);

/// x0 takes the observed entries on Omega and the mean of the observed
/// entries elsewhere. When warm_start is given it supplies the unobserved
/// entries instead. Duals start at zero.
SolverState init_state(const DenseTensor& observed, const ObservationMask& mask,
                       const SolverConfig& cfg, const DenseTensor* warm_start = nullptr);

/// rho0 = sigma_bar / (N * lambda) clamped to [rho_min, rho_max], or the
/// configured override. Falls back to 1 when x has no nonzero singular value.
double init_rho(const SolverState& state, const SolverConfig& cfg);

/// Consensus average of fold_n(M_n - U_n) on the unobserved entries,
/// observed values on Omega.
DenseTensor x_update(const SolverState& state, const DenseTensor& observed,
                     const ObservationMask& mask, Execution exec = Execution::parallel);

ModeUpdate m_update(const SolverState& state, const DenseTensor& x_new, const SolverConfig& cfg,
                    std::size_t mode);

Matrix u_update(const Matrix& u, const Matrix& x_hat, const Matrix& m_new);

/// Primal residual against state.m and dual residual between state.m and
/// state.m_prev, both with the current unfoldings of x_new.
Residuals residuals(const SolverState& state, const DenseTensor& x_new);

double rho_update(double rho, const Residuals& res, const SolverConfig& cfg);

void rescale_duals(std::span<Matrix> u, double rho_old, double rho_new);

/// lambda * sum_n alpha_n ||M_n||_*
double objective(const SolverState& state, const SolverConfig& cfg);

/// Relative-residual stopping rule: max(r / max(1, ||x||_unf), s / max(1, rho ||U||)) < tol.
bool has_converged(const SolverState& state, const Residuals& res, const SolverConfig& cfg);

/// One full iteration in place: x-update, per-mode M/U updates, residuals,
/// penalty update and dual rescaling. Mode updates run concurrently when
/// cfg.execution is parallel; the result does not depend on it.
IterationRecord step(SolverState& state, const DenseTensor& observed, const ObservationMask& mask,
                     const SolverConfig& cfg, const DenseTensor* truth = nullptr);

struct SolveResult {
  DenseTensor x;
  std::vector<IterationRecord> history;
  SolveStatus status = SolveStatus::max_iters;
  double lambda = 0.0;
  double rho0 = 0.0;

  std::size_t iterations() const { return history.size(); }
};

SolveResult solve(const DenseTensor& observed, const ObservationMask& mask, const SolverConfig& cfg,
                  const DenseTensor* warm_start = nullptr, const DenseTensor* truth = nullptr);

}  // namespace lrtc
