#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "adalang/core.hpp"
#include "adalang/monitor.hpp"
#include "adalang/potentials.hpp"

namespace adalang {

/// Everything a sub-step needs besides the state. Potential and monitor are
/// referenced, not owned.
struct SplitContext {
  const PotentialModel* pot = nullptr;
  const MonitorFunction* mon = nullptr;  // unused by the fixed-step blocks
  double beta_inv = 1.0;
  double gamma = 0.1;
  double fp_tol = 1e-12;
  int fp_max_iter = 100;
};

/// State plus force/monitor values at state.x. The has_* flags say which
/// caches are valid; any sub-step that moves x clears them.
struct SplitStepRecord {
  PhaseState state;
  std::vector<double> F;   // -grad V(x)
  double G = 1.0;          // g(x)
  std::vector<double> Gp;  // grad g(x)
  bool has_F = false;
  bool has_G = false;
  bool has_Gp = false;

  // Diagnostics of the most recent implicit A sub-step.
  int fp_iters = 0;
  double fp_last_diff = 0.0;
  bool converged = true;

  SplitStepRecord() = default;
  explicit SplitStepRecord(PhaseState s);
  void invalidate() { has_F = has_G = has_Gp = false; }
};

void ensure_F(const SplitContext& ctx, SplitStepRecord& rec);
void ensure_G(const SplitContext& ctx, SplitStepRecord& rec);
void ensure_Gp(const SplitContext& ctx, SplitStepRecord& rec);

// Adaptive sub-steps.

/// p += h (G F + beta_inv G_p)
void step_B_hat(const SplitContext& ctx, SplitStepRecord& rec, double h);
/// C = exp(-G h gamma); p = C p + sqrt(beta_inv (1 - C^2)) z. Draws dim normals.
void step_O_hat(const SplitContext& ctx, SplitStepRecord& rec, double h, RngStream& rng);
/// p += h G F
void step_B_tilde(const SplitContext& ctx, SplitStepRecord& rec, double h);
/// p = C p + beta_inv G_p (1 - C) / (gamma G) + sqrt(beta_inv (1 - C^2)) z.
/// Throws ValidationError when gamma == 0.
void step_O_tilde(const SplitContext& ctx, SplitStepRecord& rec, double h, RngStream& rng);
/// Implicit midpoint x' = x + h p g((x + x') / 2) by fixed-point iteration
/// from x + h p g(x), stopping when the max-norm change between iterates is
/// <= fp_tol. fp_iters counts the updates after the initial guess. On
/// reaching fp_max_iter the record is marked non-converged.
void step_A_implicit(const SplitContext& ctx, SplitStepRecord& rec, double h);

// Explicit-normal variants used by unit tests that fix the draw.
void step_O_hat(const SplitContext& ctx, SplitStepRecord& rec, double h, std::span<const double> z);
void step_O_tilde(const SplitContext& ctx, SplitStepRecord& rec, double h, std::span<const double> z);

// Fixed-step blocks.
void step_A(SplitStepRecord& rec, double h);
void step_B(const SplitContext& ctx, SplitStepRecord& rec, double h);
void step_O(const SplitContext& ctx, SplitStepRecord& rec, double h, std::span<const double> z);

enum class SchemeId {
  BAOAB_FIXED,
  BAOAB_HAT,
  BAOAB_TILDE,
  ABOBA_FIXED,
  ABOBA_HAT,
  ABOBA_TILDE,
  OBABO_FIXED,
  OBABO_HAT,
  OBABO_TILDE,
  SPV_FIXED,
  SPV_IP,
};

[[nodiscard]] std::string to_string(SchemeId id);
/// Throws ValidationError for unknown names.
[[nodiscard]] SchemeId parse_scheme_id(std::string_view name);
[[nodiscard]] const std::vector<SchemeId>& all_scheme_ids();
[[nodiscard]] bool is_adaptive(SchemeId id);
[[nodiscard]] bool requires_friction(SchemeId id);

/// One step of the composition. Letter strings are read left to right:
/// BAOAB = B(h/2) A(h/2) O(h) A(h/2) B(h/2), ABOBA = A(h/2) B(h/2) O(h) B(h/2) A(h/2),
/// OBABO = O(h/2) B(h/2) A(h) B(h/2) O(h/2) (two draws), SPV = A(h/2) then an
/// exact Ornstein-Uhlenbeck update with the force held fixed, then A(h/2).
/// Returns the step diagnostics; the record keeps valid caches at the new x.
StepInfo compose(SchemeId scheme, const SplitContext& ctx, SplitStepRecord& rec, double h, RngStream& rng);

/// Stepper that keeps the record between steps so the force and monitor at
/// the end of one step are reused at the start of the next.
[[nodiscard]] std::unique_ptr<Stepper> make_splitting_stepper(SchemeId scheme, const SplitContext& ctx, double h);

}  // namespace adalang
