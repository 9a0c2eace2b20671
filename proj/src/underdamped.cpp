#include "adalang/underdamped.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "adalang/errors.hpp"

namespace adalang {

SplitStepRecord::SplitStepRecord(PhaseState s) : state(std::move(s)) {
  if (state.p.empty()) state.p.assign(state.x.size(), 0.0);
  if (state.p.size() != state.x.size()) throw ValidationError("SplitStepRecord: x and p lengths differ");
}

void ensure_F(const SplitContext& ctx, SplitStepRecord& rec) {
  if (rec.has_F) return;
  rec.F.resize(rec.state.x.size());
  ctx.pot->grad(rec.state.x, rec.F);
  for (double& v : rec.F) v = -v;
  rec.has_F = true;
}

void ensure_G(const SplitContext& ctx, SplitStepRecord& rec) {
  if (rec.has_G) return;
  rec.G = ctx.mon->g(rec.state.x);
  rec.has_G = true;
}

void ensure_Gp(const SplitContext& ctx, SplitStepRecord& rec) {
  if (rec.has_Gp) return;
  rec.Gp.resize(rec.state.x.size());
  if (rec.has_G) {
    ctx.mon->grad(rec.state.x, rec.Gp);
  } else {
    rec.G = ctx.mon->g_and_grad(rec.state.x, rec.Gp);
    rec.has_G = true;
  }
  rec.has_Gp = true;
}

namespace {

void require_z(const SplitStepRecord& rec, std::span<const double> z) {
  if (z.size() != rec.state.p.size()) throw ValidationError("O step: draw vector has the wrong length");
}

// Scratch draws for the stream-driven O steps; dimensions here are small.
constexpr std::size_t kMaxInlineDim = 8;

template <class Fn>
void with_draws(std::size_t d, RngStream& rng, Fn&& fn) {
  if (d <= kMaxInlineDim) {
    std::array<double, kMaxInlineDim> buf{};
    std::span<double> z(buf.data(), d);
    rng.fill_normal(z);
    fn(std::span<const double>(z));
  } else {
    std::vector<double> buf(d);
    rng.fill_normal(buf);
    fn(std::span<const double>(buf));
  }
}

}  // namespace

// The update formulas are ordered so that G == 1, G_p == 0 reproduces the
// fixed-step blocks bit for bit, and so that hat and tilde coincide when G_p == 0.

void step_B_hat(const SplitContext& ctx, SplitStepRecord& rec, double h) {
  ensure_F(ctx, rec);
  ensure_Gp(ctx, rec);
  ensure_G(ctx, rec);
  auto& p = rec.state.p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = p[i] + h * (rec.G * rec.F[i] + ctx.beta_inv * rec.Gp[i]);
}

void step_B_tilde(const SplitContext& ctx, SplitStepRecord& rec, double h) {
  ensure_F(ctx, rec);
  ensure_G(ctx, rec);
  auto& p = rec.state.p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = p[i] + h * (rec.G * rec.F[i]);
}

void step_B(const SplitContext& ctx, SplitStepRecord& rec, double h) {
  ensure_F(ctx, rec);
  auto& p = rec.state.p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = p[i] + h * rec.F[i];
}

void step_O_hat(const SplitContext& ctx, SplitStepRecord& rec, double h, std::span<const double> z) {
  require_z(rec, z);
  ensure_G(ctx, rec);
  const double C = std::exp(-(rec.G * h) * ctx.gamma);
  const double noise = std::sqrt(ctx.beta_inv * (1.0 - C * C));
  auto& p = rec.state.p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = C * p[i] + noise * z[i];
}

void step_O_tilde(const SplitContext& ctx, SplitStepRecord& rec, double h, std::span<const double> z) {
  if (!(ctx.gamma > 0.0)) throw ValidationError("tilde O step requires gamma > 0");
  require_z(rec, z);
  ensure_Gp(ctx, rec);
  ensure_G(ctx, rec);
  const double C = std::exp(-(rec.G * h) * ctx.gamma);
  const double noise = std::sqrt(ctx.beta_inv * (1.0 - C * C));
  const double scale = ctx.gamma * rec.G;
  auto& p = rec.state.p;
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = C * p[i] + ctx.beta_inv * rec.Gp[i] * (1.0 - C) / scale + noise * z[i];
}

void step_O(const SplitContext& ctx, SplitStepRecord& rec, double h, std::span<const double> z) {
  require_z(rec, z);
  const double C = std::exp(-h * ctx.gamma);
  const double noise = std::sqrt(ctx.beta_inv * (1.0 - C * C));
  auto& p = rec.state.p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = C * p[i] + noise * z[i];
}

void step_O_hat(const SplitContext& ctx, SplitStepRecord& rec, double h, RngStream& rng) {
  with_draws(rec.state.p.size(), rng, [&](std::span<const double> z) { step_O_hat(ctx, rec, h, z); });
}

void step_O_tilde(const SplitContext& ctx, SplitStepRecord& rec, double h, RngStream& rng) {
  with_draws(rec.state.p.size(), rng, [&](std::span<const double> z) { step_O_tilde(ctx, rec, h, z); });
}

void step_A(SplitStepRecord& rec, double h) {
  auto& x = rec.state.x;
  const auto& p = rec.state.p;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] + h * p[i];
  rec.invalidate();
}

namespace {

void implicit_A_iterate(const SplitContext& ctx, SplitStepRecord& rec, double h, std::span<double> x0,
                        std::span<double> mid) {
  auto& x = rec.state.x;
  const auto& p = rec.state.p;
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) {
    x0[i] = x[i];
    x[i] = x0[i] + h * p[i] * rec.G;
  }
  rec.fp_iters = 0;
  rec.converged = false;
  rec.fp_last_diff = 0.0;
  while (rec.fp_iters < ctx.fp_max_iter) {
    for (std::size_t i = 0; i < d; ++i) mid[i] = 0.5 * (x[i] + x0[i]);
    const double g_mid = ctx.mon->g(mid);
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double next = x0[i] + h * p[i] * g_mid;
      const double e = std::abs(next - x[i]);
      if (!(e <= diff)) diff = e;  // keeps NaN
      x[i] = next;
    }
    ++rec.fp_iters;
    rec.fp_last_diff = diff;
    if (diff <= ctx.fp_tol) {
      rec.converged = true;
      break;
    }
    if (!std::isfinite(diff)) break;
  }
}

}  // namespace

void step_A_implicit(const SplitContext& ctx, SplitStepRecord& rec, double h) {
  ensure_G(ctx, rec);
  const std::size_t d = rec.state.x.size();
  if (d <= kMaxInlineDim) {
    std::array<double, kMaxInlineDim> x0{}, mid{};
    implicit_A_iterate(ctx, rec, h, std::span<double>(x0.data(), d), std::span<double>(mid.data(), d));
  } else {
    std::vector<double> x0(d), mid(d);
    implicit_A_iterate(ctx, rec, h, x0, mid);
  }
  rec.invalidate();
}

namespace {

// Exact OU update of p with x frozen, relaxing towards F / gamma (+ the
// monitor drift for the transformed variant).
void spv_core(const SplitContext& ctx, SplitStepRecord& rec, double h, bool adaptive, std::span<const double> z) {
  if (!(ctx.gamma > 0.0)) throw ValidationError("SPV schemes require gamma > 0");
  ensure_F(ctx, rec);
  double G = 1.0;
  if (adaptive) {
    ensure_Gp(ctx, rec);
    ensure_G(ctx, rec);
    G = rec.G;
  }
  const double C = adaptive ? std::exp(-(G * h) * ctx.gamma) : std::exp(-h * ctx.gamma);
  const double noise = std::sqrt(ctx.beta_inv * (1.0 - C * C));
  auto& p = rec.state.p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (adaptive)
      p[i] = C * p[i] + rec.F[i] * (1.0 - C) / ctx.gamma + ctx.beta_inv * rec.Gp[i] * (1.0 - C) / (ctx.gamma * G) +
             noise * z[i];
    else
      p[i] = C * p[i] + rec.F[i] * (1.0 - C) / ctx.gamma + noise * z[i];
  }
}

struct FpTally {
  int sum = 0, solves = 0, max = 0;
  double last_diff = 0.0;
  bool converged = true;

  void add(const SplitStepRecord& rec) {
    sum += rec.fp_iters;
    ++solves;
    max = std::max(max, rec.fp_iters);
    last_diff = std::max(last_diff, rec.fp_last_diff);
    converged = converged && rec.converged;
  }
};

enum class Flavor { fixed, hat, tilde };

Flavor flavor_of(SchemeId id) {
  switch (id) {
    case SchemeId::BAOAB_FIXED:
    case SchemeId::ABOBA_FIXED:
    case SchemeId::OBABO_FIXED:
    case SchemeId::SPV_FIXED: return Flavor::fixed;
    case SchemeId::BAOAB_HAT:
    case SchemeId::ABOBA_HAT:
    case SchemeId::OBABO_HAT: return Flavor::hat;
    case SchemeId::BAOAB_TILDE:
    case SchemeId::ABOBA_TILDE:
    case SchemeId::OBABO_TILDE:
    case SchemeId::SPV_IP: return Flavor::tilde;
  }
  return Flavor::fixed;
}

}  // namespace

StepInfo compose(SchemeId scheme, const SplitContext& ctx, SplitStepRecord& rec, double h, RngStream& rng) {
  const Flavor flavor = flavor_of(scheme);
  const bool adaptive = flavor != Flavor::fixed;
  StepInfo info;
  if (adaptive) {
    if (flavor == Flavor::hat) ensure_Gp(ctx, rec);
    ensure_G(ctx, rec);
    info.monitor = rec.G;
  }
  FpTally tally;
  auto A = [&](double hs) {
    if (!tally.converged) return;
    if (adaptive) {
      step_A_implicit(ctx, rec, hs);
      tally.add(rec);
    } else {
      step_A(rec, hs);
    }
  };
  auto B = [&](double hs) {
    switch (flavor) {
      case Flavor::fixed: step_B(ctx, rec, hs); break;
      case Flavor::hat: step_B_hat(ctx, rec, hs); break;
      case Flavor::tilde: step_B_tilde(ctx, rec, hs); break;
    }
  };
  auto O = [&](double hs) {
    with_draws(rec.state.p.size(), rng, [&](std::span<const double> z) {
      switch (flavor) {
        case Flavor::fixed: step_O(ctx, rec, hs, z); break;
        case Flavor::hat: step_O_hat(ctx, rec, hs, z); break;
        case Flavor::tilde: step_O_tilde(ctx, rec, hs, z); break;
      }
    });
  };

  const double hh = 0.5 * h;
  switch (scheme) {
    case SchemeId::BAOAB_FIXED:
    case SchemeId::BAOAB_HAT:
    case SchemeId::BAOAB_TILDE:
      B(hh), A(hh), O(h), A(hh), B(hh);
      break;
    case SchemeId::ABOBA_FIXED:
    case SchemeId::ABOBA_HAT:
    case SchemeId::ABOBA_TILDE:
      A(hh), B(hh), O(h), B(hh), A(hh);
      break;
    case SchemeId::OBABO_FIXED:
    case SchemeId::OBABO_HAT:
    case SchemeId::OBABO_TILDE:
      O(hh), B(hh), A(h), B(hh), O(hh);
      break;
    case SchemeId::SPV_FIXED:
    case SchemeId::SPV_IP:
      A(hh);
      with_draws(rec.state.p.size(), rng, [&](std::span<const double> z) { spv_core(ctx, rec, h, adaptive, z); });
      A(hh);
      break;
  }
  info.fp_iter_sum = tally.sum;
  info.fp_solves = tally.solves;
  info.fp_iter_max = tally.max;
  info.fp_last_diff = tally.last_diff;
  info.converged = tally.converged;
  return info;
}

std::string to_string(SchemeId id) {
  switch (id) {
    case SchemeId::BAOAB_FIXED: return "BAOAB_FIXED";
    case SchemeId::BAOAB_HAT: return "BAOAB_HAT";
    case SchemeId::BAOAB_TILDE: return "BAOAB_TILDE";
    case SchemeId::ABOBA_FIXED: return "ABOBA_FIXED";
    case SchemeId::ABOBA_HAT: return "ABOBA_HAT";
    case SchemeId::ABOBA_TILDE: return "ABOBA_TILDE";
    case SchemeId::OBABO_FIXED: return "OBABO_FIXED";
    case SchemeId::OBABO_HAT: return "OBABO_HAT";
    case SchemeId::OBABO_TILDE: return "OBABO_TILDE";
    case SchemeId::SPV_FIXED: return "SPV_FIXED";
    case SchemeId::SPV_IP: return "SPV_IP";
  }
  return "?";
}

const std::vector<SchemeId>& all_scheme_ids() {
  static const std::vector<SchemeId> ids{
      SchemeId::BAOAB_FIXED, SchemeId::BAOAB_HAT, SchemeId::BAOAB_TILDE, SchemeId::ABOBA_FIXED,
      SchemeId::ABOBA_HAT,   SchemeId::ABOBA_TILDE, SchemeId::OBABO_FIXED, SchemeId::OBABO_HAT,
      SchemeId::OBABO_TILDE, SchemeId::SPV_FIXED,   SchemeId::SPV_IP};
  return ids;
}

SchemeId parse_scheme_id(std::string_view name) {
  for (SchemeId id : all_scheme_ids())
    if (to_string(id) == name) return id;
  throw ValidationError("unknown splitting scheme '" + std::string(name) + "'");
}

bool is_adaptive(SchemeId id) { return flavor_of(id) != Flavor::fixed; }

bool requires_friction(SchemeId id) {
  return flavor_of(id) == Flavor::tilde || id == SchemeId::SPV_FIXED;
}

namespace {

class SplittingStepper final : public Stepper {
 public:
  SplittingStepper(SchemeId scheme, const SplitContext& ctx, double h) : scheme_(scheme), ctx_(ctx), h_(h) {}

  StepInfo step(PhaseState& s, RngStream& rng) override {
    if (s.p.empty()) s.p.assign(s.x.size(), 0.0);
    if (rec_.state.x != s.x) rec_.invalidate();
    rec_.state.x = s.x;
    rec_.state.p = s.p;
    const StepInfo info = compose(scheme_, ctx_, rec_, h_, rng);
    s.x = rec_.state.x;
    s.p = rec_.state.p;
    return info;
  }

 private:
  SchemeId scheme_;
  SplitContext ctx_;
  double h_;
  SplitStepRecord rec_;
};

}  // namespace

std::unique_ptr<Stepper> make_splitting_stepper(SchemeId scheme, const SplitContext& ctx, double h) {
  if (ctx.pot == nullptr) throw ValidationError("splitting stepper: potential is required");
  if (is_adaptive(scheme) && ctx.mon == nullptr) throw ValidationError("splitting stepper: monitor is required");
  if (requires_friction(scheme) && !(ctx.gamma > 0.0))
    throw ValidationError("sampler.gamma: scheme " + to_string(scheme) + " requires gamma > 0");
  return std::make_unique<SplittingStepper>(scheme, ctx, h);
}

}  // namespace adalang
