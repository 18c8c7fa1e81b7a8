#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "svgmppi/core/solver.hpp"
#include "svgmppi/guide/svgd.hpp"

namespace svgmppi {

enum class SolverKind { kMppi, kSvgMppi };

/// Receding-horizon controller state machine. One instance drives one
/// vehicle: call solve() once per control period with a cost oracle bound to
/// the current state. Externally synchronized (one solve at a time); the
/// heavy inner loops parallelize internally.
///
/// The guided variant transports guide particles, anchors the weight
/// function to the picked nominal sequence (use_nominal) and samples with
/// the fitted covariance schedule (use_adaptive_cov). With both flags off it
/// reduces to — and matches bit-for-bit — the vanilla solver.
class Controller {
 public:
  struct Output {
    ControlSequence solution;
    CovarianceSchedule cov_used;
    double min_cost = 0.0;
    std::optional<ModeEstimate> mode;
    SolveDiagnostics diag;
    GuideDiagnostics guide_diag;
  };

  Controller(const SolverConfig& cfg, SolverKind kind, bool use_nominal = true,
             bool use_adaptive_cov = true)
      : cfg_(cfg), kind_(kind),
        use_nominal_(kind == SolverKind::kSvgMppi && use_nominal),
        use_adaptive_cov_(kind == SolverKind::kSvgMppi && use_adaptive_cov),
        baseline_(cfg.baseline_covariance()) {
    cfg_.validate();
    reset();
  }

  const SolverConfig& config() const { return cfg_; }
  bool guide_active() const { return use_nominal_ || use_adaptive_cov_; }
  std::uint64_t cycle() const { return cycle_; }
  const ControlSequence& previous_solution() const { return u_prev_; }

  /// Clears warm-start state (fresh start or post-collision reset). The
  /// cycle counter keeps advancing so later draws stay fresh.
  void reset() {
    u_prev_ = ControlSequence(cfg_.T, cfg_.m);
    nominal_prev_ = u_prev_;
    if (guide_active()) init_particles();
  }

  template <CostOracle F>
  Output solve(const F& evaluator) {
    Output out;
    ControlSequence u_hat = u_prev_.shifted();
    u_hat.clamp(cfg_.u_bounds);

    ControlSequence nominal = u_hat;
    CovarianceSchedule cov = baseline_;

    if (guide_active()) {
      shift_particles();
      GuideContext ctx;
      ctx.u_hat = u_hat;
      ctx.qstar_nominal = nominal_prev_;
      ctx.qstar_cov = baseline_;
      ctx.guide_cov = CovarianceSchedule::constant_sigma(cfg_.T, cfg_.m, cfg_.guide_sigma);
      ctx.fallback_cov = baseline_;
      ctx.lambda = cfg_.guide_lambda;
      ctx.epsilon = cfg_.guide_epsilon;
      ctx.iterations = cfg_.guide_iterations;
      ctx.mc_samples = cfg_.guide_samples;
      ctx.sigma_min = cfg_.sigma_min;
      ctx.sigma_max = cfg_.sigma_max;
      ctx.bounds = cfg_.u_bounds;
      ctx.seed = cfg_.seed;
      ctx.cycle = cycle_;

      GuideStepResult gs = guide_step(particles_, ctx, evaluator);
      particles_ = std::move(gs.particles);
      nominal_prev_ = gs.mode.nominal;
      if (use_nominal_) nominal = gs.mode.nominal;
      if (use_adaptive_cov_) cov = gs.mode.cov;
      out.guide_diag = gs.diag;
      out.mode = std::move(gs.mode);
    }

    MppiResult res = mppi_solve(u_prev_, cov, nominal, evaluator, cfg_, cycle_);
    u_prev_ = res.solution;
    ++cycle_;

    out.solution = std::move(res.solution);
    out.cov_used = std::move(cov);
    out.min_cost = res.min_cost;
    out.diag = res.diag;
    return out;
  }

 private:
  void init_particles() {
    particles_.particles.assign(cfg_.guide_particles, ControlSequence(cfg_.T, cfg_.m));
    const auto guide_cov = CovarianceSchedule::constant_sigma(cfg_.T, cfg_.m, cfg_.guide_sigma);
    const Mat sigma = guide_cov.variances().cwiseSqrt();
    for (int k = 0; k < cfg_.guide_particles; ++k) {
      const auto stream = rng::make_stream(cfg_.seed, rng::Purpose::kGuideInit, cycle_,
                                           static_cast<std::uint64_t>(k));
      ControlSequence base = u_prev_.shifted();
      Mat noise(cfg_.T, cfg_.m);
      rng::fill_normals(stream, 0, noise.data(), cfg_.T * cfg_.m);
      base.values() += sigma.cwiseProduct(noise);
      base.clamp(cfg_.u_bounds);
      particles_.particles[k] = std::move(base);
    }
  }

  void shift_particles() {
    for (auto& particle : particles_.particles) particle = particle.shifted();
  }

  SolverConfig cfg_;
  SolverKind kind_;
  bool use_nominal_;
  bool use_adaptive_cov_;
  CovarianceSchedule baseline_;

  ControlSequence u_prev_;
  ControlSequence nominal_prev_;
  GuideParticleSet particles_;
  std::uint64_t cycle_ = 0;
};

}  // namespace svgmppi
