#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "svgmppi/core/rng.hpp"
#include "svgmppi/core/solver.hpp"
#include "svgmppi/core/types.hpp"
#include "svgmppi/guide/gaussian_fit.hpp"

namespace svgmppi {

/// The small particle set transported toward a peak of the optimal action
/// distribution. Persists across control cycles.
struct GuideParticleSet {
  std::vector<ControlSequence> particles;

  int count() const { return static_cast<int>(particles.size()); }
};

/// Target-mode summary: the transported particle with the lowest sequence
/// cost, and the covariance schedule fitted from its transport trajectory.
struct ModeEstimate {
  ControlSequence nominal;
  CovarianceSchedule cov;
  int k_star = 0;
};

struct GuideDiagnostics {
  bool gradient_underflow = false;  // all Monte Carlo weights underflowed
  int rejected_updates = 0;         // non-finite transport updates skipped
  long evaluator_calls = 0;
  int fit_fallback_entries = 0;

  void merge(const GuideDiagnostics& other) {
    gradient_underflow = gradient_underflow || other.gradient_underflow;
    rejected_updates += other.rejected_updates;
    evaluator_calls += other.evaluator_calls;
    fit_fallback_entries += other.fit_fallback_entries;
  }
};

namespace detail {

/// Monte Carlo estimate of the ascent direction of log E[w] at `center`,
/// over `n_perturb` Gaussian perturbations. Returns the RKL-bound gradient,
/// i.e. minus that estimate; descending along the return value reduces the
/// bound. The weight exponents are shifted by their maximum before
/// exponentiation, which leaves the ratio estimator unchanged.
template <CostOracle F>
Mat surrogate_gradient_impl(const ControlSequence& center, const ControlSequence& u_hat,
                            const ControlSequence& u_nominal, const CovarianceSchedule& cov_g,
                            int n_perturb, double lambda, const F& evaluator,
                            const rng::Stream& stream, GuideDiagnostics* diag) {
  const int horizon = center.horizon();
  const int dim = center.dim();
  const int n = horizon * dim;
  Mat gradient = Mat::Zero(horizon, dim);
  if (n_perturb < 1) return gradient;

  const Mat sigma_g = cov_g.variances().cwiseSqrt();
  const double* mu = center.values().data();
  const double* sd = sigma_g.data();
  const double* var = cov_g.variances().data();

  Vec cross(n);
  {
    const double* h = u_hat.values().data();
    const double* g = u_nominal.values().data();
    for (int e = 0; e < n; ++e) {
      const double diff = h[e] - g[e];
      cross(e) = diff == 0.0 ? 0.0 : diff / var[e];
    }
  }

  Mat perturbed(n_perturb, n);
  Vec exponents(n_perturb);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_perturb; ++i) {
    double* row = perturbed.row(i).data();
    rng::fill_normals(stream, static_cast<std::uint64_t>(i), row, n);
    double quad = 0.0;
    for (int e = 0; e < n; ++e) {
      row[e] = mu[e] + sd[e] * row[e];
      quad += cross(e) * row[e];
    }
    const double cost = evaluator(MatView(row, horizon, dim));
    exponents(i) = std::isfinite(cost) ? -cost / lambda - quad
                                       : -std::numeric_limits<double>::infinity();
  }
  if (diag != nullptr) diag->evaluator_calls += n_perturb;

  const double shift = exponents.maxCoeff();
  if (!std::isfinite(shift)) {
    if (diag != nullptr) diag->gradient_underflow = true;
    return gradient;
  }

  double weight_sum = 0.0;
  Vec score = Vec::Zero(n);
  for (int i = 0; i < n_perturb; ++i) {
    const double w = std::exp(exponents(i) - shift);
    weight_sum += w;
    for (int e = 0; e < n; ++e) score(e) += w * (perturbed(i, e) - mu[e]) / var[e];
  }
  if (!(weight_sum > 0.0)) {
    if (diag != nullptr) diag->gradient_underflow = true;
    return gradient;
  }
  for (int t = 0; t < horizon; ++t)
    for (int i = 0; i < dim; ++i) gradient(t, i) = -score(t * dim + i) / weight_sum;
  return gradient;
}

}  // namespace detail

/// Stochastic surrogate gradient of the RKL upper bound at `particle`,
/// estimated from N i.i.d. perturbations ~ N(particle, cov_g). The update
/// direction that reduces the bound is the negative of the return value.
template <CostOracle F>
Mat surrogate_gradient(const ControlSequence& particle, const ControlSequence& u_hat,
                       const ControlSequence& u_nominal, const CovarianceSchedule& cov_g,
                       int mc_samples, double lambda, const F& evaluator,
                       const rng::Stream& stream, GuideDiagnostics* diag = nullptr) {
  if (mc_samples < 1) throw ConfigError("surrogate_gradient: N must be >= 1");
  cov_g.require_strictly_positive();
  return detail::surrogate_gradient_impl(particle, u_hat, u_nominal, cov_g, mc_samples, lambda,
                                         evaluator, stream, diag);
}

/// Everything the guide stage needs from the surrounding control cycle.
///
/// The transport gradient weights are anchored at u_hat (no nominal cross
/// term): the nominal anchoring belongs to the final averaging stage, and
/// feeding the previous nominal back into the transport weights lets a bad
/// pick amplify itself across cycles. The q* values recorded for the
/// covariance fit keep the previous nominal in their prior factor.
struct GuideContext {
  ControlSequence u_hat;           // shifted previous solution
  ControlSequence qstar_nominal;   // previous cycle's nominal, q* prior mean
  CovarianceSchedule qstar_cov;    // q* prior covariance (the fixed baseline)
  CovarianceSchedule guide_cov;    // perturbation covariance Sigma_g
  CovarianceSchedule fallback_cov; // fit fallback (the fixed baseline)
  double lambda = 0.1;
  double epsilon = 0.01;
  int iterations = 8;     // L
  int mc_samples = 32;    // N: per-iteration evaluator budget, center included
  double sigma_min = 0.01;
  double sigma_max = 0.5;
  ControlBounds bounds{};
  std::uint64_t seed = 0;
  std::uint64_t cycle = 0;
};

struct TransportResult {
  GuideParticleSet particles;
  std::vector<TransportTrajectory> trajectories;
  GuideDiagnostics diag;
};

/// Transports each guide particle downhill on the RKL bound.
///
/// Runs L iterations per particle. Iteration l evaluates the particle itself
/// (recording states[l], its cost, and its unnormalized optimal-density
/// value) plus N-1 perturbations for the gradient; the update is applied for
/// l < L-1, so the returned particle equals states[L-1]. Each iteration
/// spends exactly N evaluator calls, L*K_g*N for the whole transport.
/// Particles are clamped to the control bounds after every update; a
/// non-finite update is rejected and counted.
template <CostOracle F>
TransportResult transport(const GuideParticleSet& particles, const GuideContext& ctx,
                          const F& evaluator) {
  if (ctx.iterations < 1) throw ConfigError("transport: L must be >= 1");
  if (ctx.mc_samples < 1) throw ConfigError("transport: N must be >= 1");

  TransportResult result;
  result.particles.particles.resize(particles.count());
  result.trajectories.resize(particles.count());

  const int n = ctx.u_hat.horizon() * ctx.u_hat.dim();
  const double* qstar_mean = ctx.qstar_nominal.values().data();
  const double* qstar_var = ctx.qstar_cov.variances().data();

  for (int k = 0; k < particles.count(); ++k) {
    ControlSequence current = particles.particles[k];
    TransportTrajectory traj;
    traj.states.reserve(ctx.iterations);
    traj.qstar_values = Vec::Zero(ctx.iterations);
    traj.costs = Vec::Zero(ctx.iterations);

    for (int l = 0; l < ctx.iterations; ++l) {
      const double cost = evaluator(current.view());
      ++result.diag.evaluator_calls;
      traj.states.push_back(current);
      traj.costs(l) = cost;

      // Unnormalized q*: exp(-S/lambda) times the Gaussian prior factor
      // around the previous nominal; constant normalizers dropped.
      double log_prior = 0.0;
      const double* v = current.values().data();
      for (int e = 0; e < n; ++e) {
        const double d = v[e] - qstar_mean[e];
        log_prior -= 0.5 * d * d / qstar_var[e];
      }
      const double log_qstar = -cost / ctx.lambda + log_prior;
      traj.qstar_values(l) = std::max(std::exp(log_qstar), kQstarFloor);

      const auto stream =
          rng::make_stream(ctx.seed, rng::Purpose::kGuidePerturb, ctx.cycle,
                           static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(l));
      const Mat gradient = detail::surrogate_gradient_impl(
          current, ctx.u_hat, ctx.u_hat, ctx.guide_cov, ctx.mc_samples - 1, ctx.lambda,
          evaluator, stream, &result.diag);

      if (l + 1 < ctx.iterations) {
        if (gradient.allFinite()) {
          current.values() -= ctx.epsilon * gradient;
          current.clamp(ctx.bounds);
        } else {
          ++result.diag.rejected_updates;
        }
      }
    }

    result.particles.particles[k] = current;
    result.trajectories[k] = std::move(traj);
  }
  return result;
}

/// Picks the transported particle with the lowest sequence cost (ties break
/// toward the lowest index). Evaluates each particle once.
template <CostOracle F>
ModeEstimate pick_nominal(const GuideParticleSet& particles, const F& evaluator,
                          GuideDiagnostics* diag = nullptr) {
  if (particles.count() < 1) throw ConfigError("pick_nominal: empty particle set");
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int k = 0; k < particles.count(); ++k) {
    const double cost = evaluator(particles.particles[k].view());
    if (diag != nullptr) ++diag->evaluator_calls;
    if (cost < best_cost) {
      best_cost = cost;
      best = k;
    }
  }
  ModeEstimate mode;
  mode.nominal = particles.particles[best];
  mode.k_star = best;
  return mode;
}

/// Index of the lowest final-state cost among cached trajectories.
inline int pick_nominal_index(const std::vector<TransportTrajectory>& trajectories) {
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(trajectories.size()); ++k) {
    const double cost = trajectories[k].costs(trajectories[k].length() - 1);
    if (cost < best_cost) {
      best_cost = cost;
      best = k;
    }
  }
  return best;
}

struct GuideStepResult {
  ModeEstimate mode;
  GuideParticleSet particles;
  std::vector<TransportTrajectory> trajectories;
  GuideDiagnostics diag;
};

/// Full guide stage: transport, pick the target mode, fit the adaptive
/// covariance from the chosen trajectory. Nominal selection and the fit both
/// reuse costs cached during transport, so the evaluator-call total stays at
/// L * K_g * N.
template <CostOracle F>
GuideStepResult guide_step(const GuideParticleSet& particles, const GuideContext& ctx,
                           const F& evaluator) {
  GuideStepResult result;
  TransportResult tr = transport(particles, ctx, evaluator);
  result.diag = tr.diag;
  result.particles = std::move(tr.particles);
  result.trajectories = std::move(tr.trajectories);

  const int k_star = pick_nominal_index(result.trajectories);
  FitDiagnostics fit_diag;
  CovarianceSchedule fitted = fit_covariance(result.trajectories[k_star], ctx.sigma_min,
                                             ctx.sigma_max, ctx.fallback_cov, &fit_diag);
  result.diag.fit_fallback_entries += fit_diag.fallback_entries;

  result.mode.nominal = result.particles.particles[k_star];
  result.mode.cov = std::move(fitted);
  result.mode.k_star = k_star;
  return result;
}

}  // namespace svgmppi
