#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "svgmppi/core/sampling.hpp"
#include "svgmppi/core/types.hpp"
#include "svgmppi/core/weights.hpp"

namespace svgmppi {

/// Cost oracle contract: `double operator()(const MatView&) const`, safe for
/// concurrent invocation. The view is one T x m input sequence.
template <typename F>
concept CostOracle = requires(const F& f, const MatView& v) {
  { f(v) } -> std::convertible_to<double>;
};

struct MppiResult {
  ControlSequence solution;       // U_t
  ControlSequence sampling_mean;  // U_hat, the shifted previous solution
  double min_cost = 0.0;
  SolveDiagnostics diag;
};

/// One closed-form MPPI update: sample around the time-shifted previous
/// solution, evaluate, weight, average. No iterative refinement.
///
/// `u_nominal` anchors the weight cross term; pass the sampling mean itself
/// to recover the vanilla solver (the cross term vanishes).
/// `cycle` must advance between control steps so each solve draws fresh noise.
template <CostOracle F>
MppiResult mppi_solve(const ControlSequence& u_prev, const CovarianceSchedule& cov,
                      const ControlSequence& u_nominal, const F& evaluator,
                      const SolverConfig& cfg, std::uint64_t cycle) {
  MppiResult result;
  result.sampling_mean = u_prev.shifted();
  result.sampling_mean.clamp(cfg.u_bounds);

  const auto stream = rng::make_stream(cfg.seed, rng::Purpose::kSampling, cycle);
  SampleBatch batch = sample_inputs(result.sampling_mean, cov, cfg.K, stream, cfg.u_bounds);

  int nonfinite = 0;
#pragma omp parallel for schedule(static) reduction(+ : nonfinite)
  for (int k = 0; k < batch.count(); ++k) {
    const double cost = evaluator(batch.sequence(k));
    if (std::isfinite(cost)) {
      batch.costs(k) = cost;
    } else {
      // Exclude the sample: +inf cost maps to zero weight below.
      batch.costs(k) = std::numeric_limits<double>::infinity();
      ++nonfinite;
    }
  }
  result.diag.nonfinite_costs = nonfinite;
  result.diag.evaluator_calls = batch.count();

  compute_weights(batch, result.sampling_mean, u_nominal, cov, cfg.lambda, &result.diag);
  result.min_cost = batch.costs.minCoeff();
  result.solution = weighted_average(batch, cfg.u_bounds);
  return result;
}

}  // namespace svgmppi
