#pragma once

#include <cmath>

#include "svgmppi/core/rng.hpp"
#include "svgmppi/core/types.hpp"

namespace svgmppi {

/// Draws K i.i.d. sequences with element (k, t, i) ~ N(mean(t,i), cov(t,i)),
/// clamped to the control bounds. Sample k is a pure function of
/// (stream, k), so batches are identical for any thread count.
///
/// Negative variances are rejected; zero variance is a degenerate test hook
/// that reproduces the mean exactly.
template <typename BoundsT = ControlBounds>
inline SampleBatch sample_inputs(const ControlSequence& mean, const CovarianceSchedule& cov,
                                 int count, const rng::Stream& stream,
                                 const BoundsT& bounds = BoundsT{}) {
  if (count < 1) throw ConfigError("sample_inputs: K must be >= 1");
  const int horizon = mean.horizon();
  const int dim = mean.dim();
  if (cov.horizon() != horizon || cov.dim() != dim)
    throw ConfigError("sample_inputs: covariance shape does not match mean");

  const int n = horizon * dim;
  Mat sigma = cov.variances().cwiseSqrt();
  const double* mu = mean.values().data();
  const double* sd = sigma.data();

  SampleBatch batch;
  batch.sequences.resize(count, n);
  batch.costs = Vec::Zero(count);
  batch.weights = Vec::Zero(count);
  batch.horizon = horizon;
  batch.dim = dim;

#pragma omp parallel for schedule(static)
  for (int k = 0; k < count; ++k) {
    double* row = batch.sequences.row(k).data();
    rng::fill_normals(stream, static_cast<std::uint64_t>(k), row, n);
    for (int e = 0; e < n; ++e) {
      row[e] = bounds.clamp(mu[e] + sd[e] * row[e]);
    }
  }
  return batch;
}

}  // namespace svgmppi
