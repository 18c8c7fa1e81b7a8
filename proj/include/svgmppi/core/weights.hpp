#pragma once

#include <cmath>
#include <limits>

#include "svgmppi/core/types.hpp"

namespace svgmppi {

/// Fills batch.weights with normalized importance weights
///
///   w_k ∝ exp( -(S_k - rho)/lambda - sum_t (u_hat_t - u_nom_t)^T Sigma_t^{-1} v_t )
///
/// where rho = min_k S_k is subtracted before exponentiation for numerical
/// stability. If every weight underflows to zero (or every cost is
/// non-finite), the weights fall back to uniform and the underflow flag is
/// raised.
inline void compute_weights(SampleBatch& batch, const ControlSequence& u_hat,
                            const ControlSequence& u_nominal, const CovarianceSchedule& cov,
                            double lambda, SolveDiagnostics* diag = nullptr) {
  const int count = batch.count();
  const int n = batch.horizon * batch.dim;
  if (!(lambda > 0.0)) throw ConfigError("compute_weights: lambda must be > 0");
  if (u_hat.horizon() != batch.horizon || u_nominal.horizon() != batch.horizon)
    throw ConfigError("compute_weights: sequence shape does not match batch");

  // Per-element factor of the cross term; zero difference contributes zero
  // even for the zero-variance test hook.
  Vec cross(n);
  {
    const double* h = u_hat.values().data();
    const double* g = u_nominal.values().data();
    const double* var = cov.variances().data();
    for (int e = 0; e < n; ++e) {
      const double diff = h[e] - g[e];
      cross(e) = diff == 0.0 ? 0.0 : diff / var[e];
    }
  }

  const double rho = batch.costs.minCoeff();
  Vec exponents(count);
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < count; ++k) {
    const double quad = batch.sequences.row(k).dot(cross.transpose());
    const double exponent = -(batch.costs(k) - rho) / lambda - quad;
    exponents(k) = std::isfinite(exponent) ? exponent
                                           : -std::numeric_limits<double>::infinity();
    max_exponent = std::max(max_exponent, exponents(k));
  }
  // A large cross term can push every exponent outside exp()'s range even
  // after the rho shift (below -700 underflows; above +700 overflows to inf
  // and the weight is dropped). Shifting by the maximum exponent leaves the
  // normalized weights unchanged, so it is applied only in those regimes to
  // keep the common path identical to the rho-shifted form.
  const double rescue =
      (max_exponent < -700.0 || max_exponent > 700.0) && std::isfinite(max_exponent)
          ? max_exponent
          : 0.0;

  double sum = 0.0;
  for (int k = 0; k < count; ++k) {
    const double w = std::exp(exponents(k) - rescue);
    batch.weights(k) = std::isfinite(w) ? w : 0.0;
    sum += batch.weights(k);
  }

  if (!(sum > 0.0) || !std::isfinite(sum)) {
    batch.weights.setConstant(1.0 / count);
    if (diag != nullptr) diag->weight_underflow = true;
    return;
  }
  batch.weights /= sum;
}

/// Weighted average of the batch sequences, clamped to the control bounds.
/// The reduction is a fixed-order matrix-vector product, so the result does
/// not depend on thread count.
inline ControlSequence weighted_average(const SampleBatch& batch, const ControlBounds& bounds) {
  Eigen::RowVectorXd flat = batch.weights.transpose() * batch.sequences;
  Mat values(batch.horizon, batch.dim);
  for (int t = 0; t < batch.horizon; ++t)
    for (int i = 0; i < batch.dim; ++i) values(t, i) = flat(t * batch.dim + i);
  ControlSequence out(std::move(values));
  out.clamp(bounds);
  return out;
}

}  // namespace svgmppi
