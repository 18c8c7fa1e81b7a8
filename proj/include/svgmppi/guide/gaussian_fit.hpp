#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "svgmppi/core/types.hpp"

namespace svgmppi {

/// Lower bound applied to density values before taking logs in the fit.
inline constexpr double kQstarFloor = 1e-30;

/// History of one guide particle's transport: L stored sequences, the
/// unnormalized optimal-density value at each, and the raw sequence cost at
/// each (cached so later stages need no re-evaluation).
struct TransportTrajectory {
  std::vector<ControlSequence> states;  // L entries; states[0] is the initial particle
  Vec qstar_values;                     // L, floored at kQstarFloor
  Vec costs;                            // L, S(states[l])

  int length() const { return static_cast<int>(states.size()); }
};

struct FitDiagnostics {
  int fallback_entries = 0;  // (t, i) entries that used the fallback variance
};

namespace detail {

/// Fits log b ~ z0 + z1 a + z2 a^2 by b^2-weighted least squares and returns
/// the standard deviation sqrt(-1 / (2 z2)), or a negative value when the
/// system is singular or z2 is not negative.
inline double fit_sigma_1d(const double* a, const double* b2, const double* b2_logb, int n) {
  Eigen::Matrix3d lhs = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    const double a1 = a[i];
    const double a2 = a1 * a1;
    lhs(0, 0) += b2[i];
    lhs(0, 1) += b2[i] * a1;
    lhs(0, 2) += b2[i] * a2;
    lhs(1, 2) += b2[i] * a2 * a1;
    lhs(2, 2) += b2[i] * a2 * a2;
    rhs(0) += b2_logb[i];
    rhs(1) += b2_logb[i] * a1;
    rhs(2) += b2_logb[i] * a2;
  }
  lhs(1, 0) = lhs(0, 1);
  lhs(1, 1) = lhs(0, 2);
  lhs(2, 0) = lhs(0, 2);
  lhs(2, 1) = lhs(1, 2);

  const Eigen::FullPivLU<Eigen::Matrix3d> lu(lhs);
  if (!lu.isInvertible()) return -1.0;
  const Eigen::Vector3d z = lu.solve(rhs);
  // Curvature must be negative beyond roundoff of the solve, otherwise a
  // flat density (constant b) would alias into an enormous sigma.
  const double curvature_tol = 1e-12 * (1.0 + std::fabs(z(0)) + std::fabs(z(1)));
  if (!(z(2) < -curvature_tol) || !std::isfinite(z(2))) return -1.0;
  return std::sqrt(-1.0 / (2.0 * z(2)));
}

}  // namespace detail

/// Estimates a per-timestep variance schedule from a transport trajectory by
/// fitting a Gaussian to (state value, density) pairs, elementwise per
/// (t, i). The fitted standard deviation is clamped to [sigma_min, sigma_max]
/// (rad) and squared into the schedule.
///
/// Degenerate entries — fewer than 3 stored states, a singular normal
/// system (constant values), or a non-negative curvature coefficient (flat
/// density) — fall back to the corresponding entry of `fallback`.
inline CovarianceSchedule fit_covariance(const TransportTrajectory& traj, double sigma_min,
                                         double sigma_max, const CovarianceSchedule& fallback,
                                         FitDiagnostics* diag = nullptr) {
  const int horizon = fallback.horizon();
  const int dim = fallback.dim();
  Mat variances = fallback.variances();

  const int length = traj.length();
  if (length < 3) {
    if (diag != nullptr) diag->fallback_entries += horizon * dim;
    return CovarianceSchedule(std::move(variances));
  }

  // The fit is invariant to a positive rescaling of b (only the constant
  // coefficient shifts), so b is normalized by its maximum first; otherwise
  // the b^2 weights underflow when the density spans many orders of
  // magnitude along the trajectory.
  const double b_scale = std::max(traj.qstar_values.maxCoeff(), kQstarFloor);
  std::vector<double> b2(length), b2_logb(length), a(length);
  for (int l = 0; l < length; ++l) {
    const double b = std::max(traj.qstar_values(l), kQstarFloor) / b_scale;
    b2[l] = b * b;
    b2_logb[l] = b2[l] * std::log(b);
  }

  int fallbacks = 0;
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < dim; ++i) {
      for (int l = 0; l < length; ++l) a[l] = traj.states[l](t, i);
      const double sigma = detail::fit_sigma_1d(a.data(), b2.data(), b2_logb.data(), length);
      if (sigma > 0.0 && std::isfinite(sigma)) {
        const double clamped = std::min(std::max(sigma, sigma_min), sigma_max);
        variances(t, i) = clamped * clamped;
      } else {
        ++fallbacks;
      }
    }
  }
  if (diag != nullptr) diag->fallback_entries += fallbacks;
  return CovarianceSchedule(std::move(variances));
}

}  // namespace svgmppi
