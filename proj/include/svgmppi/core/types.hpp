#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace svgmppi {

/// Row-major dynamic matrix. Row-major so that one sample's T x m sequence
/// is a contiguous row slice of a batch matrix.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatView = Eigen::Map<const Mat>;
using Vec = Eigen::VectorXd;

/// Thrown for invalid configuration values (dimensions, bounds, file schema).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Admissible control interval [lo, hi], applied elementwise.
struct ControlBounds {
  double lo = -0.4;
  double hi = 0.4;

  double clamp(double u) const { return u < lo ? lo : (u > hi ? hi : u); }
};

/// A T x m control input sequence (steering angles over the horizon).
class ControlSequence {
 public:
  ControlSequence() = default;
  ControlSequence(int horizon, int dim) : values_(Mat::Zero(horizon, dim)) {
    if (horizon < 1 || dim < 1) throw ConfigError("ControlSequence: T and m must be >= 1");
  }
  explicit ControlSequence(Mat values) : values_(std::move(values)) {}

  int horizon() const { return static_cast<int>(values_.rows()); }
  int dim() const { return static_cast<int>(values_.cols()); }

  Mat& values() { return values_; }
  const Mat& values() const { return values_; }

  double& operator()(int t, int i) { return values_(t, i); }
  double operator()(int t, int i) const { return values_(t, i); }

  MatView view() const { return MatView(values_.data(), values_.rows(), values_.cols()); }

  void clamp(const ControlBounds& bounds) {
    values_ = values_.cwiseMax(bounds.lo).cwiseMin(bounds.hi);
  }

  /// Receding-horizon warm start: drop the first step, repeat the last.
  ControlSequence shifted() const {
    Mat out(values_.rows(), values_.cols());
    const auto rows = values_.rows();
    if (rows > 1) out.topRows(rows - 1) = values_.bottomRows(rows - 1);
    out.row(rows - 1) = values_.row(rows - 1);
    return ControlSequence(std::move(out));
  }

  bool operator==(const ControlSequence& other) const {
    return values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols() && values_ == other.values_;
  }

 private:
  Mat values_;
};

/// Per-timestep diagonal covariance: variances (rad^2), one per (t, i).
/// Zero entries are permitted only as a degenerate test hook; validated
/// configuration paths require strictly positive variances.
class CovarianceSchedule {
 public:
  CovarianceSchedule() = default;
  explicit CovarianceSchedule(Mat variances) : var_(std::move(variances)) {
    if ((var_.array() < 0.0).any()) throw ConfigError("CovarianceSchedule: negative variance");
  }

  /// Constant schedule from a standard deviation (rad).
  static CovarianceSchedule constant_sigma(int horizon, int dim, double sigma) {
    return CovarianceSchedule(Mat::Constant(horizon, dim, sigma * sigma));
  }

  int horizon() const { return static_cast<int>(var_.rows()); }
  int dim() const { return static_cast<int>(var_.cols()); }

  const Mat& variances() const { return var_; }
  Mat& variances() { return var_; }
  double operator()(int t, int i) const { return var_(t, i); }

  bool strictly_positive() const { return (var_.array() > 0.0).all(); }

  void require_strictly_positive() const {
    if (!strictly_positive()) throw ConfigError("CovarianceSchedule: non-positive variance");
  }

  bool operator==(const CovarianceSchedule& other) const { return var_ == other.var_; }

 private:
  Mat var_;
};

/// K noised input sequences with their costs and importance weights.
/// Row k of `sequences` is sample k's T x m values flattened row-major.
struct SampleBatch {
  Mat sequences;  // K x (T*m)
  Vec costs;      // K
  Vec weights;    // K
  int horizon = 0;
  int dim = 0;

  int count() const { return static_cast<int>(sequences.rows()); }

  MatView sequence(int k) const {
    return MatView(sequences.row(k).data(), horizon, dim);
  }
};

/// Solver parameters shared by vanilla MPPI and the guided variant.
struct SolverConfig {
  int K = 1024;          // sample count
  int T = 15;            // horizon length
  int m = 1;             // input dimension
  double lambda = 0.1;   // temperature (> 0)
  ControlBounds u_bounds{};
  double sigma = 0.075;  // baseline sampling std dev (rad)
  std::uint64_t seed = 0;

  // Guide transport parameters.
  int guide_particles = 1;   // K_g
  int guide_iterations = 8;  // L
  int guide_samples = 32;    // N, Monte Carlo draws per transport iteration
  double guide_epsilon = 0.01;
  double guide_sigma = 0.1;   // perturbation std dev (rad)
  // Temperature for the transport weights and the fitted density. Mode
  // locations do not depend on the temperature, so the guide stage can run
  // hotter than the main softmax to keep its Monte Carlo estimates smooth.
  double guide_lambda = 1.0;
  double sigma_min = 0.01;   // adaptive-covariance clamp (rad)
  double sigma_max = 0.5;

  void validate() const {
    if (K < 1) throw ConfigError("solver.K must be >= 1");
    if (T < 1) throw ConfigError("solver.T must be >= 1");
    if (m < 1) throw ConfigError("solver input dimension must be >= 1");
    if (!(lambda > 0.0)) throw ConfigError("solver.lambda must be > 0");
    if (!(u_bounds.lo < u_bounds.hi)) throw ConfigError("solver input bounds must satisfy u_min < u_max");
    if (!(sigma > 0.0)) throw ConfigError("solver.sigma must be > 0");
    if (guide_particles < 1) throw ConfigError("solver.guide_particles must be >= 1");
    if (guide_iterations < 1) throw ConfigError("solver.guide_iterations must be >= 1");
    if (guide_samples < 1) throw ConfigError("solver.guide_samples must be >= 1");
    if (guide_epsilon < 0.0) throw ConfigError("solver.guide_epsilon must be >= 0");
    if (!(guide_sigma > 0.0)) throw ConfigError("solver.guide_sigma must be > 0");
    if (!(guide_lambda > 0.0)) throw ConfigError("solver.guide_lambda must be > 0");
    if (!(sigma_min > 0.0 && sigma_min <= sigma_max))
      throw ConfigError("solver sigma clamp must satisfy 0 < sigma_min <= sigma_max");
  }

  CovarianceSchedule baseline_covariance() const {
    return CovarianceSchedule::constant_sigma(T, m, sigma);
  }
};

/// Numeric-path diagnostics. These never throw; they record recoverable
/// conditions (underflow fallbacks, rejected samples) for inspection.
struct SolveDiagnostics {
  bool weight_underflow = false;  // all weights underflowed; uniform fallback used
  int nonfinite_costs = 0;        // evaluator returned a non-finite cost
  long evaluator_calls = 0;

  void merge(const SolveDiagnostics& other) {
    weight_underflow = weight_underflow || other.weight_underflow;
    nonfinite_costs += other.nonfinite_costs;
    evaluator_calls += other.evaluator_calls;
  }
};

}  // namespace svgmppi
