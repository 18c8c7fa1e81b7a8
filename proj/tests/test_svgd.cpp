#include "svgmppi/guide/svgd.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <vector>

namespace svgmppi {
namespace {

ControlSequence constant_sequence(int horizon, double value) {
  ControlSequence seq(horizon, 1);
  seq.values().setConstant(value);
  return seq;
}

struct QuadraticCost {
  double target = 0.0;
  double operator()(const MatView& seq) const {
    double s = 0.0;
    for (int t = 0; t < seq.rows(); ++t) {
      const double d = seq(t, 0) - target;
      s += d * d;
    }
    return s;
  }
};

// Counts evaluator invocations; the counter is the only mutable state.
template <typename F>
struct Counting {
  F fn;
  mutable std::atomic<long> calls{0};
  double operator()(const MatView& seq) const {
    calls.fetch_add(1, std::memory_order_relaxed);
    return fn(seq);
  }
};

GuideContext make_context(int horizon, double lambda = 0.5) {
  GuideContext ctx;
  ctx.u_hat = ControlSequence(horizon, 1);
  ctx.qstar_nominal = ControlSequence(horizon, 1);
  ctx.qstar_cov = CovarianceSchedule::constant_sigma(horizon, 1, 0.1);
  ctx.guide_cov = CovarianceSchedule::constant_sigma(horizon, 1, 0.1);
  ctx.fallback_cov = CovarianceSchedule::constant_sigma(horizon, 1, 0.075);
  ctx.lambda = lambda;
  ctx.bounds = ControlBounds{-1.0, 1.0};
  ctx.seed = 5;
  ctx.cycle = 0;
  return ctx;
}

TEST(SurrogateGradient, SingleSampleWeightsCancel) {
  const int horizon = 6;
  const auto particle = constant_sequence(horizon, 0.1);
  const auto cov_g = CovarianceSchedule::constant_sigma(horizon, 1, 0.2);
  const auto stream = rng::make_stream(9, rng::Purpose::kTest);

  const auto grad = surrogate_gradient(particle, particle, particle, cov_g, 1, 0.5,
                                       QuadraticCost{0.0}, stream);

  // Reconstruct the single perturbation the estimator drew.
  Mat noise(horizon, 1);
  rng::fill_normals(stream, 0, noise.data(), horizon);
  for (int t = 0; t < horizon; ++t) {
    const double v = 0.1 + 0.2 * noise(t, 0);
    EXPECT_NEAR(grad(t, 0), -(v - 0.1) / 0.04, 1e-12) << "t=" << t;
  }
}

TEST(SurrogateGradient, ConstantCostGivesPureNoiseGradient) {
  // With a constant evaluator every weight is equal, so the gradient is an
  // average of N/sigma_g-scale noise terms. Mean norm over repeats stays
  // within 5x the analytic Monte Carlo scale sqrt(n) / (sigma_g sqrt(N)).
  const int horizon = 8;
  const int n_mc = 16;
  const double sigma_g = 0.1;
  const auto particle = constant_sequence(horizon, 0.0);
  const auto cov_g = CovarianceSchedule::constant_sigma(horizon, 1, sigma_g);
  const auto flat = [](const MatView&) { return 1.25; };

  double norm_sum = 0.0;
  const int repeats = 1000;
  for (int r = 0; r < repeats; ++r) {
    const auto stream = rng::make_stream(100 + r, rng::Purpose::kTest);
    const auto grad =
        surrogate_gradient(particle, particle, particle, cov_g, n_mc, 0.5, flat, stream);
    norm_sum += grad.norm();
  }
  const double expected_scale = std::sqrt(static_cast<double>(horizon)) /
                                (sigma_g * std::sqrt(static_cast<double>(n_mc)));
  EXPECT_LT(norm_sum / repeats, 5.0 * expected_scale);
  EXPECT_GT(norm_sum / repeats, 0.1 * expected_scale);
}

// log E[w] estimated with the same fixed perturbation set the surrogate
// estimator consumes (common random numbers).
double log_mean_weight(const ControlSequence& center, const CovarianceSchedule& cov_g,
                       int n_mc, double lambda, const rng::Stream& stream) {
  const int horizon = center.horizon();
  double sum = 0.0;
  Mat noise(horizon, 1);
  for (int i = 0; i < n_mc; ++i) {
    rng::fill_normals(stream, i, noise.data(), horizon);
    double cost = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const double v = center(t, 0) + std::sqrt(cov_g(t, 0)) * noise(t, 0);
      cost += v * v;
    }
    sum += std::exp(-cost / lambda);
  }
  return std::log(sum / n_mc);
}

TEST(SurrogateGradient, MatchesFiniteDifferenceOfLogMeanWeight) {
  const int horizon = 8;
  const int n_mc = 10000;
  const double lambda = 0.5;
  const auto cov_g = CovarianceSchedule::constant_sigma(horizon, 1, 0.1);
  ControlSequence center(horizon, 1);
  for (int t = 0; t < horizon; ++t) center(t, 0) = 0.05 + 0.02 * t;

  const auto stream = rng::make_stream(77, rng::Purpose::kTest);
  const auto grad = surrogate_gradient(center, center, center, cov_g, n_mc, lambda,
                                       QuadraticCost{0.0}, stream);

  const double h = 1e-4;
  Vec fd(horizon), sg(horizon);
  for (int t = 0; t < horizon; ++t) {
    ControlSequence plus = center, minus = center;
    plus(t, 0) += h;
    minus(t, 0) -= h;
    fd(t) = (log_mean_weight(plus, cov_g, n_mc, lambda, stream) -
             log_mean_weight(minus, cov_g, n_mc, lambda, stream)) /
            (2.0 * h);
    sg(t) = -grad(t, 0);  // ascent direction of log E[w]
  }
  const double cosine = fd.dot(sg) / (fd.norm() * sg.norm());
  EXPECT_GT(cosine, 0.9);
}

TEST(SurrogateGradient, AllWeightsUnderflowGivesZeroAndFlag) {
  const int horizon = 4;
  const auto particle = constant_sequence(horizon, 0.0);
  const auto cov_g = CovarianceSchedule::constant_sigma(horizon, 1, 0.1);
  const auto poisoned = [](const MatView&) { return std::numeric_limits<double>::infinity(); };
  GuideDiagnostics diag;
  const auto grad = surrogate_gradient(particle, particle, particle, cov_g, 8, 0.5, poisoned,
                                       rng::make_stream(3, rng::Purpose::kTest), &diag);
  EXPECT_TRUE(diag.gradient_underflow);
  EXPECT_EQ(grad.norm(), 0.0);
}

TEST(SurrogateGradient, PointsDownhillOnQuadratic) {
  // Particle displaced from the optimum; û = ũ. The descent step -gradient
  // must project positively onto the known downhill direction in >= 90% of
  // seeded trials.
  const int horizon = 4;
  const auto cov_g = CovarianceSchedule::constant_sigma(horizon, 1, 0.1);
  const auto particle = constant_sequence(horizon, 0.3);  // optimum at 0
  int downhill = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const auto grad =
        surrogate_gradient(particle, particle, particle, cov_g, 10000, 0.5, QuadraticCost{0.0},
                           rng::make_stream(trial, rng::Purpose::kTest));
    double projection = 0.0;  // descent = -grad; downhill direction = -1 per element
    for (int t = 0; t < horizon; ++t) projection += (-grad(t, 0)) * (-1.0);
    if (projection > 0.0) ++downhill;
  }
  EXPECT_GE(downhill, 90);
}

TEST(Transport, ZeroStepSizeKeepsParticles) {
  const int horizon = 5;
  auto ctx = make_context(horizon);
  ctx.epsilon = 0.0;
  ctx.iterations = 4;
  ctx.mc_samples = 8;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.2)};
  const auto result = transport(particles, ctx, QuadraticCost{0.0});
  EXPECT_TRUE(result.particles.particles[0] == particles.particles[0]);
  for (const auto& state : result.trajectories[0].states)
    EXPECT_TRUE(state == particles.particles[0]);
}

TEST(Transport, SingleIterationHoldsInitialState) {
  const int horizon = 3;
  auto ctx = make_context(horizon);
  ctx.iterations = 1;
  ctx.mc_samples = 4;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, -0.15)};
  const auto result = transport(particles, ctx, QuadraticCost{0.0});
  ASSERT_EQ(result.trajectories[0].length(), 1);
  EXPECT_TRUE(result.trajectories[0].states[0] == particles.particles[0]);
  EXPECT_TRUE(result.particles.particles[0] == particles.particles[0]);
}

TEST(Transport, DescendsQuadraticCost) {
  const int horizon = 4;
  int monotone = 0;
  const int runs = 20;
  for (int seed = 0; seed < runs; ++seed) {
    auto ctx = make_context(horizon);
    ctx.seed = seed;
    ctx.epsilon = 0.002;
    ctx.iterations = 6;
    ctx.mc_samples = 10000;
    GuideParticleSet particles;
    particles.particles = {constant_sequence(horizon, 0.5)};
    const auto result = transport(particles, ctx, QuadraticCost{0.0});
    const auto& costs = result.trajectories[0].costs;
    bool ok = true;
    for (int l = 0; l + 1 < costs.size(); ++l)
      if (costs(l + 1) > costs(l) + 1e-9) ok = false;
    if (ok) ++monotone;
  }
  EXPECT_GE(monotone, 18);  // >= 90%
}

TEST(Transport, RespectsBounds) {
  const int horizon = 4;
  auto ctx = make_context(horizon);
  ctx.bounds = ControlBounds{-0.25, 0.25};
  ctx.epsilon = 0.05;
  ctx.iterations = 10;
  ctx.mc_samples = 64;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.2)};
  // Optimum far outside the bounds pulls the particle against the wall.
  const auto result = transport(particles, ctx, QuadraticCost{5.0});
  for (const auto& state : result.trajectories[0].states) {
    EXPECT_GE(state.values().minCoeff(), -0.25);
    EXPECT_LE(state.values().maxCoeff(), 0.25);
  }
  EXPECT_LE(result.particles.particles[0].values().maxCoeff(), 0.25);
}

TEST(Transport, EvaluatorBudgetIsExactlyLTimesN) {
  const int horizon = 5;
  auto ctx = make_context(horizon);
  ctx.iterations = 7;
  ctx.mc_samples = 13;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.1), constant_sequence(horizon, -0.1),
                         constant_sequence(horizon, 0.0)};
  Counting<QuadraticCost> counting{QuadraticCost{0.0}};
  const auto result = transport(particles, ctx, counting);
  EXPECT_EQ(counting.calls.load(), 7L * 13L * 3L);
  EXPECT_EQ(result.diag.evaluator_calls, 7L * 13L * 3L);
}

TEST(PickNominal, SingleParticleIsIndexZero) {
  GuideParticleSet particles;
  particles.particles = {constant_sequence(3, 0.1)};
  const auto mode = pick_nominal(particles, QuadraticCost{0.0});
  EXPECT_EQ(mode.k_star, 0);
}

TEST(PickNominal, PicksLowestCost) {
  // Costs ~ [5, 1, 3] via distance from the target.
  GuideParticleSet particles;
  particles.particles = {constant_sequence(2, 0.5), constant_sequence(2, 0.1),
                         constant_sequence(2, 0.3)};
  const auto mode = pick_nominal(particles, QuadraticCost{0.0});
  EXPECT_EQ(mode.k_star, 1);
  EXPECT_TRUE(mode.nominal == particles.particles[1]);
}

TEST(PickNominal, TieBreaksTowardLowestIndex) {
  GuideParticleSet particles;
  particles.particles = {constant_sequence(2, 0.2), constant_sequence(2, -0.2)};
  const auto mode = pick_nominal(particles, QuadraticCost{0.0});  // equal costs
  EXPECT_EQ(mode.k_star, 0);
}

TEST(PickNominal, CachedIndexMatchesFinalCosts) {
  std::vector<TransportTrajectory> trajectories(3);
  for (int k = 0; k < 3; ++k) {
    trajectories[k].states = {ControlSequence(2, 1)};
    trajectories[k].qstar_values = Vec::Constant(1, 0.5);
    trajectories[k].costs = Vec::Constant(1, 0.0);
  }
  trajectories[0].costs(0) = 5.0;
  trajectories[1].costs(0) = 1.0;
  trajectories[2].costs(0) = 3.0;
  EXPECT_EQ(pick_nominal_index(trajectories), 1);
  trajectories[1].costs(0) = 5.0;
  EXPECT_EQ(pick_nominal_index(trajectories), 2);
  trajectories[2].costs(0) = 5.0;
  EXPECT_EQ(pick_nominal_index(trajectories), 0);  // all tied
}

TEST(GuideStep, DegenerateSettingsFallBackCleanly) {
  // epsilon = 0, L = 1, constant evaluator: nominal is the initial particle
  // and the covariance is the fallback schedule.
  const int horizon = 4;
  auto ctx = make_context(horizon);
  ctx.epsilon = 0.0;
  ctx.iterations = 1;
  ctx.mc_samples = 4;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.12)};
  const auto flat = [](const MatView&) { return 2.0; };
  const auto result = guide_step(particles, ctx, flat);
  EXPECT_TRUE(result.mode.nominal == particles.particles[0]);
  EXPECT_TRUE(result.mode.cov == ctx.fallback_cov);
  EXPECT_EQ(result.diag.fit_fallback_entries, horizon);
}

TEST(GuideStep, EvaluatorBudgetIsExactlyLTimesKgTimesN) {
  const int horizon = 6;
  auto ctx = make_context(horizon);
  ctx.iterations = 5;
  ctx.mc_samples = 9;
  ctx.epsilon = 0.001;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.1), constant_sequence(horizon, -0.2)};
  Counting<QuadraticCost> counting{QuadraticCost{0.0}};
  const auto result = guide_step(particles, ctx, counting);
  EXPECT_EQ(counting.calls.load(), 5L * 9L * 2L);
  EXPECT_EQ(result.diag.evaluator_calls, 5L * 9L * 2L);
}

TEST(GuideStep, NominalCostNotWorseThanAnyFinalParticle) {
  const int horizon = 4;
  auto ctx = make_context(horizon);
  ctx.iterations = 4;
  ctx.mc_samples = 32;
  ctx.epsilon = 0.005;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.4), constant_sequence(horizon, -0.3),
                         constant_sequence(horizon, 0.05)};
  const QuadraticCost cost{0.1};
  const auto result = guide_step(particles, ctx, cost);
  const double nominal_cost = cost(result.mode.nominal.view());
  for (const auto& particle : result.particles.particles)
    EXPECT_LE(nominal_cost, cost(particle.view()) + 1e-12);
}

// Bimodal cost with basins at +0.25 and -0.25 and a ridge at 0.
struct BimodalCost {
  double operator()(const MatView& seq) const {
    double s = 0.0;
    for (int t = 0; t < seq.rows(); ++t) {
      const double v = seq(t, 0);
      const double left = (v + 0.25) * (v + 0.25);
      const double right = (v - 0.25) * (v - 0.25);
      s += 4.0 * std::min(left, right);
    }
    return s;
  }
};

TEST(GuideStep, StaysInStartingBasin) {
  const int horizon = 6;
  auto ctx = make_context(horizon, 0.2);
  ctx.iterations = 20;
  ctx.mc_samples = 2000;
  ctx.epsilon = 0.003;
  ctx.guide_cov = CovarianceSchedule::constant_sigma(horizon, 1, 0.05);

  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.08)};  // inside the + basin
  const auto result = guide_step(particles, ctx, BimodalCost{});
  for (int t = 0; t < horizon; ++t) {
    EXPECT_GT(result.mode.nominal(t, 0), 0.0) << "left the basin at t=" << t;
    EXPECT_NEAR(result.mode.nominal(t, 0), 0.25, 0.12) << "t=" << t;
  }
}

TEST(GuideStep, FixedSeedReproduces) {
  const int horizon = 5;
  auto ctx = make_context(horizon);
  ctx.iterations = 6;
  ctx.mc_samples = 32;
  ctx.epsilon = 0.01;
  GuideParticleSet particles;
  particles.particles = {constant_sequence(horizon, 0.2)};
  const auto a = guide_step(particles, ctx, QuadraticCost{0.0});
  const auto b = guide_step(particles, ctx, QuadraticCost{0.0});
  EXPECT_TRUE(a.mode.nominal == b.mode.nominal);
  EXPECT_TRUE(a.mode.cov == b.mode.cov);
  EXPECT_EQ(a.mode.k_star, b.mode.k_star);
}

}  // namespace
}  // namespace svgmppi
