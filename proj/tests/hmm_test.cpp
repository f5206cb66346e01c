#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"

using namespace affwords;
namespace t = affwords::testing;

namespace {

Trajectory from_frames(std::vector<Frame> frames) { return Trajectory{std::move(frames), 1.0 / 30.0}; }

double max_norm(const Trajectory& tr) {
  double m = 0.0;
  for (const auto& f : tr.frames) m = std::max(m, norm(f));
  return m;
}

}  // namespace

TEST(Preprocess, ConstantSequenceSkipsDivision) {
  const auto raw = from_frames({{1, 2, 3}, {1, 2, 3}});
  const std::vector<Frame> torso{{1, 2, 3}, {1, 2, 3}};
  const auto out = preprocess(raw, torso);
  for (const auto& f : out.frames)
    for (double x : f) EXPECT_EQ(x, 0.0);
}

TEST(Preprocess, InvariantToScaleAndTranslation) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory raw;
    std::vector<Frame> torso;
    for (int i = 0; i < 15; ++i) {
      raw.frames.push_back({g(rng), g(rng), g(rng)});
      torso.push_back({g(rng), g(rng), g(rng)});
    }
    const auto base = preprocess(raw, torso);
    EXPECT_NEAR(max_norm(base), 1.0, 1e-12);

    const double k = std::exp(2.0 * g(rng));
    const Frame shift{g(rng), g(rng), g(rng)};
    Trajectory scaled = raw, moved = raw;
    auto torso_moved = torso;
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t d = 0; d < 3; ++d) {
        scaled.frames[i][d] = torso[i][d] + k * (raw.frames[i][d] - torso[i][d]);
        moved.frames[i][d] += shift[d];
        torso_moved[i][d] += shift[d];
      }
    const auto a = preprocess(scaled, torso);
    const auto b = preprocess(moved, torso_moved);
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t d = 0; d < 3; ++d) {
        EXPECT_NEAR(a.frames[i][d], base.frames[i][d], 1e-12);
        EXPECT_NEAR(b.frames[i][d], base.frames[i][d], 1e-12);
      }
  }
}

TEST(Preprocess, Idempotent) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto once = preprocess(t::random_trajectory(seed, 1 + seed % 20));
    const auto twice = preprocess(once);
    for (std::size_t i = 0; i < once.size(); ++i)
      for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(twice.frames[i][d], once.frames[i][d], 1e-12);
  }
}

TEST(Preprocess, Errors) {
  const auto raw = from_frames({{1, 2, 3}, {0, 0, 0}});
  const std::vector<Frame> torso{{0, 0, 0}};
  EXPECT_THROW(preprocess(raw, torso), Error);
  EXPECT_THROW(preprocess(Trajectory{}), Error);
  EXPECT_THROW(preprocess(from_frames({{NAN, 0, 0}})), Error);
}

TEST(ForwardLoglik, SingleGaussianSingleFrame) {
  HmmModel m;
  m.action_label = "x";
  m.states = 1;
  m.log_transitions = {0.0};
  m.emissions = {GaussianMixture{{1.0}, {{0.1, -0.2, 0.3}}, {{0.5, 2.0, 0.25}}}};
  const Frame x{0.4, 0.1, -0.2};
  double expected = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    const double mu = m.emissions[0].means[0][d], var = m.emissions[0].variances[0][d];
    expected += -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x[d] - mu) * (x[d] - mu) / var;
  }
  EXPECT_NEAR(forward_loglik(m, from_frames({x})), expected, 1e-12);
}

TEST(ForwardLoglik, MatchesPathEnumeration) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t q = 1 + seed % 3, m = 1 + seed % 2, len = 1 + seed % 6;
    const auto model = t::random_hmm(seed, q, m);
    model.validate();
    const auto traj = t::random_trajectory(seed + 1000, len);
    const double oracle = std::log(t::path_enumeration_likelihood(model, traj));
    const double got = forward_loglik(model, traj);
    EXPECT_LT(std::abs(got - oracle), 1e-9 * std::abs(oracle) + 1e-12) << "seed " << seed;
  }
}

TEST(ForwardLoglik, ShortSequencesStayFinite) {
  const auto model = t::random_hmm(1, 4, 2);
  for (std::size_t len = 1; len < 4; ++len)
    EXPECT_TRUE(std::isfinite(forward_loglik(model, t::random_trajectory(len, len))));
  EXPECT_THROW(forward_loglik(model, Trajectory{}), Error);
}

TEST(ForwardLoglik, PrefixesMatchTruncatedSequences) {
  const auto model = t::random_hmm(2, 3, 2);
  const auto traj = t::random_trajectory(5, 12);
  const auto prefixes = prefix_logliks(model, traj);
  for (std::size_t len = 1; len <= traj.size(); ++len) {
    const Trajectory cut{{traj.frames.begin(), traj.frames.begin() + std::ptrdiff_t(len)}, traj.frame_period};
    EXPECT_NEAR(prefixes[len - 1], forward_loglik(model, cut), 1e-9);
  }
}

TEST(TrainHmm, EmIsMonotone) {
  const auto params = default_world_config().trajectory;
  for (const char* action : {"grasp", "tap", "touch"}) {
    const auto trajs = sample_trajectories(action, params, 20, 17);
    std::vector<double> trace;
    train_hmm(std::span<const Trajectory>(trajs), action, {}, &trace);
    ASSERT_GE(trace.size(), 2u);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i], trace[i - 1] - 1e-9) << action << " " << i;
  }
}

TEST(TrainHmm, SinglePointConvergesToIt) {
  const Frame p{0.3, -0.6, 0.2};
  std::vector<Trajectory> trajs(4, from_frames(std::vector<Frame>(10, p)));
  HmmTrainOptions opt;
  opt.states = 1;
  opt.mixtures = 1;
  const auto m = train_hmm(std::span<const Trajectory>(trajs), "p", opt);
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_NEAR(m.emissions[0].means[0][d], p[d], 1e-6);
    EXPECT_GE(m.emissions[0].variances[0][d], opt.variance_floor);
  }
}

TEST(TrainHmm, KeepsLeftToRightMaskAndInvariants) {
  const auto trajs = sample_trajectories("touch", default_world_config().trajectory, 15, 5);
  HmmTrainOptions opt;
  opt.states = 5;
  opt.mixtures = 3;
  const auto m = train_hmm(std::span<const Trajectory>(trajs), "touch", opt);
  m.validate();
  for (std::size_t i = 0; i < m.states; ++i) {
    for (std::size_t j = 0; j < m.states; ++j)
      if (j != i && j != i + 1) { EXPECT_EQ(std::exp(m.log_transition(i, j)), 0.0); }
    double w = 0.0;
    for (double x : m.emissions[i].weights) w += x;
    EXPECT_NEAR(w, 1.0, 1e-12);
  }
}

TEST(TrainHmm, DeterministicForSeed) {
  const auto trajs = sample_trajectories("tap", default_world_config().trajectory, 10, 5);
  HmmTrainOptions opt;
  opt.seed = 99;
  const auto a = train_hmm(std::span<const Trajectory>(trajs), "tap", opt);
  const auto b = train_hmm(std::span<const Trajectory>(trajs), "tap", opt);
  EXPECT_EQ(a.log_transitions, b.log_transitions);
  for (std::size_t s = 0; s < a.states; ++s) EXPECT_EQ(a.emissions[s].means, b.emissions[s].means);
}

TEST(TrainHmm, Errors) {
  std::vector<Trajectory> none;
  EXPECT_THROW(train_hmm(std::span<const Trajectory>(none), "x"), Error);
  std::vector<Trajectory> short_one{from_frames({{0, 0, 0}, {1, 1, 1}})};
  EXPECT_THROW(train_hmm(std::span<const Trajectory>(short_one), "x"), Error);
}

TEST(ActionPosterior, FromLogLikelihoods) {
  const auto p = posterior_from_loglik({-10.0, -12.0, -14.0});
  EXPECT_NEAR(p[0], 0.86681, 5e-6);
  EXPECT_NEAR(p[1], 0.11731, 5e-6);
  EXPECT_NEAR(p[2], 0.01588, 5e-6);
  const double z = 1.0 + std::exp(-2.0) + std::exp(-4.0);
  EXPECT_NEAR(p[1], std::exp(-2.0) / z, 1e-15);

  const auto eq = posterior_from_loglik({-3.0, -3.0, -3.0});
  for (double w : eq.weights()) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);

  const auto zero = posterior_from_loglik({-1.0, neg_inf, -2.0});
  EXPECT_EQ(zero[1], 0.0);
  EXPECT_THROW(posterior_from_loglik({neg_inf, neg_inf}), Error);
}

TEST(ActionPosterior, ShiftInvariantAndNormalized) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-800.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> ll{u(rng), u(rng), u(rng)};
    const double c = u(rng) * 10.0;
    const auto a = posterior_from_loglik(ll);
    const auto b = posterior_from_loglik({ll[0] + c, ll[1] + c, ll[2] + c});
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(a[k], b[k], 1e-12);
      s += a[k];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(PrefixCurve, EndpointAndErrors) {
  const auto& bank = t::default_bank();
  const auto traj = t::held_out(1, 1)[0];
  const auto curve = prefix_curve(bank, traj);
  ASSERT_EQ(curve.normalized.size(), traj.size());
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_NEAR(curve.normalized.back()[k], forward_loglik(bank.models[k], traj) / double(traj.size()), 1e-12);
  const auto last = prefix_scores(bank, traj, traj.size());
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(last[k], curve.normalized.back()[k], 1e-12);
  EXPECT_THROW(prefix_scores(bank, traj, 0), Error);
  EXPECT_THROW(prefix_scores(bank, traj, traj.size() + 1), Error);
  EXPECT_THROW(prefix_curve(bank, Trajectory{}), Error);
}

TEST(PrefixCurve, TapRecognizedAtSixtyPercent) {
  const auto& bank = t::default_bank();
  const auto taps = sample_trajectories("tap", default_world_config().trajectory, 200, 31337);
  int correct = 0;
  for (const auto& tr : taps) {
    const auto curve = prefix_curve(bank, tr);
    const auto at = std::size_t(std::ceil(0.6 * double(tr.size())));
    correct += curve.argmax(at - 1) == 1;
  }
  EXPECT_GE(correct, 180);
}

TEST(GestureBank, LabelCheck) {
  const auto& bank = t::default_bank();
  EXPECT_NO_THROW(bank.check_labels({"grasp", "tap", "touch"}));
  try {
    bank.check_labels({"grasp", "touch", "tap"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::mismatch);
  }
}
