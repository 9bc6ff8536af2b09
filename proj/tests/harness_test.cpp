#include "mmrl/harness.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "mmrl/errors.hpp"

namespace mmrl {
namespace {

SimConfig small_s1(int m = 4, long horizon = 30) {
  SimConfig c;
  c.algo = Algo::S1;
  c.horizon = horizon;
  c.realizations = 3;
  c.system.blocks = 1;
  c.candidates = CandidatesConfig{};
  c.candidates->m = m;
  return c;
}

SimConfig small_s3(long horizon = 40) {
  SimConfig c;
  c.algo = Algo::S3;
  c.M = 5;
  c.horizon = horizon;
  c.realizations = 2;
  c.system.blocks = 1;
  c.schedule.mode = ScheduleMode::S3_Thm7;
  c.param = ParamConfig{};
  return c;
}

TEST(ComputeGamma, ScalarAndScaling) {
  const LinearSystem sys{Matrix::Constant(1, 1, 0.8), Matrix::Ones(1, 1)};
  EXPECT_NEAR(compute_gamma(sys, 1.0).gamma, 1.3699523798725348, 1e-9);
  EXPECT_NEAR(compute_gamma(sys, 2.0).gamma, 4 * 1.3699523798725348, 1e-8);
  EXPECT_EQ(compute_gamma(sys, 0.0).gamma, 0.0);
}

TEST(RunEpisode, ZeroNoiseZeroCost) {
  auto c = small_s1();
  c.sigma = 0.0;
  c.schedule.mode = ScheduleMode::None;
  const auto log = run_episode(c, 0);
  ASSERT_EQ(log.size(), 30u);
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(log.stage_cost[i], 0.0);
    EXPECT_EQ(log.cum_regret[i], 0.0);
  }
}

TEST(RunEpisode, SeriesConsistent) {
  const auto c = small_s1();
  const Experiment e = prepare_experiment(c);
  const auto log = run_episode(e, 1);
  double cum = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_DOUBLE_EQ(log.stage_cost[i], log.x_norm_sq[i] + log.u_norm_sq[i]);
    cum += log.stage_cost[i];
    EXPECT_DOUBLE_EQ(log.cum_cost[i], cum);
    EXPECT_DOUBLE_EQ(log.cum_regret[i], cum - static_cast<double>(i + 1) * e.benchmark.gamma);
    EXPECT_EQ(log.misid[i], log.chosen_or_theta_dist[i] != *e.candidates->truth_index);
    EXPECT_GT(log.sigma_uk_sq[i], 0.0);
  }
  EXPECT_EQ(log.x_norm_sq[0], 0.0);
}

TEST(RunEpisode, Reproducible) {
  const auto c = small_s1();
  const auto a = run_episode(c, 2), b = run_episode(c, 2), other = run_episode(c, 3);
  EXPECT_EQ(a.cum_cost, b.cum_cost);
  EXPECT_EQ(a.chosen_or_theta_dist, b.chosen_or_theta_dist);
  EXPECT_NE(a.cum_cost, other.cum_cost);
}

TEST(RunEpisode, SingleCandidateNeverMisidentified) {
  auto c = small_s1(1);
  c.schedule.c_e = 1.0;
  const auto log = run_episode(c, 0);
  for (auto m : log.misid) EXPECT_EQ(m, 0);
}

TEST(RunEpisode, S2CoverRadiusRule) {
  auto c = small_s1(6);
  c.algo = Algo::S2;
  c.schedule.mode = ScheduleMode::S2_Thm6;
  c.cover = CoverConfig{0.5};
  const Experiment e = prepare_experiment(c);
  const auto log = run_episode(e, 0);
  const DynamicsModel truth(e.truth);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto idx = static_cast<std::size_t>(log.chosen_or_theta_dist[i]);
    EXPECT_EQ(log.misid[i], model_distance(e.candidates->models[idx], truth) > 0.5);
  }
}

TEST(RunEpisode, S3ParameterError) {
  const auto c = small_s3();
  const Experiment e = prepare_experiment(c);
  EXPECT_DOUBLE_EQ(e.misid_epsilon, 20.0 / 40.0);
  EXPECT_DOUBLE_EQ(e.schedule.c_e, 0.4 / (20.0 / 40.0));
  const auto log = run_episode(e, 0);
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_GE(log.chosen_or_theta_dist[i], 0.0);
    EXPECT_EQ(log.misid[i], log.chosen_or_theta_dist[i] > e.misid_epsilon);
  }
}

TEST(RunEpisode, SameNoiseComparator) {
  auto c = small_s1();
  c.outputs.comparator_mode = ComparatorMode::SameNoise;
  const auto log = run_episode(c, 0);
  ASSERT_EQ(log.opt_cum_cost.size(), log.size());
  EXPECT_EQ(log.opt_cum_cost[0], 0.0);
  EXPECT_GT(log.opt_cum_cost.back(), 0.0);
}

TEST(PrepareExperiment, AutoScheduleValues) {
  const auto c = small_s1(10);
  const Experiment e = prepare_experiment(c);
  EXPECT_DOUBLE_EQ(e.schedule.log_count, std::log(20.0));
  EXPECT_EQ(e.schedule.d_u, 1);
  ASSERT_TRUE(e.candidates.has_value());
  EXPECT_EQ(e.candidates->size(), 10u);
  EXPECT_EQ(e.b_sq_inv, 0.0);

  auto prop = c;
  prop.schedule.mode = ScheduleMode::Prop4;
  const Experiment p = prepare_experiment(prop);
  EXPECT_DOUBLE_EQ(p.schedule.log_count, std::log(10.0));
  EXPECT_DOUBLE_EQ(p.schedule.c_e, excitation_constant(*p.candidates, p.truth));
  EXPECT_GT(p.schedule.c_e, 0.0);
}

TEST(PrepareExperiment, MissingTruthNeedsExplicitCe) {
  auto c = small_s1();
  c.candidates->include_truth = false;
  c.schedule.mode = ScheduleMode::Prop4;
  EXPECT_THROW(prepare_experiment(c), ValidationError);
  c.schedule.c_e = 0.5;
  EXPECT_NO_THROW(prepare_experiment(c));
}

TEST(RunRealizations, ThreadCountInvariant) {
  auto c = small_s1();
  c.realizations = 6;
  const Experiment e = prepare_experiment(c);
  const auto serial = run_realizations(e, 6, 1);
  const auto parallel = run_realizations(e, 6, 3);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t r = 0; r < serial.size(); ++r) {
    EXPECT_EQ(serial[r].realization, r);
    EXPECT_EQ(serial[r].cum_cost, parallel[r].cum_cost);
  }
}

TEST(RunRealizations, PerRealizationCandidates) {
  auto c = small_s1();
  c.candidates->per_realization = true;
  const Experiment e = prepare_experiment(c);
  EXPECT_FALSE(e.candidates.has_value());
  const auto logs = run_realizations(e, 2, 1);
  EXPECT_EQ(logs.size(), 2u);
}

TrajectoryLog fake_log(std::vector<std::uint8_t> misid, std::vector<double> regret) {
  TrajectoryLog log;
  log.misid = std::move(misid);
  log.cum_regret = regret;
  log.stage_cost = regret;
  log.value = regret;
  return log;
}

TEST(Aggregate, MeansAndBound) {
  const std::vector<TrajectoryLog> logs{fake_log({1, 0, 0}, {1, 2, 3}), fake_log({1, 1, 0}, {3, 4, 5})};
  const auto s = aggregate(logs, 1);
  EXPECT_EQ(s.mean_regret, (std::vector<double>{2, 3, 4}));
  EXPECT_EQ(s.misid_freq, (std::vector<double>{1, 0.5, 0}));
  EXPECT_EQ(s.bound_series, (std::vector<double>{1, 1, 0.25}));
  EXPECT_TRUE(s.mean_opt_regret.empty());
  EXPECT_THROW(aggregate({}, 1), EmptyInput);
}

TEST(ConvergenceStat, LastMisidentification) {
  const std::vector<TrajectoryLog> logs{fake_log({1, 0, 0, 0}, {0, 0, 0, 0}),
                                        fake_log({0, 0, 1, 0}, {0, 0, 0, 0}),
                                        fake_log({0, 0, 0, 0}, {0, 0, 0, 0})};
  const auto stat = finite_time_convergence_stat(logs);
  EXPECT_EQ(stat.last_misid, (std::vector<long>{1, 3, 0}));
  EXPECT_EQ(stat.median, 1.0);
  EXPECT_EQ(stat.max, 3);
}

TEST(Quantile, Type7) {
  EXPECT_EQ(quantile({3, 1, 2}, 0.5), 2.0);
  EXPECT_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_NEAR(quantile({0, 10}, 0.9), 9.0, 1e-12);
  EXPECT_EQ(quantile({5}, 0.3), 5.0);
}

TEST(Boundedness, StrictThreshold) {
  TrajectoryLog log;
  log.states = Matrix::Ones(1, 3);
  const std::vector<TrajectoryLog> logs{log};
  EXPECT_TRUE(boundedness_check(logs, Matrix::Ones(1, 1), 1.5));
  EXPECT_FALSE(boundedness_check(logs, Matrix::Ones(1, 1), 1.0));
}

TEST(PeCheck, ScalarBoundHolds) {
  const LinearSystem truth{Matrix::Constant(1, 1, 0.8), Matrix::Ones(1, 1)};
  const LinearSystem cand{Matrix::Constant(1, 1, 0.6), Matrix::Constant(1, 1, 1.2)};
  const auto check = pe_lower_bound_check(truth, cand, Matrix::Constant(1, 1, 0.3), 1.0, 1.0, 3,
                                          20000, RandomState(5));
  EXPECT_GT(check.rhs, 0.0);
  EXPECT_GE(check.lhs_estimate, check.rhs - 3 * check.lhs_stderr);
}

TEST(RealizationStream, DependsOnSeedAndIndexOnly) {
  EXPECT_EQ(realization_stream(4, 2), realization_stream(4, 2));
  EXPECT_NE(realization_stream(4, 2).key(), realization_stream(4, 3).key());
  EXPECT_NE(realization_stream(4, 2).key(), realization_stream(5, 2).key());
}

}  // namespace
}  // namespace mmrl
