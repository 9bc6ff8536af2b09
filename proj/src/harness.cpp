#include "mmrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mmrl/errors.hpp"

namespace mmrl {

namespace {

constexpr std::uint64_t kCandidateStream = 0;
constexpr std::uint64_t kRealizationStream = 1;
constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kLearnerStream = 1;
constexpr std::uint64_t kLocalCandidateStream = 2;

Matrix to_matrix(const DenseRows& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

CandidateSet make_candidates(const SimConfig& config, const LinearSystem& truth,
                             const RandomState& stream) {
  const auto& c = *config.candidates;
  CandidateOptions options;
  options.abs_err = c.abs_err;
  options.rel_err = c.rel_err;
  options.include_truth = c.include_truth;
  return generate_candidates(truth, static_cast<std::size_t>(c.m), options, stream);
}

bool needs_c_e(ScheduleMode mode) {
  return mode == ScheduleMode::Prop4 || mode == ScheduleMode::S2_Thm6 ||
         mode == ScheduleMode::S3_Thm7;
}

double parameter_count(const LinearSystem& truth) {
  return static_cast<double>((truth.A.rows() + truth.B.cols()) * truth.A.rows());
}

double s3_epsilon(const SimConfig& config, const LinearSystem& truth) {
  if (config.param && config.param->epsilon) return *config.param->epsilon;
  return parameter_count(truth) / static_cast<double>(config.horizon);
}

ExcitationSchedule resolve_schedule(const SimConfig& config, const LinearSystem& truth,
                                    const CandidateSet* candidates) {
  ExcitationSchedule s;
  s.mode = config.schedule.mode;
  s.eta = config.eta;
  s.M = config.M;
  s.d_u = static_cast<int>(truth.B.cols());

  if (config.schedule.epsilon) {
    s.epsilon = *config.schedule.epsilon;
  } else if (config.algo == Algo::S2) {
    s.epsilon = config.cover->epsilon;
  } else if (config.algo == Algo::S3) {
    s.epsilon = s3_epsilon(config, truth);
  }

  if (config.schedule.log_count) {
    s.log_count = *config.schedule.log_count;
  } else {
    const double m = config.candidates ? config.candidates->m : 1.0;
    switch (s.mode) {
      case ScheduleMode::AppB_S1: s.log_count = std::log(2.0 * m); break;
      case ScheduleMode::Prop4:
      case ScheduleMode::S2_Thm6: s.log_count = std::log(m); break;
      case ScheduleMode::S3_Thm7: s.log_count = parameter_count(truth); break;
      case ScheduleMode::None: s.log_count = 0.0; break;
    }
  }

  if (config.schedule.c_e) {
    s.c_e = *config.schedule.c_e;
  } else if (needs_c_e(s.mode)) {
    if (config.algo == Algo::S3) {
      // Matches the 10 / (eta d_u M eps) prefactor used for the parametric runs.
      s.c_e = 0.4 / s.epsilon;
    } else {
      if (!candidates || !candidates->truth_index)
        throw ValidationError("schedule.c_e must be given when the truth is not among the candidates");
      s.c_e = excitation_constant(*candidates, truth);
      if (!(s.c_e > 0.0))
        throw ValidationError("automatic c_e is zero (a non-truth candidate has B equal to the truth)");
    }
  }
  return s;
}

std::size_t nearest_to_truth(const CandidateSet& set, const DynamicsModel& truth) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double d = model_distance(set.models[i], truth);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

void reserve_log(TrajectoryLog& log, long n, Eigen::Index d_x, bool comparator) {
  const auto size = static_cast<std::size_t>(n);
  log.states.resize(d_x, n);
  for (auto* v : {&log.x_norm_sq, &log.u_norm_sq, &log.stage_cost, &log.cum_cost, &log.cum_regret,
                  &log.chosen_or_theta_dist, &log.sigma_uk_sq, &log.value})
    v->reserve(size);
  log.misid.reserve(size);
  log.synthesis_failures.reserve(size);
  log.held_policy.reserve(size);
  if (comparator) log.opt_cum_cost.reserve(size);
}

}  // namespace

BenchmarkGamma compute_gamma(const LinearSystem& truth, double sigma) {
  const auto n = truth.A.rows();
  const auto m = truth.B.cols();
  auto sol = dare_solve<double>(truth.A, truth.B, Matrix::Identity(n, n), Matrix::Identity(m, m));
  BenchmarkGamma g;
  g.gamma = sol.P.trace() * sigma * sigma;
  g.P = std::move(sol.P);
  g.K = std::move(sol.K);
  return g;
}

LinearSystem build_system(const SystemConfig& system) {
  if (system.preset == "explicit") return LinearSystem{to_matrix(system.A), to_matrix(system.B)};
  return leaky_integrator_chain(system.blocks, system.block_dim, system.diag);
}

double excitation_constant(const CandidateSet& set, const LinearSystem& truth) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.truth_index == i || !set.models[i].is_linear()) continue;
    best = std::min(best, frobenius_sq_diff(set.models[i].linear().B, truth.B));
  }
  return best;
}

RandomState realization_stream(std::uint64_t master_seed, std::uint64_t realization) {
  return RandomState(master_seed).split(kRealizationStream).split(realization);
}

Experiment prepare_experiment(const SimConfig& config) {
  validate(config);
  Experiment e;
  e.config = config;
  e.truth = build_system(config.system);
  e.benchmark = compute_gamma(e.truth, config.sigma);
  e.b_sq_inv = std::isinf(config.b) ? 0.0 : 1.0 / (config.b * config.b);

  if (config.algo != Algo::S3 && !config.candidates->per_realization) {
    e.candidates =
        make_candidates(config, e.truth, RandomState(config.master_seed).split(kCandidateStream));
  }
  const bool deferred_c_e = config.algo != Algo::S3 && config.candidates->per_realization;
  if (!deferred_c_e) {
    e.schedule = resolve_schedule(config, e.truth, e.candidates ? &*e.candidates : nullptr);
  }

  if (config.algo == Algo::S2) e.misid_epsilon = config.cover->epsilon;
  if (config.algo == Algo::S3) {
    const auto& p = *config.param;
    e.theta_star = to_feature_linear(e.truth).theta;
    if (p.domain.kind == "box") {
      e.domain = box_around(e.theta_star, p.domain.abs_err, p.domain.rel_err);
    } else {
      e.domain = BallDomain{e.theta_star, p.domain.radius};
    }
    e.misid_epsilon = p.misid_epsilon ? *p.misid_epsilon : s3_epsilon(config, e.truth);
  }
  return e;
}

TrajectoryLog run_episode(const Experiment& e, std::uint64_t realization) {
  const SimConfig& cfg = e.config;
  const RandomState base = realization_stream(cfg.master_seed, realization);
  RandomState noise = base.split(kNoiseStream);
  RandomState learner = base.split(kLearnerStream);

  std::optional<CandidateSet> local_set;
  ExcitationSchedule schedule = e.schedule;
  const CandidateSet* set = e.candidates ? &*e.candidates : nullptr;
  if (cfg.algo != Algo::S3 && !set) {
    local_set = make_candidates(cfg, e.truth, base.split(kLocalCandidateStream));
    set = &*local_set;
    schedule = resolve_schedule(cfg, e.truth, set);
  }

  const DynamicsModel truth(e.truth);
  const auto d_x = e.truth.A.rows();
  const auto d_u = e.truth.B.cols();
  const long n = cfg.horizon;
  const bool comparator = cfg.outputs.comparator_mode == ComparatorMode::SameNoise;
  const double gamma = e.benchmark.gamma;

  TrajectoryLog log;
  log.realization = realization;
  reserve_log(log, n, d_x, comparator);

  S2State s12;
  S3State s3;
  S3Options s3_options;
  std::size_t reference_index = 0;
  IndexDistance distance;
  if (cfg.algo == Algo::S3) {
    s3_options.d_x = d_x;
    s3_options.d_u = d_u;
    s3_options.eta = cfg.eta;
    s3_options.max_attempts = cfg.param->max_attempts;
    s3 = s3_initial_state(s3_options, cfg.param->ridge);
  } else {
    s12.base.board = ScoreBoard::zeros(set->size(), e.b_sq_inv);
    reference_index = set->truth_index ? *set->truth_index : nearest_to_truth(*set, truth);
    distance = [set](std::size_t i, std::size_t j) {
      return model_distance(set->models[i], set->models[j]);
    };
  }

  RandomState opt_noise = noise;
  Vector x_opt = Vector::Zero(d_x);
  double opt_cost = 0.0;

  Vector x = Vector::Zero(d_x);
  double cum_cost = 0.0;
  for (long k = 1; k <= n; ++k) {
    Vector u;
    double sigma_u_sq = 0.0;
    double chosen_or_dist = 0.0;
    bool misid = false;
    int failures = 0;
    bool held = false;
    switch (cfg.algo) {
      case Algo::S1: {
        auto step = s1_step(s12.base, k, schedule, *set, x, learner);
        u = std::move(step.u);
        sigma_u_sq = step.sigma_u_sq;
        chosen_or_dist = static_cast<double>(step.chosen);
        misid = step.chosen != reference_index;
        break;
      }
      case Algo::S2: {
        auto step = s2_step(s12, k, schedule, *set, cfg.cover->epsilon, distance, x, learner);
        u = std::move(step.u);
        sigma_u_sq = step.sigma_u_sq;
        chosen_or_dist = static_cast<double>(step.chosen);
        misid = model_distance(set->models[step.chosen], truth) > e.misid_epsilon;
        break;
      }
      case Algo::S3: {
        auto step = s3_step(s3, k, schedule, s3_options, *e.domain, x, learner);
        u = std::move(step.u);
        sigma_u_sq = step.sigma_u_sq;
        chosen_or_dist = (s3.theta - e.theta_star).norm();
        misid = chosen_or_dist > e.misid_epsilon;
        failures = step.synthesis_failures;
        held = step.held_previous;
        break;
      }
    }

    const double xs = x.squaredNorm();
    const double us = u.squaredNorm();
    cum_cost += xs + us;
    log.states.col(k - 1) = x;
    log.x_norm_sq.push_back(xs);
    log.u_norm_sq.push_back(us);
    log.stage_cost.push_back(xs + us);
    log.cum_cost.push_back(cum_cost);
    log.cum_regret.push_back(cum_cost - static_cast<double>(k) * gamma);
    log.chosen_or_theta_dist.push_back(chosen_or_dist);
    log.sigma_uk_sq.push_back(sigma_u_sq);
    log.misid.push_back(misid ? 1 : 0);
    log.value.push_back(x.dot(e.benchmark.P * x));
    log.synthesis_failures.push_back(failures);
    log.held_policy.push_back(held ? 1 : 0);

    Vector x_next = step_env(truth, x, u, cfg.sigma, noise);
    if (cfg.algo == Algo::S3) {
      rls_update(s3.rls, features(FeatureMapId::StackedLinear, x, u), x_next,
                 normalization_weight(x, u, e.b_sq_inv));
    } else {
      score_update(s12.base.board, *set, x, u, x_next);
    }

    if (comparator) {
      const Vector u_opt = -(e.benchmark.K * x_opt);
      opt_cost += x_opt.squaredNorm() + u_opt.squaredNorm();
      log.opt_cum_cost.push_back(opt_cost);
      x_opt = step_env(truth, x_opt, u_opt, cfg.sigma, opt_noise);
    }
    x = std::move(x_next);
  }
  return log;
}

TrajectoryLog run_episode(const SimConfig& config, std::uint64_t realization) {
  return run_episode(prepare_experiment(config), realization);
}

std::vector<TrajectoryLog> run_realizations(const Experiment& experiment, int count, int threads) {
  std::vector<TrajectoryLog> logs(static_cast<std::size_t>(std::max(count, 0)));
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(logs.size())));
  if (workers <= 1) {
    for (std::size_t r = 0; r < logs.size(); ++r) logs[r] = run_episode(experiment, r);
    return logs;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < logs.size(); r = next++) {
          try {
            logs[r] = run_episode(experiment, r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return logs;
}

MonteCarloSummary aggregate(const std::vector<TrajectoryLog>& logs, int M, double gamma) {
  if (logs.empty()) throw EmptyInput("aggregate: no logs");
  const std::size_t n = logs.front().size();
  for (const auto& log : logs)
    if (log.size() != n) throw DimensionMismatch("aggregate: logs differ in length");

  const double count = static_cast<double>(logs.size());
  const bool with_opt = std::all_of(logs.begin(), logs.end(),
                                    [n](const TrajectoryLog& l) { return l.opt_cum_cost.size() == n; });
  MonteCarloSummary s;
  s.realizations = logs.size();
  s.mean_regret.assign(n, 0.0);
  s.misid_freq.assign(n, 0.0);
  s.mean_V.assign(n, 0.0);
  s.bound_series.resize(n);
  if (with_opt && n > 0) s.mean_opt_regret.assign(n, 0.0);
  for (const auto& log : logs) {
    for (std::size_t k = 0; k < n; ++k) {
      s.mean_regret[k] += log.cum_regret[k];
      s.misid_freq[k] += log.misid[k];
      s.mean_V[k] += log.value[k];
      if (!s.mean_opt_regret.empty())
        s.mean_opt_regret[k] += log.opt_cum_cost[k] - static_cast<double>(k + 1) * gamma;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    s.mean_regret[k] /= count;
    s.misid_freq[k] /= count;
    s.mean_V[k] /= count;
    if (!s.mean_opt_regret.empty()) s.mean_opt_regret[k] /= count;
    s.bound_series[k] = misid_bound(M, static_cast<long>(k + 1));
  }
  return s;
}

PeCheck pe_lower_bound_check(const LinearSystem& truth, const LinearSystem& candidate,
                             const Matrix& Kq, double sigma_u, double sigma, int k, int rollouts,
                             RandomState rng) {
  if (k < 2) throw ValidationError("pe_lower_bound_check: k must be >= 2");
  const Matrix dA = candidate.A - truth.A;
  const Matrix dB = candidate.B - truth.B;
  const Matrix Acl = truth.A - truth.B * Kq;

  // Covariance orientation: x_k carries sum_j Acl^j B n_u, so the Gramian is
  // sum_j Acl^j B B' Acl^j'.
  const Matrix W = controllability_gramian(Acl.transpose(), truth.B, k - 1);
  PeCheck out;
  out.rhs = sigma_u * sigma_u * dB.squaredNorm() +
            (sigma_u * sigma_u * min_singular_value(W) + sigma * sigma) *
                (dA - dB * Kq).squaredNorm();

  const auto d_x = truth.A.rows();
  const auto d_u = truth.B.cols();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int r = 0; r < rollouts; ++r) {
    Vector x = Vector::Zero(d_x);
    for (int j = 1; j < k; ++j) {
      const Vector u = -(Kq * x) + rng.normal_vector(d_u, sigma_u);
      x = truth.A * x + truth.B * u + rng.normal_vector(d_x, sigma);
    }
    const Vector u = -(Kq * x) + rng.normal_vector(d_u, sigma_u);
    const double gap = (dA * x + dB * u).squaredNorm();
    sum += gap;
    sum_sq += gap * gap;
  }
  const double n = static_cast<double>(rollouts);
  out.lhs_estimate = sum / n;
  const double var = rollouts > 1 ? std::max(0.0, (sum_sq - n * out.lhs_estimate * out.lhs_estimate) / (n - 1)) : 0.0;
  out.lhs_stderr = std::sqrt(var / n);
  return out;
}

bool boundedness_check(const std::vector<TrajectoryLog>& logs, const Matrix& P, double c_bound) {
  if (logs.empty()) throw EmptyInput("boundedness_check: no logs");
  const auto n = logs.front().states.cols();
  for (Eigen::Index k = 0; k < n; ++k) {
    double mean = 0.0;
    for (const auto& log : logs) {
      const auto x = log.states.col(k);
      mean += x.dot(P * x);
    }
    mean /= static_cast<double>(logs.size());
    if (!(mean < c_bound)) return false;
  }
  return true;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInput("quantile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ConvergenceStats finite_time_convergence_stat(const std::vector<TrajectoryLog>& logs) {
  if (logs.empty()) throw EmptyInput("finite_time_convergence_stat: no logs");
  ConvergenceStats stats;
  std::vector<double> as_double;
  for (const auto& log : logs) {
    long last = 0;
    for (std::size_t k = 0; k < log.misid.size(); ++k)
      if (log.misid[k]) last = static_cast<long>(k + 1);
    stats.last_misid.push_back(last);
    as_double.push_back(static_cast<double>(last));
  }
  stats.median = quantile(as_double, 0.5);
  stats.p90 = quantile(as_double, 0.9);
  stats.max = *std::max_element(stats.last_misid.begin(), stats.last_misid.end());
  return stats;
}

}  // namespace mmrl
