#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mmrl/config.hpp"
#include "mmrl/dynamics.hpp"
#include "mmrl/learners.hpp"
#include "mmrl/scoring.hpp"

namespace mmrl {

// Steady-state benchmark of the optimal policy for the truth.
struct BenchmarkGamma {
  double gamma = 0.0;  // tr(P) sigma^2
  Matrix P;
  Matrix K;
};

BenchmarkGamma compute_gamma(const LinearSystem& truth, double sigma);

// One closed-loop run; series are indexed by k - 1.
struct TrajectoryLog {
  std::uint64_t realization = 0;
  Matrix states;  // d_x x N, column k - 1 holds x_k
  std::vector<double> x_norm_sq;
  std::vector<double> u_norm_sq;
  std::vector<double> stage_cost;
  std::vector<double> cum_cost;
  std::vector<double> cum_regret;
  std::vector<double> chosen_or_theta_dist;  // model index (s1/s2) or |theta_k - theta*| (s3)
  std::vector<double> sigma_uk_sq;
  std::vector<std::uint8_t> misid;
  std::vector<double> value;            // x_k' P x_k with the true P
  std::vector<double> opt_cum_cost;     // same-noise optimal policy, when requested
  std::vector<int> synthesis_failures;  // s3 DARE failures per step
  std::vector<std::uint8_t> held_policy;

  [[nodiscard]] std::size_t size() const { return stage_cost.size(); }
};

// Everything a realization needs that does not depend on its seed.
struct Experiment {
  SimConfig config;
  LinearSystem truth;
  BenchmarkGamma benchmark;
  ExcitationSchedule schedule;
  std::optional<CandidateSet> candidates;  // shared set (s1/s2, not per_realization)
  std::optional<ParamDomain> domain;        // s3
  Matrix theta_star;                        // s3
  double b_sq_inv = 0.0;
  double misid_epsilon = 0.0;  // s2 cover radius or s3 parameter threshold
};

LinearSystem build_system(const SystemConfig& system);

// Resolves all "auto" settings (c_e, log_count, epsilon) and pre-computes the
// shared candidate set and truth LQR solution.
Experiment prepare_experiment(const SimConfig& config);

// c_e = min over non-truth candidates of |B_i - B|_F^2.
double excitation_constant(const CandidateSet& set, const LinearSystem& truth);

// Stream of realization r: derived from (master_seed, r) only.
RandomState realization_stream(std::uint64_t master_seed, std::uint64_t realization);

// x_1 = 0; for k = 1..N: learner step, environment step, score/RLS update, log.
TrajectoryLog run_episode(const Experiment& experiment, std::uint64_t realization);
TrajectoryLog run_episode(const SimConfig& config, std::uint64_t realization);

// Runs realizations [0, count) on `threads` workers (0 = hardware); results
// are ordered by realization index and independent of scheduling.
std::vector<TrajectoryLog> run_realizations(const Experiment& experiment, int count, int threads);

struct MonteCarloSummary {
  std::size_t realizations = 0;
  std::vector<double> mean_regret;
  std::vector<double> misid_freq;
  std::vector<double> mean_V;
  std::vector<double> bound_series;
  std::vector<double> mean_opt_regret;  // empty unless logs carry the comparator
};

MonteCarloSummary aggregate(const std::vector<TrajectoryLog>& logs, int M, double gamma = 0.0);

struct PeCheck {
  double lhs_estimate = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
};

// Monte Carlo estimate of E|f_i(x_k, u_k) - f(x_k, u_k)|^2 from x_1 = 0 under
// u = -Kq x + n_u, against the Gramian lower bound.
PeCheck pe_lower_bound_check(const LinearSystem& truth, const LinearSystem& candidate,
                             const Matrix& Kq, double sigma_u, double sigma, int k, int rollouts,
                             RandomState rng);

// True iff the mean of x_k' P x_k over logs stays below c_bound for every k.
bool boundedness_check(const std::vector<TrajectoryLog>& logs, const Matrix& P, double c_bound);

struct ConvergenceStats {
  std::vector<long> last_misid;  // per log, 0 if never misidentified
  double median = 0.0;
  double p90 = 0.0;
  long max = 0;
};

ConvergenceStats finite_time_convergence_stat(const std::vector<TrajectoryLog>& logs);

// Linear-interpolated quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

}  // namespace mmrl
