#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "mmrl/dynamics.hpp"
#include "mmrl/scoring.hpp"

namespace mmrl {

// True at the first step of every block of M steps: mod(k - 1, M) = 0.
inline bool is_switch_step(long k, int M) { return (k - 1) % M == 0; }

struct S1State {
  ScoreBoard board;
  std::size_t current_index = 0;
  long last_switch_step = 0;
};

struct LearnerStep {
  Vector u;
  std::size_t chosen = 0;
  double sigma_u_sq = 0.0;
};

// Finite candidate set: resample the model index by softmax of the scores
// at switch steps, hold it otherwise, act with its policy plus excitation.
// The board is not updated here.
LearnerStep s1_step(S1State& state, long k, const ExcitationSchedule& sched,
                    const CandidateSet& models, const Vector& x, RandomState& rng);

using IndexDistance = std::function<double(std::size_t, std::size_t)>;

// Greedy epsilon-packing seeded with f_star: scans the dictionary in index
// order and keeps every member farther than epsilon from all kept members.
// The result is pairwise > epsilon apart and epsilon-covers the dictionary.
std::vector<std::size_t> greedy_cover(std::size_t dictionary_size, std::size_t f_star,
                                      double epsilon, const IndexDistance& distance);

struct S2State {
  S1State base;
  std::vector<std::size_t> cover;
};

LearnerStep s2_step(S2State& state, long k, const ExcitationSchedule& sched,
                    const CandidateSet& dictionary, double epsilon,
                    const IndexDistance& distance, const Vector& x, RandomState& rng);

// Weighted least-squares statistics for x' = theta' phi.
struct RlsState {
  Matrix info;   // sum w phi phi'
  Matrix cross;  // sum w phi x_next'
  long count = 0;
  double ridge = 1e-8;

  static RlsState empty(Eigen::Index p, Eigen::Index d_x, double ridge) {
    return RlsState{Matrix::Zero(p, p), Matrix::Zero(p, d_x), 0, ridge};
  }
};

void rls_update(RlsState& rls, const Vector& phi, const Vector& x_next, double w);

// argmin_theta sum w |x_next - theta' phi|^2 + ridge |theta|^2
Matrix posterior_mean(const RlsState& rls);

struct BallDomain {
  Matrix center;
  double radius = std::numeric_limits<double>::infinity();
};
struct BoxDomain {
  Matrix lo;
  Matrix hi;
};
using ParamDomain = std::variant<BallDomain, BoxDomain>;

bool contains(const ParamDomain& domain, const Matrix& theta);
Matrix project(const ParamDomain& domain, const Matrix& theta);

// Box of entry_interval ranges around a nominal parameter.
BoxDomain box_around(const Matrix& nominal, double abs_err, double rel_err);

struct ThetaDraw {
  Matrix theta;
  int attempts = 0;
  bool projected = false;
};

// theta ~ N(mean, (1/(2 eta)) (info + ridge I)^-1) per output column,
// truncated to the domain by rejection. After max_attempts misses the mean
// projected onto the domain is returned instead.
ThetaDraw sample_posterior_theta(const RlsState& rls, double eta, const ParamDomain& domain,
                                 int max_attempts, RandomState& rng);

struct S3Options {
  Eigen::Index d_x = 0;
  Eigen::Index d_u = 0;
  double eta = 10.0;
  int max_attempts = 10000;
  int synthesis_retries = 10;
};

struct S3State {
  RlsState rls;
  Matrix theta;
  Policy policy;
  long last_switch_step = 0;
  bool has_policy = false;
};

struct S3Step {
  Vector u;
  double sigma_u_sq = 0.0;
  bool resampled = false;
  int synthesis_failures = 0;  // DARE failures during this step's resampling
  bool held_previous = false;  // all retries failed, previous policy kept
  int attempts = 0;            // rejection-sampling attempts of the accepted draw
};

S3State s3_initial_state(const S3Options& options, double ridge);

// Parametric learner over stacked-linear models: at switch steps draw theta
// from the truncated posterior and synthesize its LQR policy. The RLS
// statistics are updated by the caller after each transition.
S3Step s3_step(S3State& state, long k, const ExcitationSchedule& sched, const S3Options& options,
               const ParamDomain& domain, const Vector& x, RandomState& rng);

}  // namespace mmrl
