#pragma once

#include <cstddef>

#include "mmrl/dynamics.hpp"

namespace mmrl {

// Accumulated normalized one-step prediction errors, one per candidate.
struct ScoreBoard {
  Vector scores;
  double b_sq_inv = 0.0;  // 1 / b^2; zero means b -> infinity
  long steps_seen = 0;

  static ScoreBoard zeros(std::size_t m, double b_sq_inv = 0.0) {
    return ScoreBoard{Vector::Zero(static_cast<Eigen::Index>(m)), b_sq_inv, 0};
  }
};

// 1 / (1 + |(x, u)|^2 / b^2)
double normalization_weight(const Vector& x, const Vector& u, double b_sq_inv);

// s_i += |x_next - f_i(x, u)|^2 / (1 + |(x, u)|^2 / b^2)
void score_update(ScoreBoard& board, const CandidateSet& models, const Vector& x, const Vector& u,
                  const Vector& x_next);

struct SoftmaxDraw {
  std::size_t index = 0;
  Vector probs;
};

// p_i = exp(-eta (s_i - min s)) / Z
Vector softmax_probs(const Vector& scores, double eta);

// Inverse CDF on one uniform draw.
SoftmaxDraw softmax_sample(const Vector& scores, double eta, RandomState& rng);
inline SoftmaxDraw softmax_sample(const ScoreBoard& board, double eta, RandomState& rng) {
  return softmax_sample(board.scores, eta, rng);
}

enum class ScheduleMode {
  Prop4,    // 4/(eta d_u c_e M) (2/q + log_count/q^2)
  AppB_S1,  // 10/(eta d_u M) (2/q + log_count/q^2)
  S2_Thm6,  // 4/(eta c_e d_u M eps^2) (2/q + log_count/q^2)
  S3_Thm7,  // as S2_Thm6, log_count = p
  None,     // no excitation
};

struct ExcitationSchedule {
  ScheduleMode mode = ScheduleMode::AppB_S1;
  double eta = 10.0;
  int M = 2;
  double c_e = 1.0;
  int d_u = 1;
  double log_count = 0.0;  // ln m, ln 2m, ln m(eps) or p depending on mode
  double epsilon = 1.0;
};

// q = ceil(k / M) for k >= 1.
long block_index(long k, int M);

double excitation_sigma_sq(const ExcitationSchedule& sched, long k);

// min(1, M^2 / (k - M)^2) for k >= M + 1, else 1.
double misid_bound(int M, long k);

}  // namespace mmrl
