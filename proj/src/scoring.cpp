#include "mmrl/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "mmrl/errors.hpp"

namespace mmrl {

double normalization_weight(const Vector& x, const Vector& u, double b_sq_inv) {
  return 1.0 / (1.0 + (x.squaredNorm() + u.squaredNorm()) * b_sq_inv);
}

void score_update(ScoreBoard& board, const CandidateSet& models, const Vector& x, const Vector& u,
                  const Vector& x_next) {
  if (board.scores.size() != static_cast<Eigen::Index>(models.size()))
    throw DimensionMismatch("score_update: board size differs from candidate count");
  if (x_next.size() != x.size())
    throw DimensionMismatch("score_update: x_next dimension differs from x");
  const double w = normalization_weight(x, u, board.b_sq_inv);
  for (std::size_t i = 0; i < models.size(); ++i) {
    board.scores[static_cast<Eigen::Index>(i)] +=
        w * (x_next - predict(models.models[i], x, u)).squaredNorm();
  }
  ++board.steps_seen;
}

Vector softmax_probs(const Vector& scores, double eta) {
  if (scores.size() == 0) throw EmptyInput("softmax_probs: no scores");
  const double lowest = scores.minCoeff();
  Vector p = (-eta * (scores.array() - lowest)).exp().matrix();
  return p / p.sum();
}

SoftmaxDraw softmax_sample(const Vector& scores, double eta, RandomState& rng) {
  SoftmaxDraw draw;
  draw.probs = softmax_probs(scores, eta);
  const double target = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < draw.probs.size(); ++i) {
    if (draw.probs[i] <= 0.0) continue;
    last_positive = static_cast<std::size_t>(i);
    cumulative += draw.probs[i];
    if (target < cumulative) {
      draw.index = static_cast<std::size_t>(i);
      return draw;
    }
  }
  // Rounding left the total just under the draw.
  draw.index = last_positive;
  return draw;
}

long block_index(long k, int M) { return (k + M - 1) / M; }

double excitation_sigma_sq(const ExcitationSchedule& sched, long k) {
  if (sched.mode == ScheduleMode::None) return 0.0;
  const double q = static_cast<double>(block_index(std::max(k, 1L), sched.M));
  const double shape = 2.0 / q + sched.log_count / (q * q);
  const double base = sched.eta * sched.d_u * sched.M;
  switch (sched.mode) {
    case ScheduleMode::Prop4:
      return 4.0 / (base * sched.c_e) * shape;
    case ScheduleMode::AppB_S1:
      return 10.0 / base * shape;
    case ScheduleMode::S2_Thm6:
    case ScheduleMode::S3_Thm7:
      return 4.0 / (base * sched.c_e * sched.epsilon * sched.epsilon) * shape;
    case ScheduleMode::None:
      break;
  }
  return 0.0;
}

double misid_bound(int M, long k) {
  if (k < M + 1) return 1.0;
  const double gap = static_cast<double>(k - M);
  return std::min(1.0, static_cast<double>(M) * M / (gap * gap));
}

}  // namespace mmrl
