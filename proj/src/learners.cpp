#include "mmrl/learners.hpp"

#include <algorithm>
#include <cmath>

#include "mmrl/errors.hpp"

namespace mmrl {

LearnerStep s1_step(S1State& state, long k, const ExcitationSchedule& sched,
                    const CandidateSet& models, const Vector& x, RandomState& rng) {
  if (models.size() == 0) throw EmptyInput("s1_step: empty candidate set");
  if (is_switch_step(k, sched.M)) {
    state.current_index = softmax_sample(state.board, sched.eta, rng).index;
    state.last_switch_step = k;
  }
  LearnerStep step;
  step.chosen = state.current_index;
  step.sigma_u_sq = excitation_sigma_sq(sched, k);
  step.u = apply_policy(models.policies[step.chosen], x, std::sqrt(step.sigma_u_sq), rng);
  return step;
}

std::vector<std::size_t> greedy_cover(std::size_t dictionary_size, std::size_t f_star,
                                      double epsilon, const IndexDistance& distance) {
  std::vector<std::size_t> cover{f_star};
  // Picks of the lowest-indexed admissible member are increasing in index and
  // admissibility only shrinks, so one ordered scan reproduces the loop.
  for (std::size_t i = 0; i < dictionary_size; ++i) {
    if (i == f_star) continue;
    const bool far = std::all_of(cover.begin(), cover.end(),
                                 [&](std::size_t c) { return distance(i, c) > epsilon; });
    if (far) cover.push_back(i);
  }
  return cover;
}

LearnerStep s2_step(S2State& state, long k, const ExcitationSchedule& sched,
                    const CandidateSet& dictionary, double epsilon,
                    const IndexDistance& distance, const Vector& x, RandomState& rng) {
  if (dictionary.size() == 0) throw EmptyInput("s2_step: empty dictionary");
  auto& base = state.base;
  if (is_switch_step(k, sched.M)) {
    Eigen::Index f_star = 0;
    base.board.scores.minCoeff(&f_star);  // first minimum
    state.cover = greedy_cover(dictionary.size(), static_cast<std::size_t>(f_star), epsilon,
                               distance);
    Vector restricted(static_cast<Eigen::Index>(state.cover.size()));
    for (std::size_t j = 0; j < state.cover.size(); ++j)
      restricted[static_cast<Eigen::Index>(j)] =
          base.board.scores[static_cast<Eigen::Index>(state.cover[j])];
    base.current_index = state.cover[softmax_sample(restricted, sched.eta, rng).index];
    base.last_switch_step = k;
  }
  LearnerStep step;
  step.chosen = base.current_index;
  step.sigma_u_sq = excitation_sigma_sq(sched, k);
  step.u = apply_policy(dictionary.policies[step.chosen], x, std::sqrt(step.sigma_u_sq), rng);
  return step;
}

void rls_update(RlsState& rls, const Vector& phi, const Vector& x_next, double w) {
  if (phi.size() != rls.info.rows() || x_next.size() != rls.cross.cols())
    throw DimensionMismatch("rls_update: feature or state dimension mismatch");
  rls.info.noalias() += w * phi * phi.transpose();
  rls.cross.noalias() += w * phi * x_next.transpose();
  ++rls.count;
}

namespace {

Eigen::LLT<Matrix> regularized_factor(const RlsState& rls) {
  const Matrix reg = rls.info + rls.ridge * Matrix::Identity(rls.info.rows(), rls.info.cols());
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success)
    throw SingularInformation("information matrix is not positive definite");
  return llt;
}

}  // namespace

Matrix posterior_mean(const RlsState& rls) { return regularized_factor(rls).solve(rls.cross); }

bool contains(const ParamDomain& domain, const Matrix& theta) {
  if (const auto* ball = std::get_if<BallDomain>(&domain)) {
    if (std::isinf(ball->radius)) return true;
    return (theta - ball->center).norm() <= ball->radius;
  }
  const auto& box = std::get<BoxDomain>(domain);
  return (theta.array() >= box.lo.array()).all() && (theta.array() <= box.hi.array()).all();
}

Matrix project(const ParamDomain& domain, const Matrix& theta) {
  if (const auto* ball = std::get_if<BallDomain>(&domain)) {
    const double dist = (theta - ball->center).norm();
    if (dist <= ball->radius) return theta;
    return ball->center + (ball->radius / dist) * (theta - ball->center);
  }
  const auto& box = std::get<BoxDomain>(domain);
  return theta.cwiseMax(box.lo).cwiseMin(box.hi);
}

BoxDomain box_around(const Matrix& nominal, double abs_err, double rel_err) {
  BoxDomain box{Matrix(nominal.rows(), nominal.cols()), Matrix(nominal.rows(), nominal.cols())};
  for (Eigen::Index j = 0; j < nominal.cols(); ++j) {
    for (Eigen::Index i = 0; i < nominal.rows(); ++i) {
      const auto [lo, hi] = entry_interval(nominal(i, j), abs_err, rel_err);
      box.lo(i, j) = lo;
      box.hi(i, j) = hi;
    }
  }
  return box;
}

ThetaDraw sample_posterior_theta(const RlsState& rls, double eta, const ParamDomain& domain,
                                 int max_attempts, RandomState& rng) {
  const auto llt = regularized_factor(rls);
  const Matrix mean = llt.solve(rls.cross);
  const double scale = std::sqrt(1.0 / (2.0 * eta));
  const auto upper = llt.matrixU();  // L'
  ThetaDraw draw;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    Matrix z(mean.rows(), mean.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j) = rng.normal_vector(z.rows());
    // L' y = z gives cov(y) = (L L')^-1.
    Matrix theta = mean + scale * upper.solve(z);
    if (contains(domain, theta)) {
      draw.theta = std::move(theta);
      draw.attempts = attempt;
      return draw;
    }
  }
  draw.theta = project(domain, mean);
  draw.attempts = max_attempts;
  draw.projected = true;
  return draw;
}

S3State s3_initial_state(const S3Options& options, double ridge) {
  const Eigen::Index p = options.d_x + options.d_u;
  S3State state;
  state.rls = RlsState::empty(p, options.d_x, ridge);
  state.theta = Matrix::Zero(p, options.d_x);
  state.policy = Policy{Matrix::Zero(options.d_u, options.d_x)};
  return state;
}

S3Step s3_step(S3State& state, long k, const ExcitationSchedule& sched, const S3Options& options,
               const ParamDomain& domain, const Vector& x, RandomState& rng) {
  S3Step step;
  if (is_switch_step(k, sched.M)) {
    step.resampled = true;
    bool synthesized = false;
    ThetaDraw last;
    for (int attempt = 0; attempt < options.synthesis_retries && !synthesized; ++attempt) {
      last = sample_posterior_theta(state.rls, options.eta, domain, options.max_attempts, rng);
      try {
        Policy policy = lqr_policy(from_stacked_theta(last.theta, options.d_x, options.d_u));
        state.theta = last.theta;
        state.policy = std::move(policy);
        state.has_policy = true;
        step.attempts = last.attempts;
        synthesized = true;
      } catch (const NonConvergence&) {
        ++step.synthesis_failures;
      }
    }
    if (!synthesized) {
      step.held_previous = true;
      // No earlier policy to hold: keep the zero gain but track the draw.
      if (!state.has_policy) state.theta = last.theta;
    }
    state.last_switch_step = k;
  }
  step.sigma_u_sq = excitation_sigma_sq(sched, k);
  step.u = apply_policy(state.policy, x, std::sqrt(step.sigma_u_sq), rng);
  return step;
}

}  // namespace mmrl
