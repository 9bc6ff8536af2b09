#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "mmrl/control_linalg.hpp"
#include "mmrl/random.hpp"

namespace mmrl {

// x' = A x + B u
struct LinearModel {
  Matrix A;
  Matrix B;
};
using LinearSystem = LinearModel;

enum class FeatureMapId {
  StackedLinear,  // phi = (x, u)
  Quadratic,      // phi = (x, u, z_i z_j for i <= j) with z = (x, u)
};

Eigen::Index feature_dim(FeatureMapId map, Eigen::Index d_x, Eigen::Index d_u);
Vector features(FeatureMapId map, const Vector& x, const Vector& u);

// x' = theta' phi(x, u), theta is feature_dim x d_x.
struct FeatureLinearModel {
  Matrix theta;
  FeatureMapId map = FeatureMapId::StackedLinear;
  Eigen::Index d_x = 0;
  Eigen::Index d_u = 0;
};

class DynamicsModel {
 public:
  DynamicsModel(LinearModel m);
  DynamicsModel(FeatureLinearModel m);

  [[nodiscard]] Eigen::Index d_x() const;
  [[nodiscard]] Eigen::Index d_u() const;
  [[nodiscard]] bool is_linear() const { return std::holds_alternative<LinearModel>(kind_); }
  [[nodiscard]] const LinearModel& linear() const { return std::get<LinearModel>(kind_); }
  [[nodiscard]] const FeatureLinearModel& feature_linear() const {
    return std::get<FeatureLinearModel>(kind_);
  }

 private:
  std::variant<LinearModel, FeatureLinearModel> kind_;
};

// Linear state feedback u = -K x.
struct Policy {
  Matrix K;
};

struct CandidateSet {
  std::vector<DynamicsModel> models;
  std::vector<Policy> policies;  // aligned with models
  std::optional<std::size_t> truth_index;

  [[nodiscard]] std::size_t size() const { return models.size(); }
};

Vector predict(const DynamicsModel& model, const Vector& x, const Vector& u);

// f(x, u) + n with n ~ N(0, sigma^2 I); draws exactly d_x normals.
Vector step_env(const DynamicsModel& truth, const Vector& x, const Vector& u, double sigma,
                RandomState& rng);

// -K x + n_u with n_u ~ N(0, sigma_u^2 I); draws exactly d_u normals.
Vector apply_policy(const Policy& policy, const Vector& x, double sigma_u, RandomState& rng);

// Stacked-linear encoding of (A, B): theta = [A B]'.
FeatureLinearModel to_feature_linear(const LinearModel& model);
LinearModel from_stacked_theta(const Matrix& theta, Eigen::Index d_x, Eigen::Index d_u);

// Interval [min, max] of {(1 - rel) a - abs, (1 + rel) a + abs}.
struct EntryInterval {
  double lo;
  double hi;
};
EntryInterval entry_interval(double a, double abs_err, double rel_err);

// Frobenius distance on stacked (A, B), or on theta for feature-linear models.
double model_distance(const DynamicsModel& a, const DynamicsModel& b);

struct CandidateOptions {
  double abs_err = 0.1;
  double rel_err = 0.2;
  bool include_truth = true;
  int resample_attempts = 20;
};

// m linear candidates with entries uniform in entry_interval of the truth,
// each paired with its LQR policy for Q = I, R = I. Candidate i draws from
// rng.split(i), so the set does not depend on evaluation order.
CandidateSet generate_candidates(const LinearSystem& truth, std::size_t m,
                                 const CandidateOptions& options, const RandomState& rng);

Policy lqr_policy(const LinearModel& model);

// I_blocks (x) A0, I_blocks (x) B0 with A0 = diag * I + superdiagonal ones and
// B0 = e_last (block_dim x 1).
LinearSystem leaky_integrator_chain(int blocks, int block_dim, double diag);

}  // namespace mmrl
