#include "mmrl/dynamics.hpp"

#include <algorithm>
#include <string>

#include "mmrl/errors.hpp"

namespace mmrl {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace

Eigen::Index feature_dim(FeatureMapId map, Eigen::Index d_x, Eigen::Index d_u) {
  const Eigen::Index n = d_x + d_u;
  switch (map) {
    case FeatureMapId::StackedLinear:
      return n;
    case FeatureMapId::Quadratic:
      return n + n * (n + 1) / 2;
  }
  return n;
}

Vector features(FeatureMapId map, const Vector& x, const Vector& u) {
  const Eigen::Index n = x.size() + u.size();
  Vector phi(feature_dim(map, x.size(), u.size()));
  phi.head(x.size()) = x;
  phi.segment(x.size(), u.size()) = u;
  if (map == FeatureMapId::Quadratic) {
    const Vector z = phi.head(n);
    Eigen::Index at = n;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) phi[at++] = z[i] * z[j];
  }
  return phi;
}

DynamicsModel::DynamicsModel(LinearModel m) : kind_(std::move(m)) {
  const auto& lin = std::get<LinearModel>(kind_);
  require(lin.A.rows() == lin.A.cols(), "LinearModel: A must be square");
  require(lin.B.rows() == lin.A.rows(), "LinearModel: B rows must match A");
}

DynamicsModel::DynamicsModel(FeatureLinearModel m) : kind_(std::move(m)) {
  const auto& fl = std::get<FeatureLinearModel>(kind_);
  require(fl.theta.rows() == feature_dim(fl.map, fl.d_x, fl.d_u),
          "FeatureLinearModel: theta rows must equal the feature dimension");
  require(fl.theta.cols() == fl.d_x, "FeatureLinearModel: theta cols must equal d_x");
}

Eigen::Index DynamicsModel::d_x() const {
  return is_linear() ? linear().A.rows() : feature_linear().d_x;
}

Eigen::Index DynamicsModel::d_u() const {
  return is_linear() ? linear().B.cols() : feature_linear().d_u;
}

Vector predict(const DynamicsModel& model, const Vector& x, const Vector& u) {
  require(x.size() == model.d_x(), "predict: state dimension mismatch");
  require(u.size() == model.d_u(), "predict: input dimension mismatch");
  if (model.is_linear()) {
    const auto& m = model.linear();
    Vector out = m.A * x;
    out.noalias() += m.B * u;
    return out;
  }
  const auto& m = model.feature_linear();
  return m.theta.transpose() * features(m.map, x, u);
}

Vector step_env(const DynamicsModel& truth, const Vector& x, const Vector& u, double sigma,
                RandomState& rng) {
  Vector next = predict(truth, x, u);
  next += rng.normal_vector(next.size(), sigma);
  return next;
}

Vector apply_policy(const Policy& policy, const Vector& x, double sigma_u, RandomState& rng) {
  require(policy.K.cols() == x.size(), "apply_policy: gain columns must match state");
  Vector u = -(policy.K * x);
  u += rng.normal_vector(u.size(), sigma_u);
  return u;
}

FeatureLinearModel to_feature_linear(const LinearModel& model) {
  const auto d_x = model.A.rows();
  const auto d_u = model.B.cols();
  Matrix stacked(d_x, d_x + d_u);
  stacked << model.A, model.B;
  return FeatureLinearModel{stacked.transpose(), FeatureMapId::StackedLinear, d_x, d_u};
}

LinearModel from_stacked_theta(const Matrix& theta, Eigen::Index d_x, Eigen::Index d_u) {
  require(theta.rows() >= d_x + d_u && theta.cols() == d_x,
          "from_stacked_theta: theta shape does not hold (A, B)");
  const Matrix t = theta.topRows(d_x + d_u).transpose();
  return LinearModel{t.leftCols(d_x), t.rightCols(d_u)};
}

EntryInterval entry_interval(double a, double abs_err, double rel_err) {
  const double e1 = (1.0 - rel_err) * a - abs_err;
  const double e2 = (1.0 + rel_err) * a + abs_err;
  return {std::min(e1, e2), std::max(e1, e2)};
}

double model_distance(const DynamicsModel& a, const DynamicsModel& b) {
  if (a.is_linear() && b.is_linear()) {
    return std::sqrt(frobenius_sq_diff(a.linear().A, b.linear().A) +
                     frobenius_sq_diff(a.linear().B, b.linear().B));
  }
  const Matrix ta = a.is_linear() ? to_feature_linear(a.linear()).theta : a.feature_linear().theta;
  const Matrix tb = b.is_linear() ? to_feature_linear(b.linear()).theta : b.feature_linear().theta;
  return std::sqrt(frobenius_sq_diff(ta, tb));
}

Policy lqr_policy(const LinearModel& model) {
  const auto n = model.A.rows();
  const auto m = model.B.cols();
  auto sol = dare_solve<double>(model.A, model.B, Matrix::Identity(n, n), Matrix::Identity(m, m));
  return Policy{std::move(sol.K)};
}

namespace {

Matrix sample_around(const Matrix& nominal, double abs_err, double rel_err, RandomState& rng) {
  Matrix out(nominal.rows(), nominal.cols());
  for (Eigen::Index j = 0; j < nominal.cols(); ++j) {
    for (Eigen::Index i = 0; i < nominal.rows(); ++i) {
      const auto [lo, hi] = entry_interval(nominal(i, j), abs_err, rel_err);
      out(i, j) = std::min(hi, lo + (hi - lo) * rng.uniform());
    }
  }
  return out;
}

}  // namespace

CandidateSet generate_candidates(const LinearSystem& truth, std::size_t m,
                                 const CandidateOptions& options, const RandomState& rng) {
  if (m == 0) throw ValidationError("generate_candidates: m must be >= 1");
  if (options.abs_err < 0 || options.rel_err < 0)
    throw ValidationError("generate_candidates: error ranges must be >= 0");

  CandidateSet set;
  set.models.reserve(m);
  set.policies.reserve(m);
  if (options.include_truth) {
    RandomState pick = rng.split(m);
    set.truth_index = std::min<std::size_t>(m - 1, static_cast<std::size_t>(pick.uniform() * m));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (set.truth_index == i) {
      set.models.emplace_back(truth);
      set.policies.push_back(lqr_policy(truth));
      continue;
    }
    RandomState stream = rng.split(i);
    bool done = false;
    for (int attempt = 0; attempt < options.resample_attempts && !done; ++attempt) {
      LinearModel cand{sample_around(truth.A, options.abs_err, options.rel_err, stream),
                       sample_around(truth.B, options.abs_err, options.rel_err, stream)};
      try {
        Policy policy = lqr_policy(cand);
        set.models.emplace_back(std::move(cand));
        set.policies.push_back(std::move(policy));
        done = true;
      } catch (const NonConvergence&) {
      }
    }
    if (!done)
      throw CandidateUnstabilizable("generate_candidates: candidate " + std::to_string(i) +
                                    " not stabilizable after " +
                                    std::to_string(options.resample_attempts) + " draws");
  }
  return set;
}

LinearSystem leaky_integrator_chain(int blocks, int block_dim, double diag) {
  if (blocks < 1 || block_dim < 1)
    throw ValidationError("leaky_integrator_chain: blocks and block_dim must be >= 1");
  Matrix A0 = diag * Matrix::Identity(block_dim, block_dim);
  for (int i = 0; i + 1 < block_dim; ++i) A0(i, i + 1) = 1.0;
  Matrix B0 = Matrix::Zero(block_dim, 1);
  B0(block_dim - 1, 0) = 1.0;
  const Matrix I = Matrix::Identity(blocks, blocks);
  return LinearSystem{kron(I, A0), kron(I, B0)};
}

}  // namespace mmrl
