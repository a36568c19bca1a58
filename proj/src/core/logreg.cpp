#include "enrollcast/logreg.hpp"

#include <cmath>

#include "enrollcast/error.hpp"

namespace enrollcast {

void FitConfig::validate() const {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw Error(ErrorCode::BadRequest, "ridge must be finite and >= 0", "ridge");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::BadRequest, "tolerance must be > 0", "tolerance");
  if (max_iterations < 1) throw Error(ErrorCode::BadRequest, "max_iterations must be >= 1", "max_iterations");
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_dims(const Eigen::VectorXd& weights, const DesignMatrix& m) {
  if (m.x.cols() != weights.size() + 1 || m.y.size() != m.x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter vector has " + std::to_string(weights.size()) +
                                                  " weights but the matrix has " + std::to_string(m.x.cols() - 1) +
                                                  " features");
  }
}

// Parameters are held as theta = [b, w], aligned with the columns of x.
double objective_theta(const Eigen::VectorXd& theta, const DesignMatrix& m, double ridge, bool penalize_intercept) {
  const Eigen::VectorXd eta = m.x * theta;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) loss += softplus(eta(i)) - m.y(i) * eta(i);
  const double penalty = penalize_intercept ? theta.squaredNorm() : theta.tail(theta.size() - 1).squaredNorm();
  return loss + 0.5 * ridge * penalty;
}

Eigen::VectorXd gradient_theta(const Eigen::VectorXd& theta, const DesignMatrix& m, double ridge,
                               bool penalize_intercept) {
  const Eigen::VectorXd eta = m.x * theta;
  Eigen::VectorXd residual(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) residual(i) = sigmoid(eta(i)) - m.y(i);
  Eigen::VectorXd g = m.x.transpose() * residual;
  Eigen::VectorXd shrink = ridge * theta;
  if (!penalize_intercept) shrink(0) = 0.0;
  return g + shrink;
}

Eigen::VectorXd pack(const Eigen::VectorXd& weights, double intercept) {
  Eigen::VectorXd theta(weights.size() + 1);
  theta(0) = intercept;
  theta.tail(weights.size()) = weights;
  return theta;
}

}  // namespace

double objective(const Eigen::VectorXd& weights, double intercept, const DesignMatrix& m, double ridge,
                 bool penalize_intercept) {
  check_dims(weights, m);
  return objective_theta(pack(weights, intercept), m, ridge, penalize_intercept);
}

Gradient gradient(const Eigen::VectorXd& weights, double intercept, const DesignMatrix& m, double ridge,
                  bool penalize_intercept) {
  check_dims(weights, m);
  const Eigen::VectorXd g = gradient_theta(pack(weights, intercept), m, ridge, penalize_intercept);
  return {g.tail(weights.size()), g(0)};
}

LogisticModel fit(const DesignMatrix& m, const FitConfig& config) {
  config.validate();
  const Eigen::Index n = m.x.rows();
  const Eigen::Index p = m.x.cols();
  if (p < 1 || m.y.size() != n) throw Error(ErrorCode::DimensionMismatch, "design matrix and labels disagree");
  if (!m.x.allFinite() || !m.y.allFinite()) throw Error(ErrorCode::Degenerate, "design matrix has non-finite entries");
  const double positives = m.y.sum();
  if (n < 2 || positives <= 0.0 || positives >= static_cast<double>(n)) {
    throw Error(ErrorCode::SingleClass, "training labels contain a single class");
  }

  Eigen::VectorXd penalty_mask = Eigen::VectorXd::Ones(p);
  if (!config.penalize_intercept) penalty_mask(0) = 0.0;
  const double ridge = config.ridge;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  double current = objective_theta(theta, m, ridge, config.penalize_intercept);
  bool converged = false;
  int iterations = 0;
  double hessian_norm = 0.0;

  Eigen::VectorXd eta(n);
  Eigen::VectorXd prob(n);
  Eigen::MatrixXd weighted_x(n, p);
  Eigen::MatrixXd hessian(p, p);

  for (int it = 1; it <= config.max_iterations; ++it) {
    iterations = it;
    eta.noalias() = m.x * theta;
    for (Eigen::Index i = 0; i < n; ++i) prob(i) = sigmoid(eta(i));
    Eigen::VectorXd grad = m.x.transpose() * (prob - m.y);
    grad += ridge * penalty_mask.cwiseProduct(theta);

    // H = X^T diag(p(1-p)) X + ridge * mask
    const Eigen::ArrayXd root_w = (prob.array() * (1.0 - prob.array())).sqrt();
    weighted_x = m.x.array().colwise() * root_w;
    hessian.setZero();
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(weighted_x.transpose());
    hessian = hessian.selfadjointView<Eigen::Lower>();
    hessian.diagonal() += ridge * penalty_mask;
    hessian_norm = hessian.cwiseAbs().rowwise().sum().maxCoeff();

    Eigen::LLT<Eigen::MatrixXd> llt(hessian);
    if (llt.info() != Eigen::Success) {
      if (it == 1) throw Error(ErrorCode::Degenerate, "Hessian is not positive definite");
      break;
    }
    const Eigen::VectorXd step = -llt.solve(grad);
    if (!step.allFinite()) throw Error(ErrorCode::Degenerate, "Newton step is not finite");

    const double full_change = step.cwiseAbs().maxCoeff();
    if (full_change < config.tolerance) {
      theta += step;
      current = objective_theta(theta, m, ridge, config.penalize_intercept);
      converged = true;
      break;
    }

    // Halve until the objective does not increase.
    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate(p);
    double candidate_value = current;
    for (int h = 0; h < 60; ++h, scale *= 0.5) {
      candidate = theta + scale * step;
      candidate_value = objective_theta(candidate, m, ridge, config.penalize_intercept);
      if (candidate_value <= current) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable decrease along the Newton direction: the iterate is
      // at the optimum to working precision.
      converged = grad.cwiseAbs().maxCoeff() <= 10.0 * config.tolerance * (1.0 + hessian_norm);
      break;
    }
    theta = candidate;
    current = candidate_value;
    if (scale * full_change < config.tolerance) {
      converged = scale == 1.0 || grad.cwiseAbs().maxCoeff() <= 10.0 * config.tolerance * (1.0 + hessian_norm);
      break;
    }
  }

  if (!theta.allFinite()) throw Error(ErrorCode::Degenerate, "fit produced non-finite parameters");

  LogisticModel model;
  model.intercept = theta(0);
  model.weights = theta.tail(p - 1);
  model.feature_names = m.feature_names;
  model.ridge = ridge;
  model.iterations_used = iterations;
  model.converged = converged;
  model.final_objective = current;
  model.gradient_norm = gradient_theta(theta, m, ridge, config.penalize_intercept).cwiseAbs().maxCoeff();
  model.gradient_bound = 10.0 * config.tolerance * (1.0 + hessian_norm);
  return model;
}

namespace {

double linear_predictor(const LogisticModel& model, const double* row, Eigen::Index stride) {
  double eta = model.intercept;
  for (Eigen::Index j = 0; j < model.weights.size(); ++j) eta += model.weights(j) * row[j * stride];
  return eta;
}

}  // namespace

double predict_proba(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& row) {
  if (row.size() != model.weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "row has " + std::to_string(row.size()) + " values, model expects " +
                                                  std::to_string(model.weights.size()));
  }
  return sigmoid(linear_predictor(model, row.data(), row.innerStride()));
}

Outcome predict_label(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& row, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::BadRequest, "threshold must lie in (0, 1)");
  return predict_proba(model, row) >= threshold ? Outcome::enrolled : Outcome::not_enrolled;
}

std::vector<double> predict_proba(const LogisticModel& model, const DesignMatrix& m) {
  if (m.x.cols() != model.weights.size() + 1) {
    throw Error(ErrorCode::DimensionMismatch, "matrix has " + std::to_string(m.x.cols() - 1) +
                                                  " features, model expects " + std::to_string(model.weights.size()));
  }
  std::vector<double> out(static_cast<std::size_t>(m.x.rows()));
  for (Eigen::Index i = 0; i < m.x.rows(); ++i) {
    const Eigen::VectorXd row = m.x.row(i).tail(model.weights.size()).transpose();
    out[static_cast<std::size_t>(i)] = predict_proba(model, row);
  }
  return out;
}

}  // namespace enrollcast
