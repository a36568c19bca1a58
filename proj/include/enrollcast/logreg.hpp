#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "enrollcast/dataset.hpp"

namespace enrollcast {

struct FitConfig {
  double ridge = 1.0e-8;
  // Convergence threshold on the largest absolute parameter change.
  double tolerance = 1.0e-10;
  int max_iterations = 200;
  bool penalize_intercept = false;

  void validate() const;
};

struct LogisticModel {
  double intercept = 0.0;
  Eigen::VectorXd weights;
  std::vector<std::string> feature_names;
  double ridge = 0.0;
  int iterations_used = 0;
  bool converged = false;
  double final_objective = 0.0;
  // Max-norm of the objective gradient at the returned parameters.
  double gradient_norm = 0.0;
  // Bound the gradient norm is held to when `converged` is set:
  // 10 * tolerance * (1 + ||H||_inf) at the final iterate.
  double gradient_bound = 0.0;
};

// Stable logistic function; no overflow for any finite z.
double sigmoid(double z) noexcept;

// Penalized negative log-likelihood, summed over rows:
//   sum_i softplus(eta_i) - y_i * eta_i  +  ridge/2 * ||w||^2
// where eta_i = b + x_i.w. The intercept is penalized only on request.
double objective(const Eigen::VectorXd& weights, double intercept, const DesignMatrix& m, double ridge,
                 bool penalize_intercept = false);

struct Gradient {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

Gradient gradient(const Eigen::VectorXd& weights, double intercept, const DesignMatrix& m, double ridge,
                  bool penalize_intercept = false);

/// Newton / IRLS with step halving. Throws Error(SingleClass) when y holds
/// one class, Error(Degenerate) on non-finite input or an indefinite Hessian.
LogisticModel fit(const DesignMatrix& m, const FitConfig& config = {});

double predict_proba(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& row);
Outcome predict_label(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& row,
                      double threshold = 0.5);

/// Scores every row of `m` (intercept column skipped). Same arithmetic as
/// the single-row call, so results agree bit for bit.
std::vector<double> predict_proba(const LogisticModel& model, const DesignMatrix& m);

}  // namespace enrollcast
