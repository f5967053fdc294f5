#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace spdcsim::fitting {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
  int max_iterations = 200;
  double initial_damping = 1e-3;
  double fd_relative_step = 1e-6;
  double step_tolerance = 1e-12;
  double cost_tolerance = 1e-15;
  double rank_tolerance = 1e-13;  // on the eigenvalue ratio of J^T J
  /// Per-parameter scale floor for the difference step; defaults to |x0|.
  Eigen::VectorXd typical_scale;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd jacobian;  // at params
  double cost = 0.0;         // 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
  std::string message;
};

/// Central-difference Jacobian with step rel_step * max(|x_k|, typical_k).
Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& typical,
                                 double rel_step);

/// Damped Gauss-Newton. Damping is multiplied by 10 after a rejected step and
/// divided by 10 after an accepted one.
LmResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0, const LmOptions& options = {});

/// s^2 (J^T J)^{-1} with s^2 = |r|^2 / (n - p).
Eigen::MatrixXd lm_covariance(const LmResult& result, Eigen::Index n_samples);

}  // namespace spdcsim::fitting
