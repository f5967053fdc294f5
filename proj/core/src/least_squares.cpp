#include "spdcsim/least_squares.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace spdcsim::fitting {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& typical,
                                 double rel_step) {
  Eigen::MatrixXd jac;
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = rel_step * std::max(std::abs(x(k)), typical(k));
    xp(k) = x(k) + h;
    const Eigen::VectorXd up = f(xp);
    xp(k) = x(k) - h;
    const Eigen::VectorXd down = f(xp);
    xp(k) = x(k);
    if (jac.size() == 0) jac.resize(up.size(), x.size());
    jac.col(k) = (up - down) / (2.0 * h);
  }
  return jac;
}

namespace {

bool is_rank_deficient(const Eigen::MatrixXd& jtj, double tol) {
  if (!jtj.allFinite()) return true;
  // Judge conditioning on the column-scaled matrix so parameter units drop out.
  const Eigen::VectorXd d = jtj.diagonal();
  if ((d.array() <= 0.0).any()) return true;
  const Eigen::VectorXd inv = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = inv.asDiagonal() * jtj * inv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  return !(top > 0.0) || es.eigenvalues().minCoeff() <= tol * top;
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0, const LmOptions& options) {
  LmResult out;
  Eigen::VectorXd x = x0;
  const Eigen::VectorXd typical = options.typical_scale.size() == x0.size()
                                       ? Eigen::VectorXd(options.typical_scale.cwiseAbs())
                                       : Eigen::VectorXd(x0.cwiseAbs().cwiseMax(1e-8));
  Eigen::VectorXd r = residuals(x);
  if (!r.allFinite()) {
    out.params = x;
    out.message = "non-finite residuals at the initial guess";
    return out;
  }
  double cost = 0.5 * r.squaredNorm();
  double lambda = options.initial_damping;

  for (int it = 1; it <= options.max_iterations; ++it) {
    out.iterations = it;
    const Eigen::MatrixXd jac = numeric_jacobian(residuals, x, typical, options.fd_relative_step);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;

    if (is_rank_deficient(jtj, options.rank_tolerance)) {
      out.rank_deficient = true;
      out.message = "rank-deficient Jacobian";
      break;
    }
    if (cost == 0.0 || grad.cwiseAbs().maxCoeff() <= 1e-300) {
      out.converged = true;
      out.message = "zero gradient";
      break;
    }

    bool accepted = false;
    bool small_step = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal();
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      const Eigen::VectorXd trial = x + step;
      const Eigen::VectorXd r_trial = residuals(trial);
      const double trial_cost = r_trial.allFinite() ? 0.5 * r_trial.squaredNorm() : INFINITY;
      if (trial_cost < cost) {
        const double drop = cost - trial_cost;
        small_step = step.norm() <= options.step_tolerance * (x.norm() + options.step_tolerance) ||
                     drop <= options.cost_tolerance * cost;
        x = trial;
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent left: the current point is a minimum to working precision.
      out.converged = true;
      out.message = "no further decrease";
      break;
    }
    if (small_step) {
      out.converged = true;
      out.message = "step below tolerance";
      break;
    }
  }
  if (!out.converged && !out.rank_deficient) {
    std::ostringstream msg;
    msg << "no convergence after " << options.max_iterations << " iterations";
    out.message = msg.str();
  }

  out.params = x;
  out.cost = cost;
  out.jacobian = numeric_jacobian(residuals, x, typical, options.fd_relative_step);
  if (out.converged && is_rank_deficient(out.jacobian.transpose() * out.jacobian, options.rank_tolerance)) {
    out.converged = false;
    out.rank_deficient = true;
    out.message = "rank-deficient Jacobian at the solution";
  }
  return out;
}

Eigen::MatrixXd lm_covariance(const LmResult& result, Eigen::Index n_samples) {
  const Eigen::Index p = result.params.size();
  const Eigen::MatrixXd jtj = result.jacobian.transpose() * result.jacobian;
  const double dof = static_cast<double>(n_samples - p);
  const double s2 = dof > 0 ? 2.0 * result.cost / dof : 0.0;
  Eigen::MatrixXd cov = s2 * jtj.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  return 0.5 * (cov + cov.transpose());
}

}  // namespace spdcsim::fitting
