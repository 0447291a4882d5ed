#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace anchorloc {

struct LmOptions {
  int max_iterations = 100;
  double initial_lambda = 1e-4;
  double max_lambda = 1e12;
  // Stop when the accepted step is shorter than this.
  double step_tolerance = 1e-14;
  // Stop when the relative cost decrease falls below this.
  double cost_tolerance = 1e-16;
  // Central-difference step for numeric Jacobians.
  double numeric_step = 1e-7;
};

struct LmSummary {
  int iterations = 0;
  bool converged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  // Smallest eigenvalue of J^T J relative to its largest, at the solution.
  double conditioning = 1.0;
};

// Dense least squares over a manifold state. `residuals` maps a state to a
// residual vector, `plus` applies a tangent increment (plus(x, 0) == x).
// Without `jacobian`, derivatives come from central differences of `plus`.
template <typename State>
struct LeastSquaresProblem {
  int num_parameters = 0;
  std::function<Eigen::VectorXd(const State&)> residuals;
  std::function<State(const State&, const Eigen::VectorXd&)> plus;
  std::function<Eigen::MatrixXd(const State&)> jacobian;
};

template <typename State>
Eigen::MatrixXd NumericJacobian(const LeastSquaresProblem<State>& problem,
                                const State& x, const Eigen::VectorXd& r0,
                                double step) {
  Eigen::MatrixXd jac(r0.size(), problem.num_parameters);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(problem.num_parameters);
  for (int k = 0; k < problem.num_parameters; ++k) {
    delta(k) = step;
    const Eigen::VectorXd rp = problem.residuals(problem.plus(x, delta));
    delta(k) = -step;
    const Eigen::VectorXd rm = problem.residuals(problem.plus(x, delta));
    delta(k) = 0.0;
    jac.col(k) = (rp - rm) / (2.0 * step);
  }
  return jac;
}

// Marquardt-scaled damping (lambda * diag(J^T J)), so scaling all residuals
// by a constant does not change the iterates.
template <typename State>
LmSummary MinimizeLevenbergMarquardt(const LeastSquaresProblem<State>& problem,
                                     State* state,
                                     const LmOptions& options = {}) {
  LmSummary summary;
  Eigen::VectorXd r = problem.residuals(*state);
  double cost = 0.5 * r.squaredNorm();
  summary.initial_cost = cost;
  double lambda = options.initial_lambda;
  Eigen::MatrixXd jtj;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    summary.iterations = iter + 1;
    if (cost == 0.0) {
      summary.converged = true;
      break;
    }
    const Eigen::MatrixXd jac =
        problem.jacobian ? problem.jacobian(*state)
                         : NumericJacobian(problem, *state, r,
                                           options.numeric_step);
    jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    const double diag_floor = 1e-12 * std::max(1.0, jtj.diagonal().maxCoeff());

    bool accepted = false;
    while (lambda <= options.max_lambda) {
      Eigen::MatrixXd damped = jtj;
      for (int k = 0; k < damped.rows(); ++k) {
        damped(k, k) += lambda * std::max(jtj(k, k), diag_floor);
      }
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      State candidate = problem.plus(*state, step);
      const Eigen::VectorXd r_new = problem.residuals(candidate);
      const double cost_new = 0.5 * r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new < cost) {
        const double decrease = (cost - cost_new) / cost;
        *state = std::move(candidate);
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (step.norm() < options.step_tolerance ||
            decrease < options.cost_tolerance) {
          summary.converged = true;
        }
        break;
      }
      if (step.norm() < options.step_tolerance) {
        // No progress possible at machine precision.
        summary.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || summary.converged) {
      if (!accepted && lambda > options.max_lambda) summary.converged = true;
      break;
    }
  }
  summary.final_cost = cost;
  if (jtj.size() > 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
    const double max_ev = eig.eigenvalues().maxCoeff();
    summary.conditioning =
        max_ev > 0.0 ? std::max(0.0, eig.eigenvalues().minCoeff()) / max_ev
                     : 0.0;
  }
  return summary;
}

}  // namespace anchorloc
