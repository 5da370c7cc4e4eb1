#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "idm/errors.hpp"

namespace idm {

/// Objective f: R^d -> R with an optional analytic gradient.
/// Without a gradient the optimizer falls back to central differences.
struct ObjectiveSpec {
  using Value = std::function<double(const Eigen::VectorXd&)>;
  using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  Eigen::Index dimension = 0;
  Value value;
  Gradient gradient;  // may be empty
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;  // ∞-norm at x
};

struct BfgsOptions {
  double tol = 1e-8;
  std::size_t max_iter = 500;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
};

/// Raised when the objective or gradient turns non-finite. Carries the last
/// finite iterate.
class OptimizationError : public NumericalError {
 public:
  OptimizationError(const std::string& what, OptimResult last)
      : NumericalError(what), last_(std::move(last)) {}
  const OptimResult& last_good() const noexcept { return last_; }

 private:
  OptimResult last_;
};

/// Quasi-Newton minimization with a backtracking Armijo line search.
/// The inverse-Hessian update is skipped whenever sᵀy ≤ 1e−10·‖s‖‖y‖, which
/// keeps the approximation positive definite.
OptimResult bfgs_minimize(const ObjectiveSpec& obj, const Eigen::VectorXd& x0, const BfgsOptions& opts = {});

inline OptimResult bfgs_minimize(const ObjectiveSpec& obj, const Eigen::VectorXd& x0, double tol,
                                 std::size_t max_iter) {
  BfgsOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return bfgs_minimize(obj, x0, opts);
}

/// Runs BFGS from x0 and from `restarts − 1` jittered copies (uniform in
/// ±jitter per coordinate, deterministic in `seed`); the lowest value wins.
OptimResult bfgs_multistart(const ObjectiveSpec& obj, const Eigen::VectorXd& x0, std::size_t restarts,
                            double jitter, std::uint64_t seed, const BfgsOptions& opts = {});

/// Central differences (f(x + h e_i) − f(x − h e_i)) / 2h.
Eigen::VectorXd finite_diff_gradient(const ObjectiveSpec& obj, const Eigen::VectorXd& x, double h);

/// Central differences with per-coordinate step h_i = rel · (1 + |x_i|).
Eigen::VectorXd finite_diff_gradient_scaled(const ObjectiveSpec& obj, const Eigen::VectorXd& x,
                                            double rel = 1e-6);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y ≈ slope·x + intercept.
LinearFit ols_fit(std::span<const double> xs, std::span<const double> ys);

}  // namespace idm
