#include "idm/optimize.hpp"

#include <cmath>
#include <limits>

#include "idm/rng.hpp"

namespace idm {
namespace {

Eigen::VectorXd gradient_at(const ObjectiveSpec& obj, const Eigen::VectorXd& x) {
  if (obj.gradient) return obj.gradient(x);
  return finite_diff_gradient_scaled(obj, x);
}

OptimResult snapshot(const Eigen::VectorXd& x, double fx, const Eigen::VectorXd& g, std::size_t iters) {
  OptimResult r;
  r.x = x;
  r.value = fx;
  r.iterations = iters;
  r.gradient_norm = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
  return r;
}

}  // namespace

OptimResult bfgs_minimize(const ObjectiveSpec& obj, const Eigen::VectorXd& x0, const BfgsOptions& opts) {
  if (!obj.value) throw ValidationError("bfgs: objective has no value function");
  if (x0.size() != obj.dimension) throw ValidationError("bfgs: x0 dimension mismatch");
  if (!x0.allFinite()) throw ValidationError("bfgs: x0 must be finite");
  if (!(opts.tol > 0.0)) throw ValidationError("bfgs: tol must be positive");

  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = x0;
  double fx = obj.value(x);
  if (!std::isfinite(fx)) {
    throw OptimizationError("bfgs: objective is non-finite at x0",
                            snapshot(x, fx, Eigen::VectorXd::Zero(n), 0));
  }
  Eigen::VectorXd g = gradient_at(obj, x);
  if (!g.allFinite()) throw OptimizationError("bfgs: gradient is non-finite at x0", snapshot(x, fx, g, 0));

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  bool first_update = true;

  std::size_t it = 0;
  for (; it < opts.max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.tol) break;

    Eigen::VectorXd p = -H * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      h_is_identity = true;
      p = -g;
      slope = g.dot(p);
    }

    double alpha = opts.initial_step;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = fx;
    for (int ls = 0; ls < 64; ++ls) {
      x_new = x + alpha * p;
      f_new = obj.value(x_new);
      if (!std::isfinite(f_new))
        throw OptimizationError("bfgs: objective became non-finite during line search", snapshot(x, fx, g, it));
      if (f_new <= fx + opts.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= opts.shrink;
    }

    if (!accepted) {
      if (h_is_identity) break;
      // Quasi-Newton direction failed; retry this iteration along −g.
      H.setIdentity();
      h_is_identity = true;
      --it;
      continue;
    }

    Eigen::VectorXd g_new = gradient_at(obj, x_new);
    if (!g_new.allFinite())
      throw OptimizationError("bfgs: gradient became non-finite", snapshot(x, fx, g, it));

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (first_update) {
        H *= sy / y.squaredNorm();
        first_update = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded.
      H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
      h_is_identity = false;
    }

    x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
  }

  OptimResult r = snapshot(x, fx, g, it);
  r.converged = r.gradient_norm <= opts.tol;
  return r;
}

OptimResult bfgs_multistart(const ObjectiveSpec& obj, const Eigen::VectorXd& x0, std::size_t restarts,
                            double jitter, std::uint64_t seed, const BfgsOptions& opts) {
  if (restarts < 1) throw ValidationError("bfgs_multistart: restarts must be at least 1");
  OptimResult best = bfgs_minimize(obj, x0, opts);
  for (std::size_t r = 1; r < restarts; ++r) {
    Rng rng(seed, {stream::kRestarts, r});
    Eigen::VectorXd start = x0;
    for (Eigen::Index i = 0; i < start.size(); ++i) start(i) += rng.uniform(-jitter, jitter);
    OptimResult cand = bfgs_minimize(obj, start, opts);
    if (cand.value < best.value) best = std::move(cand);
  }
  return best;
}

Eigen::VectorXd finite_diff_gradient(const ObjectiveSpec& obj, const Eigen::VectorXd& x, double h) {
  if (!(h > 0.0)) throw ValidationError("finite_diff_gradient: step must be positive");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double fp = obj.value(probe);
    probe(i) = x(i) - h;
    const double fm = obj.value(probe);
    probe(i) = x(i);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("finite_diff_gradient: non-finite objective evaluation");
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd finite_diff_gradient_scaled(const ObjectiveSpec& obj, const Eigen::VectorXd& x, double rel) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel * (1.0 + std::abs(x(i)));
    probe(i) = x(i) + h;
    const double fp = obj.value(probe);
    probe(i) = x(i) - h;
    const double fm = obj.value(probe);
    probe(i) = x(i);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("finite_diff_gradient: non-finite objective evaluation");
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

LinearFit ols_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("ols_fit: xs and ys differ in length");
  if (xs.size() < 2) throw ValidationError("ols_fit: need at least two points");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), n);
  const Eigen::Map<const Eigen::VectorXd> y(ys.data(), n);
  if (!x.allFinite() || !y.allFinite()) throw ValidationError("ols_fit: non-finite input");

  const double mx = x.mean();
  const double my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx;
  const double sxx = dx.square().sum();
  if (!(sxx > std::numeric_limits<double>::min()) || (x.array() == x(0)).all())
    throw NumericalError("ols_fit: xs are degenerate");
  const double slope = (dx * (y.array() - my)).sum() / sxx;
  return {slope, my - slope * mx};
}

}  // namespace idm
