#include "idm/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace idm {

void CalibrationConfig::validate() const {
  if (!(tol > 0.0)) throw ValidationError("calibration: tol must be positive");
  if (restarts < 1) throw ValidationError("calibration: restarts must be at least 1");
  if (max_iter < 1) throw ValidationError("calibration: max_iter must be at least 1");
  if (!(discrimination_cap > 0.0)) throw ValidationError("calibration: discrimination cap must be positive");
  if (!std::isfinite(init.a) || !std::isfinite(init.b)) throw ValidationError("calibration: non-finite init");
}

BfgsOptions CalibrationConfig::bfgs() const {
  BfgsOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  return o;
}

namespace {

/// Least squares of σ(a(θ − b)) against targets with per-point weights.
/// With `fixed_a`, only b is free.
struct LogisticLeastSquares {
  std::span<const double> thetas;
  std::span<const double> targets;
  std::span<const double> weights;
  double cap;
  std::optional<double> fixed_a;

  double slope(const Eigen::VectorXd& x) const {
    return fixed_a ? *fixed_a : std::clamp(x(0), -cap, cap);
  }
  double location(const Eigen::VectorXd& x) const { return fixed_a ? x(0) : x(1); }

  double value(const Eigen::VectorXd& x) const {
    const double a = slope(x);
    const double b = location(x);
    double sum = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double r = sigmoid(a * (thetas[i] - b)) - targets[i];
      sum += weights[i] * r * r;
    }
    return sum;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    const double a = slope(x);
    const double b = location(x);
    const bool a_free = !fixed_a && std::abs(x(0)) < cap;
    double ga = 0.0;
    double gb = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double p = sigmoid(a * (thetas[i] - b));
      const double common = 2.0 * weights[i] * (p - targets[i]) * p * (1.0 - p);
      ga += common * (thetas[i] - b);
      gb -= common * a;
    }
    if (fixed_a) return Eigen::VectorXd::Constant(1, gb);
    return Eigen::Vector2d(a_free ? ga : 0.0, gb);
  }

  ObjectiveSpec spec() const {
    ObjectiveSpec o;
    o.dimension = fixed_a ? 1 : 2;
    o.value = [this](const Eigen::VectorXd& x) { return value(x); };
    o.gradient = [this](const Eigen::VectorXd& x) { return gradient(x); };
    return o;
  }
};

ItemFit finish(const OptimResult& r, const LogisticLeastSquares& ls, std::size_t n_used) {
  ItemFit fit;
  fit.params = {ls.slope(r.x), ls.location(r.x)};
  fit.objective = r.value;
  fit.n_used = n_used;
  fit.converged = r.converged;
  if (!ls.fixed_a && std::abs(r.x(0)) >= ls.cap) {
    fit.converged = false;
    fit.warnings.push_back("discrimination reached the cap; data look separable");
  }
  if (!r.converged) fit.warnings.push_back("optimizer did not reach the gradient tolerance");
  return fit;
}

}  // namespace

ItemFit calibrate_2pl(std::span<const double> thetas, std::span<const double> outcomes,
                      const CalibrationConfig& cfg) {
  cfg.validate();
  if (thetas.size() != outcomes.size()) throw ValidationError("calibrate_2pl: theta/outcome length mismatch");
  if (thetas.size() < 30) throw InsufficientDataError("calibrate_2pl: need at least 30 responses");
  const auto ones = std::count(outcomes.begin(), outcomes.end(), 1.0);
  const auto zeros = std::count(outcomes.begin(), outcomes.end(), 0.0);
  if (static_cast<std::size_t>(ones + zeros) != outcomes.size())
    throw ValidationError("calibrate_2pl: outcomes must be 0 or 1");
  if (ones == 0 || zeros == 0)
    throw NonIdentifiableError("calibrate_2pl: every response has the same outcome");
  for (double t : thetas)
    if (!std::isfinite(t)) throw DomainError("calibrate_2pl: non-finite theta");

  const std::vector<double> weights(thetas.size(), 1.0 / static_cast<double>(thetas.size()));
  LogisticLeastSquares ls{thetas, outcomes, weights, cfg.discrimination_cap, std::nullopt};
  const auto obj = ls.spec();
  const OptimResult r =
      bfgs_multistart(obj, Eigen::Vector2d(cfg.init.a, cfg.init.b), cfg.restarts, cfg.jitter, cfg.seed, cfg.bfgs());
  return finish(r, ls, thetas.size());
}

ItemFit calibrate_2pl(std::span<const ResponseRecord> records, const Population& pop, std::size_t item,
                      const CalibrationConfig& cfg) {
  std::vector<double> thetas;
  std::vector<double> ys;
  for (const auto& r : records) {
    if (r.item != item) continue;
    if (r.student >= pop.size()) throw ValidationError("calibrate_2pl: student index out of range");
    thetas.push_back(pop.thetas(r.student));
    ys.push_back(r.correct ? 1.0 : 0.0);
  }
  return calibrate_2pl(thetas, ys, cfg);
}

SmootherFit fit_smoother(const BinnedCounts& counts, std::size_t item, const AbilityScalePtr& scale,
                         const CalibrationConfig& cfg) {
  cfg.validate();
  if (!scale) throw ValidationError("fit_smoother: missing scale");
  if (item >= counts.item_count()) throw ValidationError("fit_smoother: item out of range");
  if (counts.label_count() != scale->size()) throw ValidationError("fit_smoother: scale/count label mismatch");

  const CountMatrix& m = counts.item_counts(item);
  const Eigen::Index n_opt = m.rows();
  const std::int64_t total = m.sum();
  if (total <= 0) throw InsufficientDataError("fit_smoother: item has no responses");

  std::vector<Eigen::Index> labels;
  for (Eigen::Index k = 0; k < m.cols(); ++k)
    if (m.col(k).sum() > 0) labels.push_back(k);
  const auto populated = static_cast<Eigen::Index>(labels.size());
  if (populated < 3 || populated * n_opt < 2 * (n_opt - 1))
    throw InsufficientDataError("fit_smoother: fewer than 3 populated ability labels");

  // Per populated label: weight C_jk/C_j, frequencies C_ijk/C_jk, θ̄_k.
  Eigen::VectorXd w(populated);
  Eigen::VectorXd tb(populated);
  Eigen::MatrixXd freq(n_opt, populated);
  for (Eigen::Index q = 0; q < populated; ++q) {
    const Eigen::Index k = labels[static_cast<std::size_t>(q)];
    const double ck = static_cast<double>(m.col(k).sum());
    w(q) = ck / static_cast<double>(total);
    tb(q) = scale->theta_bar()(k);
    freq.col(q) = m.col(k).cast<double>() / ck;
  }

  const Eigen::Index free = n_opt - 1;
  auto lines = [free, n_opt](const Eigen::VectorXd& x) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n_opt);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_opt);
    s.head(free) = x.head(free);
    c.head(free) = x.tail(free);
    return std::pair{s, c};
  };

  ObjectiveSpec obj;
  obj.dimension = 2 * free;
  obj.value = [&](const Eigen::VectorXd& x) {
    const auto [s, c] = lines(x);
    double sum = 0.0;
    for (Eigen::Index q = 0; q < populated; ++q) {
      const Eigen::VectorXd p = softmax((s * tb(q) + c).eval());
      sum += w(q) * (p - freq.col(q)).squaredNorm();
    }
    return sum;
  };
  obj.gradient = [&](const Eigen::VectorXd& x) {
    const auto [s, c] = lines(x);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * free);
    for (Eigen::Index q = 0; q < populated; ++q) {
      const Eigen::VectorXd p = softmax((s * tb(q) + c).eval());
      const Eigen::VectorXd r = p - freq.col(q);
      // ∂/∂z_m of w‖p − e‖² = 2w p_m (r_m − r·p)
      const Eigen::VectorXd dz = (2.0 * w(q)) * (p.array() * (r.array() - r.dot(p))).matrix();
      g.head(free) += dz.head(free) * tb(q);
      g.tail(free) += dz.head(free);
    }
    return g;
  };

  // Start from flat lines at the overall option log-odds against the last option.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2 * free);
  const Eigen::VectorXd overall = m.rowwise().sum().cast<double>().array() + 0.5;
  for (Eigen::Index i = 0; i < free; ++i) x0(free + i) = std::log(overall(i) / overall(n_opt - 1));

  const OptimResult r = bfgs_multistart(obj, x0, cfg.restarts, cfg.jitter, cfg.seed, cfg.bfgs());
  const auto [s, c] = lines(r.x);
  NominalParams params(s, c, counts.layout(item).correct_index);

  Eigen::MatrixXd probs(n_opt, static_cast<Eigen::Index>(scale->size()));
  for (Eigen::Index k = 0; k < probs.cols(); ++k) probs.col(k) = nominal_probs(scale->theta_bar()(k), params);

  return SmootherFit{std::move(params), r.value, r.converged, std::move(probs), scale};
}

DiscreteICC smoother_icc(const SmootherFit& fit, std::size_t correct_option) {
  if (correct_option >= static_cast<std::size_t>(fit.per_label_probs.rows()))
    throw ValidationError("smoother_icc: option out of range");
  return {fit.per_label_probs.row(static_cast<Eigen::Index>(correct_option)).transpose(), fit.scale};
}

double icc_objective(const DiscreteICC& icc, const AbilityScale& scale, const ItemParams& item) {
  double sum = 0.0;
  for (std::size_t k = 0; k < icc.size(); ++k) {
    if (!icc.present[k]) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    const double r = icc.probs(kk) - sigmoid(item.a * (scale.theta_bar()(kk) - item.b));
    sum += scale.weights()(kk) * r * r;
  }
  return sum;
}

double half_crossing(const DiscreteICC& icc, const AbilityScale& scale) {
  std::optional<std::size_t> prev;
  for (std::size_t k = 0; k < icc.size(); ++k) {
    if (!icc.present[k]) continue;
    if (prev) {
      const auto i0 = static_cast<Eigen::Index>(*prev);
      const auto i1 = static_cast<Eigen::Index>(k);
      const double p0 = icc.probs(i0) - 0.5;
      const double p1 = icc.probs(i1) - 0.5;
      if (p0 == 0.0) return scale.theta_bar()(i0);
      if ((p0 < 0.0) != (p1 < 0.0) || p1 == 0.0) {
        const double t = p0 / (p0 - p1);
        return scale.theta_bar()(i0) + t * (scale.theta_bar()(i1) - scale.theta_bar()(i0));
      }
    }
    prev = k;
  }
  return 0.0;
}

namespace {

struct IccData {
  std::vector<double> thetas;
  std::vector<double> targets;
  std::vector<double> weights;
};

IccData collect(const DiscreteICC& icc, const AbilityScale& scale, const char* who) {
  if (icc.size() != scale.size()) throw ValidationError(std::string(who) + ": ICC length differs from scale");
  if (icc.present_count() < 3) throw InsufficientDataError(std::string(who) + ": need at least 3 present entries");
  IccData d;
  for (std::size_t k = 0; k < icc.size(); ++k) {
    if (!icc.present[k]) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    d.thetas.push_back(scale.theta_bar()(kk));
    d.targets.push_back(icc.probs(kk));
    d.weights.push_back(scale.weights()(kk));
  }
  return d;
}

bool is_flat(const IccData& d) {
  const auto [lo, hi] = std::minmax_element(d.targets.begin(), d.targets.end());
  return *hi - *lo <= 1e-12;
}

}  // namespace

ItemFit recover_from_icc(const DiscreteICC& icc, const AbilityScale& scale, const CalibrationConfig& cfg) {
  cfg.validate();
  const IccData d = collect(icc, scale, "recover_from_icc");

  if (is_flat(d)) {
    ItemFit fit;
    fit.params = {0.0, 0.0};
    fit.objective = icc_objective(icc, scale, {0.0, 0.0});
    fit.converged = true;
    fit.n_used = d.thetas.size();
    fit.b_identifiable = false;
    fit.warnings.push_back("flat ICC: discrimination is zero and difficulty is not identifiable");
    return fit;
  }

  // Decreasing curves start from a negative slope so BFGS stays in basin.
  const LinearFit trend = ols_fit(d.thetas, d.targets);
  const double a0 = trend.slope < 0.0 ? -std::abs(cfg.init.a) : std::abs(cfg.init.a);
  const double b0 = half_crossing(icc, scale);

  LogisticLeastSquares ls{d.thetas, d.targets, d.weights, cfg.discrimination_cap, std::nullopt};
  const auto obj = ls.spec();
  const OptimResult r = bfgs_multistart(obj, Eigen::Vector2d(a0, b0), cfg.restarts, cfg.jitter, cfg.seed, cfg.bfgs());
  return finish(r, ls, d.thetas.size());
}

ItemFit recover_1pl_from_icc(const DiscreteICC& icc, const AbilityScale& scale, const CalibrationConfig& cfg) {
  cfg.validate();
  const IccData d = collect(icc, scale, "recover_1pl_from_icc");
  LogisticLeastSquares ls{d.thetas, d.targets, d.weights, cfg.discrimination_cap, 1.0};
  const auto obj = ls.spec();
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, half_crossing(icc, scale));
  const OptimResult r = bfgs_multistart(obj, x0, cfg.restarts, cfg.jitter, cfg.seed, cfg.bfgs());
  return finish(r, ls, d.thetas.size());
}

}  // namespace idm
