#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "idm/irt.hpp"
#include "idm/optimize.hpp"
#include "idm/rng.hpp"
#include "oracles.hpp"

using namespace idm;

namespace {

ObjectiveSpec rosenbrock(bool with_gradient) {
  ObjectiveSpec obj;
  obj.dimension = 2;
  obj.value = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  if (with_gradient)
    obj.gradient = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(2);
      g(0) = -400.0 * x(0) * (x(1) - x(0) * x(0)) - 2.0 * (1.0 - x(0));
      g(1) = 200.0 * (x(1) - x(0) * x(0));
      return g;
    };
  return obj;
}

}  // namespace

TEST_CASE("quadratic bowl") {
  ObjectiveSpec obj{1, [](const Eigen::VectorXd& x) { return x(0) * x(0); },
                    [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 2.0 * x(0)); }};
  const OptimResult r = bfgs_minimize(obj, Eigen::VectorXd::Constant(1, 3.0), 1e-10, 500);
  CHECK(r.converged);
  CHECK(std::abs(r.x(0)) < 1e-8);
  CHECK(r.value <= 9.0);
  CHECK(r.gradient_norm >= 0.0);
}

TEST_CASE("Rosenbrock from the classical start") {
  for (bool grad : {true, false}) {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const OptimResult r = bfgs_minimize(rosenbrock(grad), x0, 1e-10, 2000);
    CHECK(std::abs(r.x(0) - 1.0) < 1e-6);
    CHECK(std::abs(r.x(1) - 1.0) < 1e-6);
  }
}

TEST_CASE("logistic self-consistency round trip") {
  const AbilityScale scale = AbilityScale::default_descriptors();
  const Eigen::VectorXd tb = scale.theta_bar();
  const double a = 1.3, b = -0.4;
  Eigen::VectorXd y(tb.size());
  for (Eigen::Index k = 0; k < tb.size(); ++k) y(k) = sigmoid(a * (tb(k) - b));
  ObjectiveSpec obj;
  obj.dimension = 2;
  obj.value = [&](const Eigen::VectorXd& x) {
    double s = 0;
    for (Eigen::Index k = 0; k < tb.size(); ++k) s += std::pow(sigmoid(x(0) * (tb(k) - x(1))) - y(k), 2);
    return s;
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.0;
  const OptimResult r = bfgs_minimize(obj, x0, 1e-12, 1000);
  CHECK(std::abs(r.x(0) - a) < 1e-5);
  CHECK(std::abs(r.x(1) - b) < 1e-5);
}

TEST_CASE("value never exceeds the starting value and is non-increasing") {
  std::vector<double> trace;
  ObjectiveSpec obj = rosenbrock(true);
  auto base = obj.value;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const double f0 = base(x0);
  const OptimResult r = bfgs_minimize(obj, x0);
  CHECK(r.value <= f0);

  // Accepted iterates, observed through a truncated run of each length.
  double prev = f0;
  for (std::size_t it = 1; it <= 40; ++it) {
    const OptimResult ri = bfgs_minimize(obj, x0, 1e-12, it);
    CHECK(ri.value <= prev + 1e-15);
    prev = ri.value;
  }
}

TEST_CASE("non-finite objective raises with the last good iterate") {
  ObjectiveSpec obj{1, [](const Eigen::VectorXd& x) { return x(0) < -1.0 ? NAN : x(0); },
                    [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, 1.0); }};
  try {
    bfgs_minimize(obj, Eigen::VectorXd::Constant(1, 0.0), 1e-8, 100);
    FAIL("expected OptimizationError");
  } catch (const OptimizationError& e) {
    CHECK(std::isfinite(e.last_good().value));
    CHECK(e.last_good().x(0) >= -1.0);
  }
  ObjectiveSpec bad{1, [](const Eigen::VectorXd&) { return NAN; }, {}};
  CHECK_THROWS_AS(bfgs_minimize(bad, Eigen::VectorXd::Zero(1)), NumericalError);
  CHECK_THROWS_AS(bfgs_minimize(rosenbrock(true), Eigen::VectorXd::Constant(2, NAN)), ValidationError);
  CHECK_THROWS_AS(bfgs_minimize(rosenbrock(true), Eigen::VectorXd::Zero(2), -1.0, 10), ValidationError);
}

TEST_CASE("multistart is deterministic and no worse than a single start") {
  // Double well with the deeper basin away from the start.
  ObjectiveSpec obj{1, [](const Eigen::VectorXd& x) { return std::pow(x(0) * x(0) - 1.0, 2) + 0.3 * x(0); }, {}};
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
  const OptimResult single = bfgs_minimize(obj, x0);
  const OptimResult m1 = bfgs_multistart(obj, x0, 8, 3.0, 42);
  const OptimResult m2 = bfgs_multistart(obj, x0, 8, 3.0, 42);
  CHECK(m1.value <= single.value);
  CHECK(m1.x(0) < 0.0);
  CHECK(m1.x(0) == m2.x(0));
  CHECK_THROWS_AS(bfgs_multistart(obj, x0, 0, 1.0, 1), ValidationError);
}

TEST_CASE("finite_diff_gradient examples") {
  ObjectiveSpec sq{1, [](const Eigen::VectorXd& x) { return x(0) * x(0); }, {}};
  CHECK(std::abs(finite_diff_gradient(sq, Eigen::VectorXd::Constant(1, 1.0), 1e-5)(0) - 2.0) < 1e-8);
  ObjectiveSpec cst{3, [](const Eigen::VectorXd&) { return 4.2; }, {}};
  CHECK(finite_diff_gradient(cst, Eigen::VectorXd::Ones(3), 1e-4).isZero(0.0));
  CHECK_THROWS_AS(finite_diff_gradient(sq, Eigen::VectorXd::Zero(1), 0.0), ValidationError);
  ObjectiveSpec bad{1, [](const Eigen::VectorXd& x) { return x(0) > 0 ? NAN : 0.0; }, {}};
  CHECK_THROWS_AS(finite_diff_gradient(bad, Eigen::VectorXd::Zero(1), 1e-3), NumericalError);
}

TEST_CASE("analytic Rosenbrock gradient matches central differences") {
  const ObjectiveSpec obj = rosenbrock(true);
  Rng rng(9, {stream::kFixture});
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd x(2);
    x << rng.uniform(-2, 2), rng.uniform(-1, 3);
    const Eigen::VectorXd fd = finite_diff_gradient_scaled(obj, x, 1e-6);
    const Eigen::VectorXd an = obj.gradient(x);
    CHECK((fd - an).norm() / std::max(an.norm(), 1e-12) < 1e-6);
  }
}

TEST_CASE("ols_fit examples and orthogonality") {
  std::vector<double> x2{0, 1}, y2{1, 3};
  const LinearFit f = ols_fit(x2, y2);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> xs{-2.5, 0.1, 3.0, 7.25};
  const LinearFit id = ols_fit(xs, xs);
  CHECK(std::abs(id.slope - 1.0) < 1e-14);
  CHECK(std::abs(id.intercept) < 1e-14);

  Rng rng(1, {stream::kFixture, 1});
  std::vector<double> xn(1000), yn(1000);
  for (int i = 0; i < 1000; ++i) {
    xn[i] = rng.uniform(-1, 1);
    yn[i] = 2.0 * xn[i] + 1.0 + rng.normal(0, 0.3);
  }
  const LinearFit nf = ols_fit(xn, yn);
  CHECK(std::abs(nf.slope - 2.0) < 0.05);
  double sr = 0, srx = 0, scale = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r = yn[i] - (nf.slope * xn[i] + nf.intercept);
    sr += r;
    srx += r * xn[i];
    scale += std::abs(yn[i]);
  }
  CHECK(std::abs(sr) / scale < 1e-9);
  CHECK(std::abs(srx) / scale < 1e-9);

  std::vector<double> same{1, 1, 1}, ys{1, 2, 3};
  CHECK_THROWS_AS(ols_fit(same, ys), NumericalError);
  std::vector<double> one{1};
  CHECK_THROWS(ols_fit(one, one));
}

TEST_CASE("grid oracle agrees with BFGS on a smooth bowl") {
  auto f = [](double x, double y) { return std::pow(x - 0.7, 2) + 3 * std::pow(y + 0.2, 2) + 0.5 * x * y; };
  ObjectiveSpec obj{2, [&](const Eigen::VectorXd& v) { return f(v(0), v(1)); }, {}};
  const OptimResult r = bfgs_minimize(obj, Eigen::VectorXd::Zero(2));
  const auto [gx, gy] = oracle::grid_minimize(f, -3, 3, -3, 3);
  CHECK(std::abs(r.x(0) - gx) < 1e-4);
  CHECK(std::abs(r.x(1) - gy) < 1e-4);
}
