#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "idm/irt.hpp"
#include "idm/normal.hpp"
#include "oracles.hpp"

using namespace idm;
using doctest::Approx;

TEST_CASE("p2 and p1 hand values") {
  CHECK(p2(0.7, ItemParams{2.3, 0.7}) == 0.5);
  CHECK(p2(0.0, ItemParams{1.0, 0.0}) == 0.5);
  CHECK(p2(std::log(3.0), ItemParams{1.0, 0.0}) == Approx(0.75).epsilon(1e-15));
  CHECK(p1(0.0, 0.0) == 0.5);
  CHECK(p1(1.0, 1.0) == 0.5);
  CHECK(p1(-std::log(3.0), 0.0) == Approx(0.25).epsilon(1e-15));
}

TEST_CASE("p2 rejects non-finite input") {
  CHECK_THROWS_AS(p2(NAN, ItemParams{}), DomainError);
  CHECK_THROWS_AS(p2(0.0, ItemParams{INFINITY, 0.0}), DomainError);
  CHECK_THROWS_AS(p1(0.0, std::nan("")), DomainError);
}

TEST_CASE("p2 symmetry and monotonicity") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const ItemParams item{u(gen), u(gen)};
    const double d = u(gen);
    CHECK(std::abs(p2(item.b + d, item) + p2(item.b - d, item) - 1.0) < 1e-12);
    const double p = p2(item.b + d, item);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    if (item.a > 0) CHECK(p2(item.b + d + 0.1, item) >= p);
  }
}

TEST_CASE("nominal_probs examples") {
  const NominalParams flat(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 0);
  const Eigen::VectorXd p = nominal_probs(1.7, flat);
  for (int i = 0; i < 4; ++i) CHECK(p(i) == Approx(0.25).epsilon(1e-15));

  // Two options: option 1 on a1(θ − b1), option 2 zero → the 2PL curve.
  const NominalParams two = NominalParams::from_difficulty_form({{1.4, -0.3}, {0.0, 0.0}}, 0);
  for (double th : {-2.0, -0.3, 0.0, 1.1}) CHECK(nominal_probs(th, two)(0) == Approx(p2(th, ItemParams{1.4, -0.3})).epsilon(1e-14));

  Eigen::VectorXd s(3);
  s << 1, 0, 0;
  const Eigen::VectorXd q = nominal_probs(0.0, NominalParams(s, Eigen::VectorXd::Zero(3), 0));
  for (int i = 0; i < 3; ++i) CHECK(q(i) == Approx(1.0 / 3.0).epsilon(1e-15));

  CHECK_THROWS_AS(nominal_probs(NAN, flat), DomainError);
}

TEST_CASE("nominal_probs is stable for large scores") {
  Eigen::VectorXd s(3), c(3);
  s << 1.0, -1.0, 0.0;
  c << 0.0, 0.0, 0.0;
  const NominalParams params(s, c, 0);
  for (double th : {-1000.0, 1000.0}) {
    const Eigen::VectorXd p = nominal_probs(th, params);
    CHECK(p.allFinite());
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("NominalParams validation and gauge fixing") {
  CHECK_THROWS_AS(NominalParams(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0), ValidationError);
  CHECK_THROWS_AS(NominalParams(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), 0), ValidationError);
  CHECK_THROWS_AS(NominalParams(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 3), ValidationError);

  Eigen::VectorXd s(3), c(3);
  s << 2.0, 1.0, 0.5;
  c << 1.0, -1.0, 3.0;
  const NominalParams p(s, c, 1);
  CHECK(p.slopes()(2) == 0.0);
  CHECK(p.intercepts()(2) == 0.0);
  CHECK(p.slopes()(0) == 1.5);
  CHECK(p.intercepts()(0) == -2.0);
  const auto ab = p.difficulty_form(0);
  REQUIRE(ab);
  CHECK(ab->a == 1.5);
  CHECK(ab->b == Approx(2.0 / 1.5));
  CHECK_FALSE(p.difficulty_form(2));
}

TEST_CASE("property: probabilities positive, sum to one, gauge invariant") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::uniform_int_distribution<int> nopt(2, 10);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = nopt(gen);
    Eigen::VectorXd s(n), c(n);
    for (int i = 0; i < n; ++i) {
      s(i) = u(gen);
      c(i) = u(gen);
    }
    const double ds = u(gen), dc = 10.0 * u(gen);
    const NominalParams base(s, c, 0);
    const NominalParams shifted((s.array() + ds).matrix(), (c.array() + dc).matrix(), 0);
    for (int t = 0; t < 5; ++t) {
      const double th = 2.0 * u(gen);
      const Eigen::VectorXd p = nominal_probs(th, base);
      CHECK((p.array() > 0.0).all());
      CHECK(std::abs(p.sum() - 1.0) < 1e-12);
      CHECK((p - nominal_probs(th, shifted)).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("nrm_to_2pl examples and errors") {
  const ItemParams a = nrm_to_2pl(1.0, 0.0, 2);
  CHECK(a.a == 1.0);
  CHECK(a.b == 0.0);
  const ItemParams b = nrm_to_2pl(1.0, 0.0, 4);
  CHECK(b.b == Approx(1.0986122886681098).epsilon(1e-14));
  const ItemParams c = nrm_to_2pl(2.0, 0.5, 5);
  CHECK(c.a == 2.0);
  CHECK(c.b == Approx(0.5 + std::log(4.0) / 2.0).epsilon(1e-14));
  CHECK(c.b == Approx(1.1931).epsilon(1e-4));
  CHECK_THROWS_AS(nrm_to_2pl(0.0, 0.0, 4), NumericalError);
  CHECK_THROWS_AS(nrm_to_2pl(1.0, 0.0, 1), DomainError);

  const ItemParams back = twopl_to_nrm_line(c, 5);
  CHECK(back.b == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("twopl_from_nrm_correct_prob") {
  CHECK(twopl_from_nrm_correct_prob(0.0, 1.0, 0.0, 2) == 0.5);
  CHECK(twopl_from_nrm_correct_prob(std::log(3.0), 1.0, 0.0, 4) == Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(twopl_from_nrm_correct_prob(0.0, 1.0, 0.0, 1), DomainError);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (std::size_t n = 2; n <= 10; ++n)
    for (int i = 0; i < 50; ++i) {
      double a1 = u(gen);
      if (a1 == 0.0) a1 = 0.5;
      const double b1 = u(gen), th = u(gen);
      const double oracle = nominal_probs(th, NominalParams::zeroed_distractors(a1, b1, n))(0);
      CHECK(std::abs(oracle - twopl_from_nrm_correct_prob(th, a1, b1, n)) < 1e-12);
      // The 2PL equivalent from the correspondence reproduces the same curve.
      const ItemParams eq = nrm_to_2pl(a1, b1, n);
      CHECK(std::abs(p2(th, eq) - oracle) < 1e-12);
    }
}

TEST_CASE("normal quantile inverts the CDF") {
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999999, 1 - 1e-12}) {
    const double z = normal::quantile(p);
    CHECK(normal::cdf(z) == Approx(p).epsilon(1e-12));
  }
  CHECK(normal::quantile(0.5) == 0.0);
  CHECK(normal::quantile(0.975) == Approx(1.959963984540054).epsilon(1e-14));
  CHECK(std::isinf(normal::quantile(0.0)));
}

TEST_CASE("ability scale: single interval is the prior mean") {
  const AbilityScale s = build_ability_scale({"all"}, {}, {0.0, 1.0});
  CHECK(s.size() == 1);
  CHECK(s.theta_bar()(0) == Approx(0.0).epsilon(1e-15));
  CHECK(s.weights()(0) == 1.0);
}

TEST_CASE("ability scale: split at the mean gives half-normal means") {
  const AbilityScale s = build_ability_scale({"low", "high"}, {0.0}, {0.0, 1.0});
  const double half = std::sqrt(2.0 / std::numbers::pi);
  CHECK(s.weights()(0) == Approx(0.5).epsilon(1e-15));
  CHECK(s.weights()(1) == Approx(0.5).epsilon(1e-15));
  CHECK(s.theta_bar()(0) == Approx(-half).epsilon(1e-14));
  CHECK(s.theta_bar()(1) == Approx(half).epsilon(1e-14));
  const auto [m, w] = oracle::truncated_moments(0.0, INFINITY, 0.0, 1.0);
  CHECK(std::abs(m - half) < 1e-10);
  CHECK(std::abs(w - 0.5) < 1e-12);
}

TEST_CASE("default scale matches the quadrature oracle") {
  const AbilityScale s = AbilityScale::default_descriptors({0.13, 1.15});
  REQUIRE(s.size() == 20);
  CHECK(s.labels().front() == "Critical");
  CHECK(s.labels().back() == "Exemplary");
  CHECK(s.lower(s.index_of("Emerging")) == -1.8);
  CHECK(s.upper(s.index_of("Emerging")) == -1.2);
  CHECK(std::abs(s.weights().sum() - 1.0) < 1e-12);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto [m, w] = oracle::truncated_moments(s.lower(k), s.upper(k), 0.13, 1.15);
    CHECK(std::abs(s.theta_bar()(static_cast<Eigen::Index>(k)) - m) < 1e-8);
    CHECK(std::abs(s.weights()(static_cast<Eigen::Index>(k)) - w) < 1e-10);
    CHECK(s.theta_bar()(static_cast<Eigen::Index>(k)) > s.lower(k));
    CHECK(s.theta_bar()(static_cast<Eigen::Index>(k)) < s.upper(k));
    if (k > 0) CHECK(s.theta_bar()(static_cast<Eigen::Index>(k)) > s.theta_bar()(static_cast<Eigen::Index>(k - 1)));
  }
}

TEST_CASE("ability scale construction errors") {
  CHECK_THROWS_AS(build_ability_scale({"a", "b", "c"}, {1.0, 0.5}, {}), ValidationError);
  CHECK_THROWS_AS(build_ability_scale({"a", "b", "c"}, {1.0, 1.0}, {}), ValidationError);
  CHECK_THROWS_AS(build_ability_scale({"a", "b"}, {0.0, 1.0}, {}), ValidationError);
  CHECK_THROWS_AS(build_ability_scale({"a", "b"}, {0.0}, {0.0, 0.0}), ValidationError);
  // An interval with no mass under the prior.
  CHECK_THROWS_AS(build_ability_scale({"a", "b", "c"}, {100.0, 100.5}, {0.0, 1.0}), ValidationError);
}

TEST_CASE("label_for_theta") {
  const AbilityScale s = AbilityScale::default_descriptors();
  CHECK(s.label_for_theta(-10.0) == s.index_of("Critical"));
  CHECK(s.label_for_theta(10.0) == s.index_of("Exemplary"));
  // Right-closed intervals: a cut point belongs to the interval below it.
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    CHECK(s.label_for_theta(s.upper(k)) == k);
    CHECK(s.label_for_theta(std::nextafter(s.upper(k), INFINITY)) == k + 1);
  }
  CHECK(s.label_for_theta(-1.5) == s.index_of("Emerging"));
  CHECK_THROWS_AS(s.label_for_theta(NAN), DomainError);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double th = nd(gen);
    const std::size_t k = s.label_for_theta(th);
    CHECK(th > s.lower(k));
    CHECK(th <= s.upper(k));
  }
}

TEST_CASE("DiscreteICC masks and validates") {
  auto scale = std::make_shared<const AbilityScale>(build_ability_scale({"a", "b", "c"}, {-1.0, 1.0}, {}));
  Eigen::VectorXd p(3);
  p << 0.2, 0.5, 0.9;
  const DiscreteICC icc(p, {true, false, true}, scale);
  CHECK(icc.present_count() == 2);
  CHECK(std::isnan(icc.probs(1)));
  p(0) = 1.2;
  CHECK_THROWS_AS(DiscreteICC(p, scale), ValidationError);
  CHECK_THROWS_AS(DiscreteICC(Eigen::VectorXd::Zero(2), scale), ValidationError);
}
