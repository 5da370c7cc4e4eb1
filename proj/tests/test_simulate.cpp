#include <cmath>
#include <vector>

#include "doctest.h"
#include "idm/simulate.hpp"

using namespace idm;

namespace {

AbilityScalePtr default_scale() {
  return std::make_shared<const AbilityScale>(AbilityScale::default_descriptors());
}

double mean(const Eigen::VectorXd& v) { return v.mean(); }
double sd(const Eigen::VectorXd& v) {
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("sample_population moments and determinism") {
  const Population p = sample_population(100000, {0.0, 1.0}, 17);
  CHECK(p.size() == 100000);
  CHECK(p.thetas.allFinite());
  CHECK(std::abs(mean(p.thetas)) < 0.02);
  CHECK(std::abs(sd(p.thetas) - 1.0) < 0.02);
  const Population q = sample_population(100000, {0.0, 1.0}, 17);
  CHECK(p.thetas == q.thetas);
  const Population r = sample_population(100000, {0.13, 1.15}, 3);
  CHECK(std::abs(sd(r.thetas) / 1.15 - 1.0) < 0.02);
  CHECK_THROWS_AS(sample_population(0, {}, 1), ValidationError);
  // A prefix of a larger population is the smaller population.
  const Population small = sample_population(100, {0.0, 1.0}, 17);
  CHECK(small.thetas == p.thetas.head(100));
}

TEST_CASE("label frequencies match interval masses") {
  const auto scale = default_scale();
  const std::size_t n = 100000;
  const Population p = sample_population(n, scale->prior(), 99);
  std::vector<double> freq(scale->size(), 0.0);
  for (Eigen::Index i = 0; i < p.thetas.size(); ++i) freq[scale->label_for_theta(p.thetas(i))] += 1.0;
  for (std::size_t k = 0; k < scale->size(); ++k) {
    const double w = scale->weights()(static_cast<Eigen::Index>(k));
    CHECK(std::abs(freq[k] / n - w) <= 3.0 * std::sqrt(w * (1 - w) / n));
  }
}

TEST_CASE("uniform item gives uniform option frequencies") {
  const Population p = sample_population(100000, {0.0, 1.0}, 5);
  const std::vector<NominalParams> items{NominalParams(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 0)};
  const auto recs = sample_responses(p, items, 8);
  REQUIRE(recs.size() == 100000);
  std::vector<double> f(4, 0.0);
  for (const auto& r : recs) {
    f[r.option_chosen] += 1.0;
    CHECK(r.correct == (r.option_chosen == 0));
  }
  for (double x : f) CHECK(std::abs(x / 1e5 - 0.25) < 0.01);
}

TEST_CASE("saturated item is almost always answered correctly") {
  Population p;
  p.thetas = Eigen::VectorXd::Constant(20000, 2.0);
  const std::vector<NominalParams> items{NominalParams::zeroed_distractors(50.0, 0.0, 4)};
  const auto recs = sample_responses(p, items, 1);
  double c = 0;
  for (const auto& r : recs) c += r.correct;
  CHECK(c / 20000.0 > 0.999);
}

TEST_CASE("responses are order independent and reproducible") {
  const Population p = sample_population(500, {0.0, 1.0}, 2);
  const std::vector<NominalParams> two{NominalParams::zeroed_distractors(1.0, 0.0, 4),
                                       NominalParams::zeroed_distractors(1.5, -0.5, 3)};
  const auto a = sample_responses(p, two, 4);
  const auto b = sample_responses(p, two, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].option_chosen == b[i].option_chosen);
  // Streams are addressed by (student, item): changing item 0 leaves item 1's draws alone.
  const std::vector<NominalParams> other{NominalParams::zeroed_distractors(-2.0, 1.0, 5), two[1]};
  const auto c = sample_responses(p, other, 4);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].item == 1) {
      REQUIRE(c[i].item == 1);
      CHECK(a[i].option_chosen == c[i].option_chosen);
    }
  CHECK_THROWS_AS(sample_responses(p, std::vector<NominalParams>{}, 1), ValidationError);
}

TEST_CASE("bin_responses examples") {
  const auto scale = default_scale();
  Population p;
  p.thetas = Eigen::VectorXd::Constant(1, 0.05);
  const std::vector<ItemLayout> layouts{{4, 0}, {3, 2}};
  const BinnedCounts empty = bin_responses(std::vector<ResponseRecord>{}, p, scale, layouts);
  for (std::size_t j = 0; j < 2; ++j) CHECK(empty.item_total(j) == 0);

  const std::vector<ResponseRecord> one{{0, 1, 2, true}};
  const BinnedCounts c = bin_responses(one, p, scale, layouts);
  const std::size_t k = scale->label_for_theta(0.05);
  std::int64_t nonzero = 0;
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t kk = 0; kk < scale->size(); ++kk)
      for (std::size_t i = 0; i < layouts[j].n_options; ++i) nonzero += c.count(i, j, kk) != 0;
  CHECK(nonzero == 1);
  CHECK(c.count(2, 1, k) == 1);

  const std::vector<ResponseRecord> bad{{0, 5, 0, true}};
  CHECK_THROWS_AS(bin_responses(bad, p, scale, layouts), ValidationError);
}

TEST_CASE("marginals, streamed counts and record multiplicities agree") {
  const auto scale = default_scale();
  const Population p = sample_population(3000, scale->prior(), 6);
  std::vector<NominalParams> items;
  for (int j = 0; j < 12; ++j) items.push_back(NominalParams::zeroed_distractors(0.5 + 0.1 * j, -1.0 + 0.2 * j, 4));
  const auto recs = sample_responses(p, items, 10);
  const BinnedCounts binned = bin_responses(recs, p, scale, layouts_of(items));
  const BinnedCounts streamed = simulate_binned_counts(p, items, scale, 10);
  CHECK(binned == streamed);

  for (std::size_t j = 0; j < items.size(); ++j) {
    std::int64_t cj = 0;
    for (std::size_t k = 0; k < scale->size(); ++k) {
      std::int64_t cjk = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(binned.count(i, j, k) >= 0);
        cjk += binned.count(i, j, k);
      }
      CHECK(cjk == binned.label_total(j, k));
      cj += cjk;
    }
    CHECK(cj == binned.item_total(j));
    CHECK(cj == 3000);
  }
}

TEST_CASE("empirical ICC matches the generating curve within binomial error") {
  const auto scale = default_scale();
  const Population p = sample_population(100000, scale->prior(), 12);
  const double a1 = 1.4, b1 = 0.2;
  const std::vector<NominalParams> items{NominalParams::zeroed_distractors(a1, b1, 4)};
  const BinnedCounts counts = simulate_binned_counts(p, items, scale, 13);
  const DiscreteICC icc = empirical_icc(counts, 0);
  for (std::size_t k = 0; k < scale->size(); ++k) {
    if (!icc.is_present(k)) continue;
    // Within-bin ability varies, so compare to the bin average of the true curve.
    double expect = 0;
    std::int64_t n = 0;
    for (Eigen::Index i = 0; i < p.thetas.size(); ++i)
      if (scale->label_for_theta(p.thetas(i)) == k) {
        expect += twopl_from_nrm_correct_prob(p.thetas(i), a1, b1, 4);
        ++n;
      }
    expect /= static_cast<double>(n);
    const double se = std::sqrt(expect * (1 - expect) / static_cast<double>(n));
    CHECK(std::abs(icc.probs(static_cast<Eigen::Index>(k)) - expect) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("empirical ICC marks empty bins absent") {
  auto scale = std::make_shared<const AbilityScale>(build_ability_scale({"lo", "mid", "hi"}, {-1.0, 1.0}, {}));
  BinnedCounts c(scale, {{2, 0}});
  c.add(0, 0, 0, 3);
  c.add(0, 0, 2, 2);
  c.add(1, 0, 2, 2);
  const DiscreteICC icc = empirical_icc(c, 0);
  CHECK(icc.probs(0) == 1.0);
  CHECK_FALSE(icc.is_present(1));
  CHECK(std::isnan(icc.probs(1)));
  CHECK(icc.probs(2) == 0.5);

  BinnedCounts none(scale, {{2, 0}});
  CHECK_THROWS_AS(empirical_icc(none, 0), InsufficientDataError);
  CHECK_THROWS(empirical_icc(c, 3));
}

TEST_CASE("draw_categorical") {
  Eigen::VectorXd p(3);
  p << 0.2, 0.3, 0.5;
  CHECK(draw_categorical(p, 0.1) == 0);
  CHECK(draw_categorical(p, 0.25) == 1);
  CHECK(draw_categorical(p, 0.9) == 2);
  CHECK(draw_categorical(p, 1.0 - 1e-16) == 2);
}
