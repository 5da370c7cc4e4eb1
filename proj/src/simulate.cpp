#include "idm/simulate.hpp"

#include <limits>

#include "idm/rng.hpp"

namespace idm {

std::vector<ItemLayout> layouts_of(std::span<const NominalParams> items) {
  std::vector<ItemLayout> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back({it.option_count(), it.correct_index()});
  return out;
}

BinnedCounts::BinnedCounts(AbilityScalePtr scale, std::vector<ItemLayout> items)
    : scale_(std::move(scale)), items_(std::move(items)) {
  if (!scale_) throw ValidationError("BinnedCounts: missing ability scale");
  counts_.reserve(items_.size());
  for (const auto& it : items_) {
    if (it.n_options < 2) throw ValidationError("BinnedCounts: item needs at least two options");
    if (it.correct_index >= it.n_options) throw ValidationError("BinnedCounts: correct_index out of range");
    counts_.push_back(CountMatrix::Zero(static_cast<Eigen::Index>(it.n_options),
                                        static_cast<Eigen::Index>(scale_->size())));
  }
}

std::int64_t BinnedCounts::count(std::size_t option, std::size_t item, std::size_t label) const {
  const auto& m = counts_.at(item);
  if (option >= static_cast<std::size_t>(m.rows()) || label >= static_cast<std::size_t>(m.cols()))
    throw ValidationError("BinnedCounts: index out of range");
  return m(static_cast<Eigen::Index>(option), static_cast<Eigen::Index>(label));
}

std::int64_t BinnedCounts::label_total(std::size_t item, std::size_t label) const {
  const auto& m = counts_.at(item);
  if (label >= static_cast<std::size_t>(m.cols())) throw ValidationError("BinnedCounts: label out of range");
  return m.col(static_cast<Eigen::Index>(label)).sum();
}

std::int64_t BinnedCounts::item_total(std::size_t item) const { return counts_.at(item).sum(); }

void BinnedCounts::add(std::size_t option, std::size_t item, std::size_t label, std::int64_t n) {
  auto& m = counts_.at(item);
  if (option >= static_cast<std::size_t>(m.rows()) || label >= static_cast<std::size_t>(m.cols()))
    throw ValidationError("BinnedCounts: index out of range");
  if (n < 0) throw ValidationError("BinnedCounts: negative count");
  m(static_cast<Eigen::Index>(option), static_cast<Eigen::Index>(label)) += n;
}

void BinnedCounts::set_item_counts(std::size_t item, CountMatrix counts) {
  auto& m = counts_.at(item);
  if (counts.rows() != m.rows() || counts.cols() != m.cols())
    throw ValidationError("BinnedCounts: count matrix shape mismatch");
  if ((counts.array() < 0).any()) throw ValidationError("BinnedCounts: negative count");
  m = std::move(counts);
}

bool BinnedCounts::operator==(const BinnedCounts& other) const {
  if (counts_.size() != other.counts_.size() || label_count() != other.label_count()) return false;
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    if (items_[j].n_options != other.items_[j].n_options ||
        items_[j].correct_index != other.items_[j].correct_index || counts_[j] != other.counts_[j])
      return false;
  }
  return true;
}

Population sample_population(std::size_t n, const PopulationPrior& prior, std::uint64_t seed) {
  if (n == 0) throw ValidationError("sample_population: need at least one student");
  prior.validate();
  Population pop;
  pop.seed = seed;
  pop.thetas.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, {stream::kPopulation, i});
    pop.thetas(static_cast<Eigen::Index>(i)) = rng.normal(prior.mu, prior.sigma);
  }
  return pop;
}

std::size_t draw_categorical(const Eigen::VectorXd& probs, double u) {
  double acc = 0.0;
  const Eigen::Index last = probs.size() - 1;
  for (Eigen::Index i = 0; i < last; ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(last);
}

namespace {

template <typename Sink>
void for_each_response(const Population& pop, std::span<const NominalParams> items, std::uint64_t seed,
                       Sink&& sink) {
  if (items.empty()) throw ValidationError("sample_responses: no items");
  if (pop.size() > std::numeric_limits<std::uint32_t>::max() ||
      items.size() > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("sample_responses: too many students or items");
  for (const auto& it : items)
    if (it.option_count() > std::numeric_limits<std::uint16_t>::max())
      throw ValidationError("sample_responses: too many options");

  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double theta = pop.thetas(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < items.size(); ++j) {
      Rng rng(seed, {stream::kResponses, i, j});
      const std::size_t opt = draw_categorical(nominal_probs(theta, items[j]), rng.uniform());
      sink(i, j, opt, opt == items[j].correct_index());
    }
  }
}

}  // namespace

std::vector<ResponseRecord> sample_responses(const Population& pop, std::span<const NominalParams> items,
                                             std::uint64_t seed) {
  std::vector<ResponseRecord> out;
  out.reserve(pop.size() * items.size());
  for_each_response(pop, items, seed, [&](std::size_t i, std::size_t j, std::size_t opt, bool correct) {
    out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                   static_cast<std::uint16_t>(opt), correct});
  });
  return out;
}

BinnedCounts bin_responses(std::span<const ResponseRecord> records, const Population& pop,
                           AbilityScalePtr scale, std::vector<ItemLayout> items) {
  BinnedCounts counts(std::move(scale), std::move(items));
  const AbilityScale& sc = *counts.scale();
  for (const auto& r : records) {
    if (r.student >= pop.size()) throw ValidationError("bin_responses: student index out of range");
    if (r.item >= counts.item_count()) throw ValidationError("bin_responses: item index out of range");
    counts.add(r.option_chosen, r.item, sc.label_for_theta(pop.thetas(r.student)));
  }
  return counts;
}

BinnedCounts simulate_binned_counts(const Population& pop, std::span<const NominalParams> items,
                                    AbilityScalePtr scale, std::uint64_t seed) {
  BinnedCounts counts(std::move(scale), layouts_of(items));
  std::vector<std::size_t> labels(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i)
    labels[i] = counts.scale()->label_for_theta(pop.thetas(static_cast<Eigen::Index>(i)));
  for_each_response(pop, items, seed, [&](std::size_t i, std::size_t j, std::size_t opt, bool) {
    counts.add(opt, j, labels[i]);
  });
  return counts;
}

DiscreteICC empirical_icc(const BinnedCounts& counts, std::size_t item, std::size_t correct_option) {
  if (item >= counts.item_count()) throw ValidationError("empirical_icc: item out of range");
  const CountMatrix& m = counts.item_counts(item);
  if (correct_option >= static_cast<std::size_t>(m.rows()))
    throw ValidationError("empirical_icc: correct option out of range");
  const Eigen::Index n_labels = m.cols();
  Eigen::VectorXd p(n_labels);
  std::vector<bool> present(static_cast<std::size_t>(n_labels));
  bool any = false;
  for (Eigen::Index k = 0; k < n_labels; ++k) {
    const std::int64_t total = m.col(k).sum();
    present[static_cast<std::size_t>(k)] = total > 0;
    any = any || total > 0;
    p(k) = total > 0 ? static_cast<double>(m(static_cast<Eigen::Index>(correct_option), k)) /
                           static_cast<double>(total)
                     : 0.0;
  }
  if (!any) throw InsufficientDataError("empirical_icc: every bin of the item is empty");
  return {std::move(p), std::move(present), counts.scale()};
}

}  // namespace idm
