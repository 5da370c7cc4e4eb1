#pragma once

// Virtual field test: abilities from the population prior, option choices
// from ground-truth nominal models, and per-label count tensors.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "idm/irt.hpp"

namespace idm {

struct Population {
  Eigen::VectorXd thetas;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(thetas.size()); }
};

struct ResponseRecord {
  std::uint32_t student = 0;
  std::uint32_t item = 0;
  std::uint16_t option_chosen = 0;
  bool correct = false;
};

/// What binning needs to know about an item.
struct ItemLayout {
  std::size_t n_options = 0;
  std::size_t correct_index = 0;
};

std::vector<ItemLayout> layouts_of(std::span<const NominalParams> items);

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// C[i][j][k]: students with label k choosing option i on item j, stored per
/// item as an options × labels matrix.
class BinnedCounts {
 public:
  BinnedCounts(AbilityScalePtr scale, std::vector<ItemLayout> items);

  std::size_t item_count() const noexcept { return items_.size(); }
  std::size_t label_count() const noexcept { return scale_->size(); }
  const AbilityScalePtr& scale() const noexcept { return scale_; }
  const ItemLayout& layout(std::size_t item) const { return items_.at(item); }

  const CountMatrix& item_counts(std::size_t item) const { return counts_.at(item); }
  std::int64_t count(std::size_t option, std::size_t item, std::size_t label) const;
  /// C_jk
  std::int64_t label_total(std::size_t item, std::size_t label) const;
  /// C_j
  std::int64_t item_total(std::size_t item) const;

  void add(std::size_t option, std::size_t item, std::size_t label, std::int64_t n = 1);
  /// Replaces an item's whole count matrix (used by file loaders).
  void set_item_counts(std::size_t item, CountMatrix counts);

  bool operator==(const BinnedCounts& other) const;

 private:
  AbilityScalePtr scale_;
  std::vector<ItemLayout> items_;
  std::vector<CountMatrix> counts_;
};

/// n i.i.d. draws from N(mu, sigma²); student i uses its own RNG stream.
Population sample_population(std::size_t n, const PopulationPrior& prior, std::uint64_t seed);

/// One categorical draw from nominal_probs(θ_i, item_j) per (student, item),
/// each on its own RNG stream so the result does not depend on draw order.
std::vector<ResponseRecord> sample_responses(const Population& pop, std::span<const NominalParams> items,
                                             std::uint64_t seed);

/// Exact per-label tallies of a record list.
BinnedCounts bin_responses(std::span<const ResponseRecord> records, const Population& pop,
                           AbilityScalePtr scale, std::vector<ItemLayout> items);

/// Equivalent to bin_responses(sample_responses(...)) without materializing
/// the record list.
BinnedCounts simulate_binned_counts(const Population& pop, std::span<const NominalParams> items,
                                    AbilityScalePtr scale, std::uint64_t seed);

/// Observed discrete ICC P_jk = C_{correct,j,k} / C_jk; bins with C_jk = 0
/// are absent.
DiscreteICC empirical_icc(const BinnedCounts& counts, std::size_t item, std::size_t correct_option);

inline DiscreteICC empirical_icc(const BinnedCounts& counts, std::size_t item) {
  return empirical_icc(counts, item, counts.layout(item).correct_index);
}

/// Draws one option from a probability vector given u ∈ (0, 1).
std::size_t draw_categorical(const Eigen::VectorXd& probs, double u);

}  // namespace idm
