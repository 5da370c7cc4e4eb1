#pragma once

// Stand-in student model: a free logit table z[item][label][option] whose
// per-slice softmax is matched to target option distributions with the
// ω-weighted squared-difference loss
//
//   L = Σ_{j,k} ω_k ‖softmax(z_jk) − t_jk‖².

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idm/irt.hpp"

namespace idm {

/// Per-label option probabilities for one item (labels × options).
/// Doubles as surrogate training target and as the ingestion record for
/// probabilities produced by an external model.
struct ItemOptionProbs {
  std::string item_id;
  std::size_t correct_index = 0;
  Eigen::MatrixXd probs;

  std::size_t option_count() const noexcept { return static_cast<std::size_t>(probs.cols()); }
  std::size_t label_count() const noexcept { return static_cast<std::size_t>(probs.rows()); }
  /// Throws ValidationError unless each row sums to one within `tol`.
  void validate(double tol) const;
};

class LogitTable {
 public:
  LogitTable() = default;
  /// Zero logits for `option_counts[j]` options at each of `n_labels` labels.
  LogitTable(std::size_t n_labels, std::span<const std::size_t> option_counts);

  std::size_t item_count() const noexcept { return logits_.size(); }
  std::size_t label_count() const noexcept { return n_labels_; }
  std::size_t option_count(std::size_t item) const { return static_cast<std::size_t>(logits_.at(item).cols()); }

  Eigen::MatrixXd& item(std::size_t j) { return logits_.at(j); }
  const Eigen::MatrixXd& item(std::size_t j) const { return logits_.at(j); }

  bool operator==(const LogitTable& other) const { return n_labels_ == other.n_labels_ && logits_ == other.logits_; }

 private:
  std::size_t n_labels_ = 0;
  std::vector<Eigen::MatrixXd> logits_;
};

using LogitGradient = std::vector<Eigen::MatrixXd>;

Eigen::VectorXd surrogate_probs(const LogitTable& table, std::size_t item, std::size_t label);

/// Full loss over every item.
double distribution_loss(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                         const Eigen::VectorXd& weights);

/// Loss restricted to a subset of items.
double distribution_loss(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                         const Eigen::VectorXd& weights, std::span<const std::size_t> items);

/// Exact gradient of the full loss: ∂p_i/∂z_m = p_i(δ_im − p_m).
LogitGradient distribution_loss_gradient(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                                         const Eigen::VectorXd& weights);

enum class Optimizer { kAdam, kGradientDescent };

struct TrainConfig {
  double learning_rate = 5e-3;
  std::size_t epochs = 30000;
  std::size_t early_stop_patience = 500;
  std::uint64_t seed = 0;
  /// Fraction of items monitored for early stopping.
  double dev_fraction = 0.15;
  double clip_norm = 1.0;
  Optimizer optimizer = Optimizer::kAdam;
  /// Linear decay of the learning rate to zero over `epochs`.
  bool linear_decay = true;

  void validate() const;
};

struct TrainResult {
  LogitTable table;
  std::vector<double> train_loss;  // per epoch, after the update
  std::vector<double> dev_loss;
  double initial_loss = 0.0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  std::vector<std::size_t> dev_items;
};

class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Seeded choice of the early-stopping monitor subset.
std::vector<std::size_t> choose_dev_items(std::size_t n_items, double fraction, std::uint64_t seed);

/// Trains a zero-initialized table against `targets`. Returns the table
/// from the epoch with the lowest monitored (dev) loss.
TrainResult train_surrogate(std::span<const ItemOptionProbs> targets, const Eigen::VectorXd& weights,
                            const TrainConfig& cfg = {});

/// Correct-option softmax component across labels, per item.
std::vector<DiscreteICC> export_llm_icc(const LogitTable& table, std::span<const std::size_t> correct_options,
                                        const AbilityScalePtr& scale);

/// Table probabilities in the ingestion layout.
std::vector<ItemOptionProbs> table_probabilities(const LogitTable& table,
                                                 std::span<const ItemOptionProbs> like);

}  // namespace idm
