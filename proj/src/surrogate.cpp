#include "idm/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "idm/rng.hpp"

namespace idm {

void ItemOptionProbs::validate(double tol) const {
  if (probs.cols() < 2) throw ValidationError("item '" + item_id + "': need at least two options");
  if (correct_index >= option_count())
    throw ValidationError("item '" + item_id + "': correct_index out of range");
  if (!probs.allFinite() || (probs.array() < 0.0).any() || (probs.array() > 1.0).any())
    throw ValidationError("item '" + item_id + "': probabilities must lie in [0, 1]");
  for (Eigen::Index k = 0; k < probs.rows(); ++k)
    if (std::abs(probs.row(k).sum() - 1.0) > tol)
      throw ValidationError("item '" + item_id + "': probability vector does not sum to one");
}

LogitTable::LogitTable(std::size_t n_labels, std::span<const std::size_t> option_counts) : n_labels_(n_labels) {
  logits_.reserve(option_counts.size());
  for (const std::size_t n : option_counts) {
    if (n < 2) throw ValidationError("LogitTable: need at least two options per item");
    logits_.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_labels), static_cast<Eigen::Index>(n)));
  }
}

Eigen::VectorXd surrogate_probs(const LogitTable& table, std::size_t item, std::size_t label) {
  if (item >= table.item_count()) throw ValidationError("surrogate_probs: item out of range");
  if (label >= table.label_count()) throw ValidationError("surrogate_probs: label out of range");
  return softmax(table.item(item).row(static_cast<Eigen::Index>(label)).transpose());
}

namespace {

constexpr double kTargetTolerance = 1e-6;

void check_inputs(const LogitTable& table, std::span<const ItemOptionProbs> targets, const Eigen::VectorXd& weights) {
  if (targets.size() != table.item_count()) throw ValidationError("distribution_loss: target/item count mismatch");
  if (static_cast<std::size_t>(weights.size()) != table.label_count())
    throw ValidationError("distribution_loss: weight/label count mismatch");
  if (!weights.allFinite() || (weights.array() < 0.0).any())
    throw ValidationError("distribution_loss: weights must be finite and non-negative");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (targets[j].label_count() != table.label_count() || targets[j].option_count() != table.option_count(j))
      throw ValidationError("distribution_loss: target shape differs from table for item '" + targets[j].item_id + "'");
    targets[j].validate(kTargetTolerance);
  }
}

double item_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& t, const Eigen::VectorXd& w) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    if (w(k) == 0.0) continue;
    sum += w(k) * (softmax(z.row(k).transpose()) - t.row(k).transpose()).squaredNorm();
  }
  return sum;
}

}  // namespace

double distribution_loss(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                         const Eigen::VectorXd& weights) {
  check_inputs(table, targets, weights);
  double sum = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j) sum += item_loss(table.item(j), targets[j].probs, weights);
  return sum;
}

double distribution_loss(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                         const Eigen::VectorXd& weights, std::span<const std::size_t> items) {
  check_inputs(table, targets, weights);
  double sum = 0.0;
  for (const std::size_t j : items) {
    if (j >= targets.size()) throw ValidationError("distribution_loss: item out of range");
    sum += item_loss(table.item(j), targets[j].probs, weights);
  }
  return sum;
}

namespace {

LogitGradient gradient_unchecked(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                                 const Eigen::VectorXd& weights) {
  LogitGradient grad(table.item_count());
  for (std::size_t j = 0; j < table.item_count(); ++j) {
    const Eigen::MatrixXd& z = table.item(j);
    Eigen::MatrixXd& g = grad[j];
    g.setZero(z.rows(), z.cols());
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
      if (weights(k) == 0.0) continue;
      const Eigen::VectorXd p = softmax(z.row(k).transpose());
      const Eigen::VectorXd r = p - targets[j].probs.row(k).transpose();
      g.row(k) = (2.0 * weights(k)) * (p.array() * (r.array() - r.dot(p))).matrix().transpose();
    }
  }
  return grad;
}

double full_loss_unchecked(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                           const Eigen::VectorXd& weights, std::span<const std::size_t> items) {
  double sum = 0.0;
  for (const std::size_t j : items) sum += item_loss(table.item(j), targets[j].probs, weights);
  return sum;
}

}  // namespace

LogitGradient distribution_loss_gradient(const LogitTable& table, std::span<const ItemOptionProbs> targets,
                                         const Eigen::VectorXd& weights) {
  check_inputs(table, targets, weights);
  return gradient_unchecked(table, targets, weights);
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("train: learning_rate must be finite and non-negative");
  if (epochs < 1) throw ValidationError("train: epochs must be at least 1");
  if (early_stop_patience < 1) throw ValidationError("train: early_stop_patience must be at least 1");
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) throw ValidationError("train: dev_fraction must be in [0, 1)");
  if (!(clip_norm > 0.0)) throw ValidationError("train: clip_norm must be positive");
}

std::vector<std::size_t> choose_dev_items(std::size_t n_items, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, {stream::kSplits, 0x5u});
  for (std::size_t i = n_items; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto take = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_items)));
  order.resize(std::min(take, n_items));
  std::sort(order.begin(), order.end());
  return order;
}

TrainResult train_surrogate(std::span<const ItemOptionProbs> targets, const Eigen::VectorXd& weights,
                            const TrainConfig& cfg) {
  cfg.validate();
  if (targets.empty()) throw ValidationError("train_surrogate: no targets");
  std::vector<std::size_t> option_counts;
  for (const auto& t : targets) option_counts.push_back(t.option_count());
  LogitTable table(static_cast<std::size_t>(weights.size()), option_counts);
  check_inputs(table, targets, weights);

  std::vector<std::size_t> all(targets.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  TrainResult out;
  out.dev_items = choose_dev_items(targets.size(), cfg.dev_fraction, cfg.seed);
  const std::span<const std::size_t> monitor = out.dev_items.empty() ? std::span<const std::size_t>(all)
                                                                     : std::span<const std::size_t>(out.dev_items);

  out.initial_loss = full_loss_unchecked(table, targets, weights, all);
  double best = full_loss_unchecked(table, targets, weights, monitor);
  LogitTable best_table = table;
  std::size_t since_best = 0;

  // Adam state; unused for plain gradient descent.
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-12;
  LogitGradient m1(targets.size());
  LogitGradient m2(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) {
    m1[j].setZero(table.item(j).rows(), table.item(j).cols());
    m2[j] = m1[j];
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    LogitGradient g = gradient_unchecked(table, targets, weights);
    double norm2 = 0.0;
    for (const auto& gj : g) norm2 += gj.squaredNorm();
    const double norm = std::sqrt(norm2);
    if (norm > cfg.clip_norm)
      for (auto& gj : g) gj *= cfg.clip_norm / norm;

    const double lr = cfg.linear_decay
                          ? cfg.learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs))
                          : cfg.learning_rate;
    if (lr != 0.0) {
      if (cfg.optimizer == Optimizer::kGradientDescent) {
        for (std::size_t j = 0; j < g.size(); ++j) table.item(j) -= lr * g[j];
      } else {
        const double t = static_cast<double>(epoch + 1);
        const double c1 = 1.0 - std::pow(kBeta1, t);
        const double c2 = 1.0 - std::pow(kBeta2, t);
        for (std::size_t j = 0; j < g.size(); ++j) {
          m1[j] = kBeta1 * m1[j] + (1.0 - kBeta1) * g[j];
          m2[j] = kBeta2 * m2[j] + (1.0 - kBeta2) * g[j].cwiseAbs2();
          table.item(j).array() -= lr * (m1[j].array() / c1) / ((m2[j].array() / c2).sqrt() + kEps);
        }
      }
    }

    const double train = full_loss_unchecked(table, targets, weights, all);
    const double dev = full_loss_unchecked(table, targets, weights, monitor);
    out.train_loss.push_back(train);
    out.dev_loss.push_back(dev);
    if (!std::isfinite(train) || (out.initial_loss > 0.0 && train > 10.0 * out.initial_loss))
      throw TrainingError("train_surrogate: loss diverged", out.train_loss);

    if (dev < best) {
      best = dev;
      best_table = table;
      out.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      out.stopped_early = true;
      break;
    }
  }
  out.table = std::move(best_table);
  return out;
}

std::vector<DiscreteICC> export_llm_icc(const LogitTable& table, std::span<const std::size_t> correct_options,
                                        const AbilityScalePtr& scale) {
  if (correct_options.size() != table.item_count())
    throw ValidationError("export_llm_icc: correct option count differs from item count");
  if (scale && scale->size() != table.label_count())
    throw ValidationError("export_llm_icc: scale label count differs from table");
  std::vector<DiscreteICC> out;
  out.reserve(table.item_count());
  for (std::size_t j = 0; j < table.item_count(); ++j) {
    if (correct_options[j] >= table.option_count(j)) throw ValidationError("export_llm_icc: option out of range");
    Eigen::VectorXd p(static_cast<Eigen::Index>(table.label_count()));
    for (std::size_t k = 0; k < table.label_count(); ++k)
      p(static_cast<Eigen::Index>(k)) = surrogate_probs(table, j, k)(static_cast<Eigen::Index>(correct_options[j]));
    out.emplace_back(std::move(p), scale);
  }
  return out;
}

std::vector<ItemOptionProbs> table_probabilities(const LogitTable& table, std::span<const ItemOptionProbs> like) {
  if (like.size() != table.item_count()) throw ValidationError("table_probabilities: item count mismatch");
  std::vector<ItemOptionProbs> out;
  out.reserve(like.size());
  for (std::size_t j = 0; j < like.size(); ++j) {
    ItemOptionProbs rec{like[j].item_id, like[j].correct_index, Eigen::MatrixXd(table.item(j).rows(), table.item(j).cols())};
    for (Eigen::Index k = 0; k < rec.probs.rows(); ++k)
      rec.probs.row(k) = softmax(table.item(j).row(k).transpose()).transpose();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace idm
