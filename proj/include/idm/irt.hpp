#pragma once

// Closed-form IRT curves, the nominal response model, and the discretized
// ability scale. Everything here is immutable after construction.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "idm/errors.hpp"

namespace idm {

/// Dichotomous 2PL item: P(correct | θ) = σ(a(θ − b)).
/// `a` carries no sign constraint; negatively discriminating items are legal.
struct ItemParams {
  double a = 1.0;
  double b = 0.0;
};

struct PopulationPrior {
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const;
};

/// Numerically stable logistic function.
template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

/// Max-subtracted softmax of a score vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
Scalar p2(Scalar theta, Scalar a, Scalar b) {
  using std::isfinite;
  if (!isfinite(theta) || !isfinite(a) || !isfinite(b)) throw DomainError("p2: non-finite input");
  return sigmoid(a * (theta - b));
}

inline double p2(double theta, const ItemParams& item) { return p2(theta, item.a, item.b); }

/// 1PL curve: the 2PL with discrimination fixed to one.
template <typename Scalar>
Scalar p1(Scalar theta, Scalar b) {
  return p2(theta, Scalar(1), b);
}

/// Nominal response model over n options: a softmax over the linear scores
/// slope_i·θ + intercept_i.
///
/// The parametrization is only identified up to a common shift of all slopes
/// and of all intercepts, so the constructor pins the last option to
/// (0, 0) by subtracting its line from every option. The difficulty form
/// a_i(θ − b_i) has slope a_i and intercept −a_i·b_i.
class NominalParams {
 public:
  NominalParams(Eigen::VectorXd slopes, Eigen::VectorXd intercepts, std::size_t correct_index);

  /// Builds from difficulty-form lines a_i(θ − b_i).
  static NominalParams from_difficulty_form(const std::vector<ItemParams>& lines, std::size_t correct_index);

  /// Correct option on line a1(θ − b1); every other option on the zero line.
  static NominalParams zeroed_distractors(double a1, double b1, std::size_t n_options,
                                          std::size_t correct_index = 0);

  std::size_t option_count() const noexcept { return static_cast<std::size_t>(slopes_.size()); }
  std::size_t correct_index() const noexcept { return correct_; }
  const Eigen::VectorXd& slopes() const noexcept { return slopes_; }
  const Eigen::VectorXd& intercepts() const noexcept { return intercepts_; }

  /// (a_i, b_i) of option i; empty when the gauge-fixed slope is zero.
  std::optional<ItemParams> difficulty_form(std::size_t option) const;

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores(Scalar theta) const {
    return (slopes_.cast<Scalar>() * theta + intercepts_.cast<Scalar>()).eval();
  }

 private:
  Eigen::VectorXd slopes_;
  Eigen::VectorXd intercepts_;
  std::size_t correct_;
};

/// Option probabilities of the nominal model at θ. Components sum to one.
Eigen::VectorXd nominal_probs(double theta, const NominalParams& params);

/// 2PL parameters equivalent to a zeroed-distractor nominal model whose
/// correct option follows a1(θ − b1) among n options.
ItemParams nrm_to_2pl(double a1, double b1, std::size_t n_options);

/// Inverse of nrm_to_2pl: the correct-option line (a1, b1) for a target 2PL item.
ItemParams twopl_to_nrm_line(const ItemParams& item, std::size_t n_options);

/// σ(a1(θ − b1) − log(n − 1)): the correct-option probability when the
/// n − 1 distractors are equally likely.
double twopl_from_nrm_correct_prob(double theta, double a1, double b1, std::size_t n_options);

/// Ordered descriptor labels partitioning the real line into right-closed
/// intervals (c_{k-1}, c_k], with the conditional mean θ̄_k and probability
/// mass ω_k of each interval under a normal population prior.
class AbilityScale {
 public:
  /// `cuts` holds the N − 1 interior cut points; the outer bounds are ±∞.
  static AbilityScale build(std::vector<std::string> labels, std::vector<double> cuts,
                            PopulationPrior prior);

  /// The 20-descriptor default scale (cut points from −3 to 2.7 in steps of
  /// 0.3, with "Emerging" covering (−1.8, −1.2] so the partition is contiguous).
  static AbilityScale default_descriptors(PopulationPrior prior = {0.13, 1.15});

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  /// Bounds c_0 = −∞ < c_1 < … < c_N = +∞ (length N + 1).
  const Eigen::VectorXd& bounds() const noexcept { return bounds_; }
  const Eigen::VectorXd& theta_bar() const noexcept { return theta_bar_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const PopulationPrior& prior() const noexcept { return prior_; }

  double lower(std::size_t k) const { return bounds_(static_cast<Eigen::Index>(k)); }
  double upper(std::size_t k) const { return bounds_(static_cast<Eigen::Index>(k) + 1); }

  /// Unique k with c_{k−1} < θ ≤ c_k.
  std::size_t label_for_theta(double theta) const;

  /// Index of a descriptor by name.
  std::size_t index_of(const std::string& label) const;

 private:
  AbilityScale() = default;

  std::vector<std::string> labels_;
  Eigen::VectorXd bounds_;
  Eigen::VectorXd theta_bar_;
  Eigen::VectorXd weights_;
  PopulationPrior prior_;
};

using AbilityScalePtr = std::shared_ptr<const AbilityScale>;

inline std::size_t label_for_theta(double theta, const AbilityScale& scale) {
  return scale.label_for_theta(theta);
}

inline AbilityScale build_ability_scale(std::vector<std::string> labels, std::vector<double> cuts,
                                        PopulationPrior prior) {
  return AbilityScale::build(std::move(labels), std::move(cuts), prior);
}

/// Correct-response probabilities P_j1..P_jN at the scale's labels.
/// Labels without data are absent; absent entries carry NaN in `probs`.
struct DiscreteICC {
  Eigen::VectorXd probs;
  std::vector<bool> present;
  AbilityScalePtr scale;

  DiscreteICC() = default;
  DiscreteICC(Eigen::VectorXd values, AbilityScalePtr scale_ref);
  DiscreteICC(Eigen::VectorXd values, std::vector<bool> mask, AbilityScalePtr scale_ref);

  std::size_t size() const noexcept { return static_cast<std::size_t>(probs.size()); }
  std::size_t present_count() const;
  bool is_present(std::size_t k) const { return present[k]; }
};

}  // namespace idm
