#pragma once

// Item-parameter estimation: direct least-squares 2PL calibration from raw
// responses at fixed abilities, the count-weighted nominal-model smoother
// over binned counts, and 2PL/1PL recovery from a discrete ICC.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idm/irt.hpp"
#include "idm/optimize.hpp"
#include "idm/simulate.hpp"

namespace idm {

struct CalibrationConfig {
  double tol = 1e-8;
  std::size_t max_iter = 500;
  std::size_t restarts = 1;
  ItemParams init{1.0, 0.0};
  /// Half-width of the uniform jitter applied to restart points.
  double jitter = 0.5;
  std::uint64_t seed = 0;
  /// |a| is capped here during optimization; a fit reaching the cap is
  /// reported as non-converged.
  double discrimination_cap = 50.0;

  void validate() const;
  BfgsOptions bfgs() const;
};

struct ItemFit {
  ItemParams params;
  double objective = 0.0;
  bool converged = false;
  std::size_t n_used = 0;
  bool b_identifiable = true;
  std::vector<std::string> warnings;
};

struct SmootherFit {
  NominalParams params;
  /// Count-weighted sum of squared option-frequency residuals.
  double objective = 0.0;
  bool converged = false;
  /// Option × label probabilities at every θ̄_k.
  Eigen::MatrixXd per_label_probs;
  AbilityScalePtr scale;
};

/// Minimizes the mean of (P₂(θ_i; a, b) − y_i)² over the responses to
/// `item`, with θ_i held fixed at the population values.
ItemFit calibrate_2pl(std::span<const ResponseRecord> records, const Population& pop, std::size_t item,
                      const CalibrationConfig& cfg = {});

/// Same objective on explicit (θ, y) pairs.
ItemFit calibrate_2pl(std::span<const double> thetas, std::span<const double> outcomes,
                      const CalibrationConfig& cfg = {});

/// Fits gauge-fixed option lines to binned option frequencies, weighting
/// label k by C_jk / C_j. Empty labels contribute nothing.
SmootherFit fit_smoother(const BinnedCounts& counts, std::size_t item, const AbilityScalePtr& scale,
                         const CalibrationConfig& cfg = {});

/// Minimizes Σ_k ω_k (P_k − σ(a(θ̄_k − b)))² over the present entries.
ItemFit recover_from_icc(const DiscreteICC& icc, const AbilityScale& scale, const CalibrationConfig& cfg = {});

/// 1PL variant of recover_from_icc with a fixed to one.
ItemFit recover_1pl_from_icc(const DiscreteICC& icc, const AbilityScale& scale,
                             const CalibrationConfig& cfg = {});

/// The correct-option row of a smoother fit as a discrete ICC.
DiscreteICC smoother_icc(const SmootherFit& fit, std::size_t correct_option);

/// Σ_k ω_k (P_k − σ(a(θ̄_k − b)))² over present entries.
double icc_objective(const DiscreteICC& icc, const AbilityScale& scale, const ItemParams& item);

/// θ̄ at the first 0.5 crossing of the ICC (linear interpolation), or 0.
double half_crossing(const DiscreteICC& icc, const AbilityScale& scale);

}  // namespace idm
