#include "idm/irt.hpp"

#include <algorithm>
#include <limits>

#include "idm/normal.hpp"

namespace idm {

void PopulationPrior::validate() const {
  if (!std::isfinite(mu)) throw ValidationError("prior: mu must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("prior: sigma must be positive");
}

NominalParams::NominalParams(Eigen::VectorXd slopes, Eigen::VectorXd intercepts, std::size_t correct_index)
    : slopes_(std::move(slopes)), intercepts_(std::move(intercepts)), correct_(correct_index) {
  if (slopes_.size() != intercepts_.size())
    throw ValidationError("NominalParams: slope and intercept counts differ");
  if (slopes_.size() < 2) throw ValidationError("NominalParams: need at least two options");
  if (!slopes_.allFinite() || !intercepts_.allFinite())
    throw ValidationError("NominalParams: non-finite line coefficients");
  if (correct_ >= option_count()) throw ValidationError("NominalParams: correct_index out of range");
  const Eigen::Index last = slopes_.size() - 1;
  slopes_.array() -= slopes_(last);
  intercepts_.array() -= intercepts_(last);
  slopes_(last) = 0.0;
  intercepts_(last) = 0.0;
}

NominalParams NominalParams::from_difficulty_form(const std::vector<ItemParams>& lines,
                                                  std::size_t correct_index) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(lines.size()));
  Eigen::VectorXd c(s.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    s(static_cast<Eigen::Index>(i)) = lines[i].a;
    c(static_cast<Eigen::Index>(i)) = -lines[i].a * lines[i].b;
  }
  return {std::move(s), std::move(c), correct_index};
}

NominalParams NominalParams::zeroed_distractors(double a1, double b1, std::size_t n_options,
                                                std::size_t correct_index) {
  if (n_options < 2) throw DomainError("zeroed_distractors: need at least two options");
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_options));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(s.size());
  if (correct_index >= n_options) throw ValidationError("zeroed_distractors: correct_index out of range");
  s(static_cast<Eigen::Index>(correct_index)) = a1;
  c(static_cast<Eigen::Index>(correct_index)) = -a1 * b1;
  return {std::move(s), std::move(c), correct_index};
}

std::optional<ItemParams> NominalParams::difficulty_form(std::size_t option) const {
  if (option >= option_count()) throw ValidationError("difficulty_form: option out of range");
  const double slope = slopes_(static_cast<Eigen::Index>(option));
  if (slope == 0.0) return std::nullopt;
  return ItemParams{slope, -intercepts_(static_cast<Eigen::Index>(option)) / slope};
}

Eigen::VectorXd nominal_probs(double theta, const NominalParams& params) {
  if (!std::isfinite(theta)) throw DomainError("nominal_probs: non-finite theta");
  return softmax(params.scores(theta));
}

ItemParams nrm_to_2pl(double a1, double b1, std::size_t n_options) {
  if (n_options < 2) throw DomainError("nrm_to_2pl: need at least two options");
  if (a1 == 0.0) throw NumericalError("nrm_to_2pl: zero slope has no 2PL difficulty");
  if (!std::isfinite(a1) || !std::isfinite(b1)) throw DomainError("nrm_to_2pl: non-finite input");
  return {a1, b1 + std::log(static_cast<double>(n_options - 1)) / a1};
}

ItemParams twopl_to_nrm_line(const ItemParams& item, std::size_t n_options) {
  if (n_options < 2) throw DomainError("twopl_to_nrm_line: need at least two options");
  if (item.a == 0.0) throw NumericalError("twopl_to_nrm_line: zero discrimination");
  return {item.a, item.b - std::log(static_cast<double>(n_options - 1)) / item.a};
}

double twopl_from_nrm_correct_prob(double theta, double a1, double b1, std::size_t n_options) {
  if (n_options < 2) throw DomainError("twopl_from_nrm_correct_prob: need at least two options");
  if (!std::isfinite(theta) || !std::isfinite(a1) || !std::isfinite(b1))
    throw DomainError("twopl_from_nrm_correct_prob: non-finite input");
  return sigmoid(a1 * (theta - b1) - std::log(static_cast<double>(n_options - 1)));
}

AbilityScale AbilityScale::build(std::vector<std::string> labels, std::vector<double> cuts,
                                 PopulationPrior prior) {
  prior.validate();
  if (labels.empty()) throw ValidationError("ability scale: no labels");
  if (labels.size() != cuts.size() + 1)
    throw ValidationError("ability scale: need exactly one more label than interior cut points");
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (!std::isfinite(cuts[i])) throw ValidationError("ability scale: interior cut points must be finite");
    if (i > 0 && !(cuts[i] > cuts[i - 1])) throw ValidationError("ability scale: bounds must strictly increase");
  }

  const auto n = static_cast<Eigen::Index>(labels.size());
  AbilityScale scale;
  scale.labels_ = std::move(labels);
  scale.prior_ = prior;
  scale.bounds_.resize(n + 1);
  scale.bounds_(0) = -std::numeric_limits<double>::infinity();
  scale.bounds_(n) = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + 1 < n; ++i) scale.bounds_(i + 1) = cuts[static_cast<std::size_t>(i)];

  scale.theta_bar_.resize(n);
  scale.weights_.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lo = (scale.bounds_(k) - prior.mu) / prior.sigma;
    const double hi = (scale.bounds_(k + 1) - prior.mu) / prior.sigma;
    const double mass = normal::interval_mass(lo, hi);
    if (!(mass >= 1e-300))
      throw ValidationError("ability scale: interval '" + scale.labels_[static_cast<std::size_t>(k)] +
                            "' has zero probability under the prior");
    // ς²·f(c) = ς·φ((c − μ)/ς)
    scale.weights_(k) = mass;
    scale.theta_bar_(k) = prior.mu + prior.sigma * (normal::pdf(lo) - normal::pdf(hi)) / mass;
  }

  for (Eigen::Index k = 0; k < n; ++k) {
    const double tb = scale.theta_bar_(k);
    if (!(tb > scale.bounds_(k) && tb < scale.bounds_(k + 1)) || (k > 0 && !(tb > scale.theta_bar_(k - 1))))
      throw NumericalError("ability scale: conditional means lost precision in interval '" +
                           scale.labels_[static_cast<std::size_t>(k)] + "'");
  }
  return scale;
}

AbilityScale AbilityScale::default_descriptors(PopulationPrior prior) {
  std::vector<std::string> labels = {
      "Critical",     "Severely Limited", "Deficient",    "Inadequate", "Minimal",
      "Emerging",     "Developing",       "Approaching Basic", "Basic", "Functional",
      "Satisfactory", "Competent",        "Proficient",   "Accomplished", "Advanced",
      "Superior",     "Exceptional",      "Outstanding",  "Distinguished", "Exemplary"};
  std::vector<double> cuts = {-3.0, -2.7, -2.4, -2.1, -1.8, -1.2, -0.9, -0.6, -0.3, 0.0,
                              0.3,  0.6,  0.9,  1.2,  1.5,  1.8,  2.1,  2.4,  2.7};
  return build(std::move(labels), std::move(cuts), prior);
}

std::size_t AbilityScale::label_for_theta(double theta) const {
  if (!std::isfinite(theta)) throw DomainError("label_for_theta: non-finite theta");
  // First interior bound ≥ θ; the interval ending there owns θ.
  const auto* begin = bounds_.data() + 1;
  const auto* end = bounds_.data() + bounds_.size() - 1;
  return static_cast<std::size_t>(std::lower_bound(begin, end, theta) - begin);
}

std::size_t AbilityScale::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("unknown ability label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

DiscreteICC::DiscreteICC(Eigen::VectorXd values, AbilityScalePtr scale_ref)
    : DiscreteICC(values, std::vector<bool>(static_cast<std::size_t>(values.size()), true), std::move(scale_ref)) {}

DiscreteICC::DiscreteICC(Eigen::VectorXd values, std::vector<bool> mask, AbilityScalePtr scale_ref)
    : probs(std::move(values)), present(std::move(mask)), scale(std::move(scale_ref)) {
  if (present.size() != static_cast<std::size_t>(probs.size()))
    throw ValidationError("DiscreteICC: mask length differs from probability count");
  if (scale && scale->size() != present.size())
    throw ValidationError("DiscreteICC: length differs from the scale's label count");
  for (std::size_t k = 0; k < present.size(); ++k) {
    const double p = probs(static_cast<Eigen::Index>(k));
    if (!present[k]) {
      probs(static_cast<Eigen::Index>(k)) = std::numeric_limits<double>::quiet_NaN();
    } else if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("DiscreteICC: probability outside [0, 1]");
    }
  }
}

std::size_t DiscreteICC::present_count() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
}

}  // namespace idm
