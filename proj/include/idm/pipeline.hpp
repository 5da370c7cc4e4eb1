#pragma once

// End-to-end orchestration: simulate a field test, smooth the binned counts,
// obtain model probabilities (surrogate, smoother, or an ingested file),
// recover item parameters from the model ICCs, bias-correct on the dev
// split, and report Pearson / RMSE per regime.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idm/calibrate.hpp"
#include "idm/irt.hpp"
#include "idm/surrogate.hpp"

namespace idm {

/// Sample Pearson correlation.
double pearson(std::span<const double> xs, std::span<const double> ys);

double rmse(std::span<const double> xs, std::span<const double> ys);

struct BiasCorrection {
  double slope = 1.0;
  double intercept = 0.0;
  std::size_t fitted_on = 0;
};

/// Least-squares map from predicted to true values on the dev items.
BiasCorrection fit_bias_correction(std::span<const double> pred_dev, std::span<const double> true_dev);

std::vector<double> apply_bias_correction(const BiasCorrection& corr, std::span<const double> preds);

enum class Regime { k1plB, k2plA, k2plB };
std::string regime_name(Regime r);

struct RegimeRow {
  Regime regime = Regime::k1plB;
  double pearson = 0.0;
  double rmse = 0.0;
  std::size_t n_items = 0;
};

struct EvalReport {
  std::string split;  // "dev" or "test"
  std::vector<RegimeRow> rows;

  const RegimeRow& row(Regime r) const;
};

/// One label's three probabilities. `observed` is absent for empty bins;
/// `smoothed` is absent when no field-test counts exist.
struct IccTriplet {
  double theta_bar = 0.0;
  std::optional<double> observed;
  std::optional<double> smoothed;
  std::optional<double> model;
};

struct IccComparison {
  std::string item_id;
  std::vector<IccTriplet> rows;
};

IccComparison make_icc_comparison(std::string item_id, const AbilityScale& scale, const DiscreteICC* observed,
                                  const DiscreteICC* smoothed, const DiscreteICC* model);

/// CSV with columns theta_bar,observed,nrm,model; absent cells are empty.
std::string icc_comparison_to_csv(const IccComparison& cmp);
IccComparison parse_icc_comparison_csv(std::string item_id, const std::string& text);
void export_icc_comparison(const std::filesystem::path& path, const IccComparison& cmp);

/// Whitespace-separated data for gnuplot; absent cells are "NaN".
std::string icc_comparison_to_gnuplot(const IccComparison& cmp);

enum class ModelSource { kSurrogate, kSmoother, kIngest };

struct SyntheticConfig {
  std::size_t n_items = 60;
  std::size_t n_students = 100000;
  std::size_t n_options = 4;
  double a_min = 0.7;
  double a_max = 2.0;
  double b_min = -2.0;
  double b_max = 2.0;
};

struct SplitConfig {
  double train = 0.70;
  double dev = 0.15;
  double test = 0.15;
  /// Explicit item-id lists override the fractions; remaining items are train.
  std::vector<std::string> dev_items;
  std::vector<std::string> test_items;
};

struct PipelineConfig {
  std::uint64_t seed = 20240601;
  AbilityScalePtr scale;  // defaults to the 20-descriptor scale
  std::optional<SyntheticConfig> synthetic = SyntheticConfig{};
  ModelSource model = ModelSource::kSurrogate;
  std::string probs_file;  // ingestion JSON (kIngest)
  std::string truth_file;  // CSV item_id,a,b (required without synthetic data)
  /// Standard deviation of Gaussian noise added to model ICC probabilities.
  double model_noise = 0.0;
  /// Apply the dev-split linear correction before scoring.
  bool bias_correction = true;
  CalibrationConfig calibration;
  TrainConfig train;
  SplitConfig splits;

  void validate() const;
};

/// Parses the JSON config schema documented in docs/config.md. Relative
/// file paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(const std::string& json_text, const std::filesystem::path& base_dir = {});

enum class Split { kTrain, kDev, kTest };

struct ItemEstimate {
  std::string item_id;
  Split split = Split::kTrain;
  std::optional<double> true_a;
  double true_b = 0.0;
  ItemFit fit_2pl;
  ItemFit fit_1pl;
  double corrected_a = 0.0;
  double corrected_b_2pl = 0.0;
  double corrected_b_1pl = 0.0;
};

struct PipelineResult {
  std::vector<EvalReport> reports;  // dev, test
  std::vector<std::pair<Regime, BiasCorrection>> corrections;
  std::vector<ItemEstimate> items;
  std::vector<IccComparison> iccs;
  std::vector<ItemOptionProbs> model_probs;
  std::optional<TrainResult> training;
  std::vector<std::string> notices;
};

/// Runs every stage. When `out_dir` is non-empty, writes report.json,
/// report.csv, item_estimates.csv, recovered_2pl.csv, recovered_1pl.csv,
/// model_probs.json, icc/<item>.csv and, for synthetic runs, counts.json,
/// truth.csv, items.json, smoother_probs.json. Output bytes depend only on
/// the config.
PipelineResult run_end_to_end(const PipelineConfig& cfg, const std::filesystem::path& out_dir = {});

/// Seeded assignment of items to train / dev / test.
std::vector<Split> assign_splits(const std::vector<std::string>& item_ids, const SplitConfig& cfg, std::uint64_t seed);

/// Synthetic ground truth: zeroed-distractor nominal items whose correct
/// option follows the 2PL curve (a, b) with a, b uniform in the configured ranges.
struct SyntheticItem {
  std::string item_id;
  NominalParams params;
  ItemParams truth;
};
std::vector<SyntheticItem> make_synthetic_items(const SyntheticConfig& cfg, std::uint64_t seed);

std::string report_to_json(const PipelineResult& result);
std::string report_to_csv(const PipelineResult& result);

/// Scores recovered parameters against ground truth (optionally fitting the
/// dev-split correction first).
PipelineResult evaluate_estimates(std::vector<ItemEstimate> items, bool bias_correction);

}  // namespace idm
