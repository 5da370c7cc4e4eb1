#pragma once

// File formats. CSV files carry a header row; doubles are written in
// shortest round-trip form so every file reloads bit-exactly.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idm/calibrate.hpp"
#include "idm/irt.hpp"
#include "idm/simulate.hpp"
#include "idm/surrogate.hpp"

namespace idm::io {

namespace fs = std::filesystem;

std::string format_double(double v);
std::string read_text(const fs::path& path);
/// Writes atomically enough for our purposes: creates parent directories.
void write_text(const fs::path& path, const std::string& text);

// Ability scale: {"descriptors": [{"label": s, "upper_bound": x | "inf"}, ...],
//                 "prior": {"mu": x, "sigma": x}}
AbilityScale parse_scale(const std::string& json_text);
AbilityScale load_scale(const fs::path& path);
std::string scale_to_json(const AbilityScale& scale);

// Ground-truth items: {"items": [{"item_id", "correct_index", "slopes", "intercepts",
//                                 "true_a", "true_b"}]}
struct GroundTruthItem {
  std::string item_id;
  NominalParams params;
  ItemParams truth;
};
std::string items_to_json(const std::vector<GroundTruthItem>& items);
std::vector<GroundTruthItem> parse_items(const std::string& json_text);

// Truth table CSV: item_id,a,b (a may be empty for 1PL-only data).
struct TruthRow {
  std::string item_id;
  std::optional<double> a;
  double b = 0.0;
};
std::string truth_to_csv(const std::vector<TruthRow>& rows);
std::vector<TruthRow> parse_truth_csv(const std::string& text);

// Responses CSV: student_id,item_id,option_chosen,theta
std::string responses_to_csv(const std::vector<ResponseRecord>& records, const Population& pop,
                             const std::vector<std::string>& item_ids);
struct ResponseTable {
  Population pop;
  std::vector<ResponseRecord> records;
  std::vector<std::string> item_ids;
};
/// `keys` maps item_id to the keyed option; items absent from `keys` are rejected.
ResponseTable parse_responses_csv(const std::string& text, const std::map<std::string, std::size_t>& keys);

// Counts JSON: {"labels": [...], "items": {item_id: {"options": n, "correct_index": i,
//                                                    "counts": {label: [c_1..c_n]}}}}
std::string counts_to_json(const BinnedCounts& counts, const std::vector<std::string>& item_ids);
struct CountsFile {
  BinnedCounts counts;
  std::vector<std::string> item_ids;
};
CountsFile parse_counts(const std::string& json_text, const AbilityScalePtr& scale);

// Item parameters CSV: item_id,a,b,converged,objective,n_used
struct ItemParamRow {
  std::string item_id;
  ItemFit fit;
};
std::string item_params_to_csv(const std::vector<ItemParamRow>& rows);
std::vector<ItemParamRow> parse_item_params_csv(const std::string& text);

// Probability ingestion JSON:
// {"items": [{"item_id", "options": n, "correct_index", "probs": {label: [p_1..p_n]}}]}
// Labels missing from "probs" are absent (NaN rows).
std::string probabilities_to_json(const std::vector<ItemOptionProbs>& items, const AbilityScale& scale);
std::vector<ItemOptionProbs> parse_probabilities(const std::string& json_text, const AbilityScale& scale,
                                                 double sum_tol = 1e-4);
/// Rows of an ingested record that were present in the file.
std::vector<bool> present_labels(const ItemOptionProbs& item);

}  // namespace idm::io
