#include "idm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace idm::io {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::vector<std::string>& header,
                                                const char* what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(std::string(what) + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_line(line) != header) throw ValidationError(std::string(what) + ": unexpected header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw ValidationError(std::string(what) + ": wrong column count in line '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_double(const std::string& s, const char* what) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError(std::string(what) + ": cannot parse number '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s, const char* what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError(std::string(what) + ": cannot parse index '" + s + "'");
  return v;
}

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\n\r") != std::string::npos)
    throw ValidationError("item id '" + id + "' is empty or contains a comma or newline");
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
T get(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- scale

AbilityScale parse_scale(const std::string& json_text) {
  const json j = parse_json(json_text, "scale config");
  const json& desc = j.contains("descriptors") ? j.at("descriptors") : j;
  if (!desc.is_array() || desc.empty()) throw ValidationError("scale config: 'descriptors' must be a non-empty array");
  PopulationPrior prior;
  if (j.is_object() && j.contains("prior")) {
    prior.mu = get<double>(j.at("prior"), "mu", "scale prior");
    prior.sigma = get<double>(j.at("prior"), "sigma", "scale prior");
  }
  std::vector<std::string> labels;
  std::vector<double> cuts;
  for (std::size_t i = 0; i < desc.size(); ++i) {
    const json& d = desc[i];
    labels.push_back(get<std::string>(d, "label", "scale descriptor"));
    if (!d.contains("upper_bound")) throw ValidationError("scale descriptor: missing 'upper_bound'");
    const json& ub = d.at("upper_bound");
    const bool last = i + 1 == desc.size();
    if (ub.is_string()) {
      if (ub.get<std::string>() != "inf" || !last)
        throw ValidationError("scale descriptor: only the last upper_bound may be \"inf\"");
    } else if (ub.is_number()) {
      if (last) throw ValidationError("scale descriptor: the last upper_bound must be \"inf\"");
      cuts.push_back(ub.get<double>());
    } else {
      throw ValidationError("scale descriptor: upper_bound must be a number or \"inf\"");
    }
  }
  return AbilityScale::build(std::move(labels), std::move(cuts), prior);
}

AbilityScale load_scale(const fs::path& path) { return parse_scale(read_text(path)); }

std::string scale_to_json(const AbilityScale& scale) {
  json j;
  j["descriptors"] = json::array();
  for (std::size_t k = 0; k < scale.size(); ++k) {
    json d;
    d["label"] = scale.labels()[k];
    if (k + 1 == scale.size())
      d["upper_bound"] = "inf";
    else
      d["upper_bound"] = scale.upper(k);
    j["descriptors"].push_back(d);
  }
  j["prior"] = {{"mu", scale.prior().mu}, {"sigma", scale.prior().sigma}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- items

std::string items_to_json(const std::vector<GroundTruthItem>& items) {
  json j;
  j["items"] = json::array();
  for (const auto& it : items) {
    check_id(it.item_id);
    json e;
    e["item_id"] = it.item_id;
    e["correct_index"] = it.params.correct_index();
    e["slopes"] = std::vector<double>(it.params.slopes().begin(), it.params.slopes().end());
    e["intercepts"] = std::vector<double>(it.params.intercepts().begin(), it.params.intercepts().end());
    e["true_a"] = it.truth.a;
    e["true_b"] = it.truth.b;
    j["items"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::vector<GroundTruthItem> parse_items(const std::string& json_text) {
  const json j = parse_json(json_text, "items file");
  std::vector<GroundTruthItem> out;
  for (const json& e : get<json>(j, "items", "items file")) {
    const auto s = get<std::vector<double>>(e, "slopes", "items file");
    const auto c = get<std::vector<double>>(e, "intercepts", "items file");
    NominalParams params(Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size())),
                         Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())),
                         get<std::size_t>(e, "correct_index", "items file"));
    ItemParams truth{e.value("true_a", std::numeric_limits<double>::quiet_NaN()),
                     e.value("true_b", std::numeric_limits<double>::quiet_NaN())};
    out.push_back({get<std::string>(e, "item_id", "items file"), std::move(params), truth});
  }
  return out;
}

// ---------------------------------------------------------------- truth

std::string truth_to_csv(const std::vector<TruthRow>& rows) {
  std::string s = "item_id,a,b\n";
  for (const auto& r : rows) {
    check_id(r.item_id);
    s += r.item_id + "," + (r.a ? format_double(*r.a) : "") + "," + format_double(r.b) + "\n";
  }
  return s;
}

std::vector<TruthRow> parse_truth_csv(const std::string& text) {
  std::vector<TruthRow> out;
  for (const auto& c : parse_csv(text, {"item_id", "a", "b"}, "truth file")) {
    TruthRow r;
    r.item_id = c[0];
    if (!c[1].empty()) r.a = parse_double(c[1], "truth file");
    r.b = parse_double(c[2], "truth file");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- responses

std::string responses_to_csv(const std::vector<ResponseRecord>& records, const Population& pop,
                             const std::vector<std::string>& item_ids) {
  std::string s = "student_id,item_id,option_chosen,theta\n";
  s.reserve(records.size() * 40);
  for (const auto& r : records) {
    if (r.item >= item_ids.size() || r.student >= pop.size())
      throw ValidationError("responses_to_csv: record index out of range");
    s += std::to_string(r.student) + "," + item_ids[r.item] + "," + std::to_string(r.option_chosen) + "," +
         format_double(pop.thetas(r.student)) + "\n";
  }
  return s;
}

ResponseTable parse_responses_csv(const std::string& text, const std::map<std::string, std::size_t>& keys) {
  ResponseTable t;
  std::map<std::string, std::uint32_t> item_index;
  std::vector<double> thetas;
  for (const auto& c : parse_csv(text, {"student_id", "item_id", "option_chosen", "theta"}, "responses file")) {
    const std::size_t student = parse_index(c[0], "responses file");
    const auto key = keys.find(c[1]);
    if (key == keys.end()) throw ValidationError("responses file: unknown item '" + c[1] + "'");
    auto [it, inserted] = item_index.try_emplace(c[1], static_cast<std::uint32_t>(t.item_ids.size()));
    if (inserted) t.item_ids.push_back(c[1]);
    const double theta = parse_double(c[3], "responses file");
    if (!std::isfinite(theta)) throw ValidationError("responses file: non-finite theta");
    if (student >= thetas.size()) thetas.resize(student + 1, std::numeric_limits<double>::quiet_NaN());
    if (!std::isnan(thetas[student]) && thetas[student] != theta)
      throw ValidationError("responses file: student " + c[0] + " has conflicting theta values");
    thetas[student] = theta;
    const std::size_t option = parse_index(c[2], "responses file");
    t.records.push_back({static_cast<std::uint32_t>(student), it->second, static_cast<std::uint16_t>(option),
                         option == key->second});
  }
  for (double th : thetas)
    if (std::isnan(th)) throw ValidationError("responses file: student ids are not contiguous");
  t.pop.thetas = Eigen::Map<const Eigen::VectorXd>(thetas.data(), static_cast<Eigen::Index>(thetas.size()));
  return t;
}

// ---------------------------------------------------------------- counts

std::string counts_to_json(const BinnedCounts& counts, const std::vector<std::string>& item_ids) {
  if (item_ids.size() != counts.item_count()) throw ValidationError("counts_to_json: item id count mismatch");
  const AbilityScale& scale = *counts.scale();
  json j;
  j["labels"] = scale.labels();
  j["items"] = json::object();
  for (std::size_t it = 0; it < counts.item_count(); ++it) {
    check_id(item_ids[it]);
    const CountMatrix& m = counts.item_counts(it);
    json e;
    e["options"] = counts.layout(it).n_options;
    e["correct_index"] = counts.layout(it).correct_index;
    json per_label = json::object();
    for (std::size_t k = 0; k < scale.size(); ++k) {
      std::vector<std::int64_t> col(static_cast<std::size_t>(m.rows()));
      for (Eigen::Index i = 0; i < m.rows(); ++i) col[static_cast<std::size_t>(i)] = m(i, static_cast<Eigen::Index>(k));
      per_label[scale.labels()[k]] = col;
    }
    e["counts"] = per_label;
    j["items"][item_ids[it]] = e;
  }
  return j.dump(2) + "\n";
}

CountsFile parse_counts(const std::string& json_text, const AbilityScalePtr& scale) {
  const json j = parse_json(json_text, "counts file");
  const auto labels = get<std::vector<std::string>>(j, "labels", "counts file");
  if (labels != scale->labels()) throw ValidationError("counts file: labels differ from the active scale");
  const json& items = get<json>(j, "items", "counts file");
  if (!items.is_object()) throw ValidationError("counts file: 'items' must be an object");

  std::vector<std::string> ids;
  std::vector<ItemLayout> layouts;
  for (const auto& [id, e] : items.items()) {
    ids.push_back(id);
    layouts.push_back({get<std::size_t>(e, "options", "counts file"), get<std::size_t>(e, "correct_index", "counts file")});
  }
  BinnedCounts counts(scale, layouts);
  std::size_t it = 0;
  for (const auto& [id, e] : items.items()) {
    const json& per_label = get<json>(e, "counts", "counts file");
    CountMatrix m = CountMatrix::Zero(static_cast<Eigen::Index>(layouts[it].n_options),
                                      static_cast<Eigen::Index>(scale->size()));
    for (const auto& [label, col] : per_label.items()) {
      const std::size_t k = scale->index_of(label);
      const auto v = col.get<std::vector<std::int64_t>>();
      if (v.size() != layouts[it].n_options)
        throw ValidationError("counts file: item '" + id + "' label '" + label + "' has wrong option count");
      for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[i];
    }
    counts.set_item_counts(it, std::move(m));
    ++it;
  }
  return {std::move(counts), std::move(ids)};
}

// ---------------------------------------------------------------- item params

std::string item_params_to_csv(const std::vector<ItemParamRow>& rows) {
  std::string s = "item_id,a,b,converged,objective,n_used\n";
  for (const auto& r : rows) {
    check_id(r.item_id);
    s += r.item_id + "," + format_double(r.fit.params.a) + "," + format_double(r.fit.params.b) + "," +
         (r.fit.converged ? "1" : "0") + "," + format_double(r.fit.objective) + "," + std::to_string(r.fit.n_used) +
         "\n";
  }
  return s;
}

std::vector<ItemParamRow> parse_item_params_csv(const std::string& text) {
  std::vector<ItemParamRow> out;
  for (const auto& c : parse_csv(text, {"item_id", "a", "b", "converged", "objective", "n_used"}, "item params")) {
    ItemParamRow r;
    r.item_id = c[0];
    r.fit.params = {parse_double(c[1], "item params"), parse_double(c[2], "item params")};
    if (c[3] != "0" && c[3] != "1") throw ValidationError("item params: converged must be 0 or 1");
    r.fit.converged = c[3] == "1";
    r.fit.objective = parse_double(c[4], "item params");
    r.fit.n_used = parse_index(c[5], "item params");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- probabilities

std::string probabilities_to_json(const std::vector<ItemOptionProbs>& items, const AbilityScale& scale) {
  json j;
  j["items"] = json::array();
  for (const auto& it : items) {
    check_id(it.item_id);
    if (it.label_count() != scale.size()) throw ValidationError("probabilities_to_json: label count mismatch");
    json e;
    e["item_id"] = it.item_id;
    e["options"] = it.option_count();
    e["correct_index"] = it.correct_index;
    json probs = json::object();
    for (std::size_t k = 0; k < scale.size(); ++k) {
      const auto row = it.probs.row(static_cast<Eigen::Index>(k));
      if (row.hasNaN()) continue;
      probs[scale.labels()[k]] = std::vector<double>(row.begin(), row.end());
    }
    e["probs"] = probs;
    j["items"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::vector<ItemOptionProbs> parse_probabilities(const std::string& json_text, const AbilityScale& scale,
                                                 double sum_tol) {
  const json j = parse_json(json_text, "probabilities file");
  std::vector<ItemOptionProbs> out;
  for (const json& e : get<json>(j, "items", "probabilities file")) {
    ItemOptionProbs rec;
    rec.item_id = get<std::string>(e, "item_id", "probabilities file");
    check_id(rec.item_id);
    const auto n = get<std::size_t>(e, "options", "probabilities file");
    if (n < 2) throw ValidationError("probabilities file: item '" + rec.item_id + "' needs at least two options");
    rec.correct_index = get<std::size_t>(e, "correct_index", "probabilities file");
    if (rec.correct_index >= n)
      throw ValidationError("probabilities file: item '" + rec.item_id + "' correct_index out of range");
    rec.probs = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(scale.size()), static_cast<Eigen::Index>(n),
                                          std::numeric_limits<double>::quiet_NaN());
    const json probs = get<json>(e, "probs", "probabilities file");
    if (!probs.is_object()) throw ValidationError("probabilities file: item '" + rec.item_id + "' probs must be an object");
    for (const auto& [label, vec] : probs.items()) {
      const std::size_t k = scale.index_of(label);
      std::vector<double> v;
      try {
        v = vec.get<std::vector<double>>();
      } catch (const json::exception&) {
        throw ValidationError("probabilities file: item '" + rec.item_id + "' label '" + label + "' is not a number array");
      }
      if (v.size() != n)
        throw ValidationError("probabilities file: item '" + rec.item_id + "' label '" + label + "' has length " +
                              std::to_string(v.size()) + ", expected " + std::to_string(n));
      double sum = 0.0;
      for (double p : v) {
        if (!(p >= 0.0 && p <= 1.0))
          throw ValidationError("probabilities file: item '" + rec.item_id + "' has a probability outside [0, 1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > sum_tol)
        throw ValidationError("probabilities file: item '" + rec.item_id + "' label '" + label + "' sums to " +
                              format_double(sum));
      for (std::size_t i = 0; i < n; ++i) rec.probs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = v[i];
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<bool> present_labels(const ItemOptionProbs& item) {
  std::vector<bool> out(item.label_count());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = !item.probs.row(static_cast<Eigen::Index>(k)).hasNaN();
  return out;
}

}  // namespace idm::io
