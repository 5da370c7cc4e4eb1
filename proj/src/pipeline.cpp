#include "idm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "idm/io.hpp"
#include "idm/rng.hpp"
#include "idm/simulate.hpp"
#include "json.hpp"

namespace idm {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- metrics

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("pearson: length mismatch");
  if (xs.size() < 2) throw ValidationError("pearson: need at least two points");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Map<const Eigen::ArrayXd> x(xs.data(), n);
  const Eigen::Map<const Eigen::ArrayXd> y(ys.data(), n);
  const Eigen::ArrayXd dx = x - x.mean();
  const Eigen::ArrayXd dy = y - y.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericalError("pearson: zero variance, correlation undefined");
  return std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

double rmse(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("rmse: length mismatch");
  if (xs.empty()) throw ValidationError("rmse: empty input");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Map<const Eigen::ArrayXd> x(xs.data(), n);
  const Eigen::Map<const Eigen::ArrayXd> y(ys.data(), n);
  return std::sqrt((x - y).square().mean());
}

BiasCorrection fit_bias_correction(std::span<const double> pred_dev, std::span<const double> true_dev) {
  if (pred_dev.size() < 2) throw ValidationError("bias correction: need at least two dev items");
  const LinearFit f = ols_fit(pred_dev, true_dev);
  return {f.slope, f.intercept, pred_dev.size()};
}

std::vector<double> apply_bias_correction(const BiasCorrection& corr, std::span<const double> preds) {
  std::vector<double> out(preds.size());
  std::transform(preds.begin(), preds.end(), out.begin(),
                 [&](double x) { return corr.slope * x + corr.intercept; });
  return out;
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::k1plB: return "1PL-b";
    case Regime::k2plA: return "2PL-a";
    case Regime::k2plB: return "2PL-b";
  }
  return "?";
}

const RegimeRow& EvalReport::row(Regime r) const {
  for (const auto& x : rows)
    if (x.regime == r) return x;
  throw ValidationError("report has no " + regime_name(r) + " row");
}

// ---------------------------------------------------------------- ICC comparison

IccComparison make_icc_comparison(std::string item_id, const AbilityScale& scale, const DiscreteICC* observed,
                                  const DiscreteICC* smoothed, const DiscreteICC* model) {
  for (const DiscreteICC* icc : {observed, smoothed, model})
    if (icc && icc->size() != scale.size()) throw ValidationError("icc comparison: label dimension mismatch");
  auto cell = [](const DiscreteICC* icc, std::size_t k) -> std::optional<double> {
    if (!icc || !icc->present[k]) return std::nullopt;
    return icc->probs(static_cast<Eigen::Index>(k));
  };
  IccComparison cmp{std::move(item_id), {}};
  for (std::size_t k = 0; k < scale.size(); ++k)
    cmp.rows.push_back({scale.theta_bar()(static_cast<Eigen::Index>(k)), cell(observed, k), cell(smoothed, k),
                        cell(model, k)});
  return cmp;
}

std::string icc_comparison_to_csv(const IccComparison& cmp) {
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  std::string s = "theta_bar,observed,nrm,model\n";
  for (const auto& r : cmp.rows)
    s += io::format_double(r.theta_bar) + "," + opt(r.observed) + "," + opt(r.smoothed) + "," + opt(r.model) + "\n";
  return s;
}

IccComparison parse_icc_comparison_csv(std::string item_id, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "theta_bar,observed,nrm,model")
    throw ValidationError("icc comparison: unexpected header");
  IccComparison cmp{std::move(item_id), {}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string c;
    std::istringstream ls(line);
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 4) throw ValidationError("icc comparison: wrong column count");
    auto num = [](const std::string& v) -> std::optional<double> {
      if (v.empty()) return std::nullopt;
      try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw ValidationError("icc comparison: bad number '" + v + "'");
        return d;
      } catch (const std::logic_error&) {
        throw ValidationError("icc comparison: bad number '" + v + "'");
      }
    };
    const auto tb = num(cells[0]);
    if (!tb) throw ValidationError("icc comparison: missing theta_bar");
    cmp.rows.push_back({*tb, num(cells[1]), num(cells[2]), num(cells[3])});
  }
  return cmp;
}

void export_icc_comparison(const fs::path& path, const IccComparison& cmp) {
  io::write_text(path, icc_comparison_to_csv(cmp));
}

std::string icc_comparison_to_gnuplot(const IccComparison& cmp) {
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string("NaN"); };
  std::string s = "# " + cmp.item_id + "\n# theta_bar observed nrm model\n";
  for (const auto& r : cmp.rows)
    s += io::format_double(r.theta_bar) + " " + opt(r.observed) + " " + opt(r.smoothed) + " " + opt(r.model) + "\n";
  return s;
}

// ---------------------------------------------------------------- config

void PipelineConfig::validate() const {
  calibration.validate();
  train.validate();
  if (!(model_noise >= 0.0) || !std::isfinite(model_noise)) throw ValidationError("config: noise_sigma must be >= 0");
  if (synthetic) {
    const auto& s = *synthetic;
    if (s.n_items < 1 || s.n_students < 1) throw ValidationError("config: synthetic run needs items and students");
    if (s.n_options < 2) throw ValidationError("config: synthetic items need at least two options");
    if (!(s.a_min <= s.a_max) || !(s.b_min <= s.b_max)) throw ValidationError("config: empty parameter range");
    if (s.a_min <= 0.0 && s.a_max >= 0.0) throw ValidationError("config: discrimination range must exclude zero");
  } else if (truth_file.empty()) {
    throw ValidationError("config: runs without synthetic data need a truth_file");
  }
  if (model == ModelSource::kIngest && probs_file.empty())
    throw ValidationError("config: model source 'ingest' needs probs_file");
  if (!synthetic && model != ModelSource::kIngest)
    throw ValidationError("config: without synthetic data the model source must be 'ingest'");
  if (splits.dev_items.empty() && splits.test_items.empty()) {
    if (splits.train < 0.0 || splits.dev <= 0.0 || splits.test <= 0.0 ||
        std::abs(splits.train + splits.dev + splits.test - 1.0) > 1e-9)
      throw ValidationError("config: split fractions must be non-negative and sum to one");
  }
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: field '") + key + "': " + e.what());
  }
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() || base.empty()) ? path.string() : (base / path).string();
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config: top level must be an object");

  PipelineConfig c;
  read_opt(j, "seed", c.seed);

  PopulationPrior prior{0.13, 1.15};
  if (j.contains("prior")) {
    read_opt(j.at("prior"), "mu", prior.mu);
    read_opt(j.at("prior"), "sigma", prior.sigma);
  }
  if (j.contains("scale") && !j.at("scale").is_null()) {
    const json& s = j.at("scale");
    const std::string text = s.is_string() ? io::read_text(resolve(base_dir, s.get<std::string>())) : s.dump();
    c.scale = std::make_shared<const AbilityScale>(io::parse_scale(text));
  } else {
    c.scale = std::make_shared<const AbilityScale>(AbilityScale::default_descriptors(prior));
  }

  if (j.contains("synthetic")) {
    if (j.at("synthetic").is_null()) {
      c.synthetic.reset();
    } else {
      const json& s = j.at("synthetic");
      SyntheticConfig sc;
      read_opt(s, "n_items", sc.n_items);
      read_opt(s, "n_students", sc.n_students);
      read_opt(s, "n_options", sc.n_options);
      read_opt(s, "a_min", sc.a_min);
      read_opt(s, "a_max", sc.a_max);
      read_opt(s, "b_min", sc.b_min);
      read_opt(s, "b_max", sc.b_max);
      c.synthetic = sc;
    }
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    std::string source = "surrogate";
    read_opt(m, "source", source);
    if (source == "surrogate")
      c.model = ModelSource::kSurrogate;
    else if (source == "smoother")
      c.model = ModelSource::kSmoother;
    else if (source == "ingest")
      c.model = ModelSource::kIngest;
    else
      throw ValidationError("config: unknown model source '" + source + "'");
    read_opt(m, "probs_file", c.probs_file);
    c.probs_file = resolve(base_dir, c.probs_file);
    read_opt(m, "noise_sigma", c.model_noise);
  }
  read_opt(j, "truth_file", c.truth_file);
  c.truth_file = resolve(base_dir, c.truth_file);
  read_opt(j, "bias_correction", c.bias_correction);

  if (j.contains("calibration")) {
    const json& k = j.at("calibration");
    read_opt(k, "tol", c.calibration.tol);
    read_opt(k, "max_iter", c.calibration.max_iter);
    read_opt(k, "restarts", c.calibration.restarts);
    read_opt(k, "jitter", c.calibration.jitter);
    read_opt(k, "discrimination_cap", c.calibration.discrimination_cap);
  }
  c.calibration.seed = c.seed;

  c.train.seed = c.seed;
  if (j.contains("train")) {
    const json& t = j.at("train");
    read_opt(t, "learning_rate", c.train.learning_rate);
    read_opt(t, "epochs", c.train.epochs);
    read_opt(t, "early_stop_patience", c.train.early_stop_patience);
    read_opt(t, "dev_fraction", c.train.dev_fraction);
    read_opt(t, "clip_norm", c.train.clip_norm);
    read_opt(t, "linear_decay", c.train.linear_decay);
    read_opt(t, "seed", c.train.seed);
    std::string opt = "adam";
    read_opt(t, "optimizer", opt);
    if (opt == "adam")
      c.train.optimizer = Optimizer::kAdam;
    else if (opt == "gd")
      c.train.optimizer = Optimizer::kGradientDescent;
    else
      throw ValidationError("config: unknown optimizer '" + opt + "'");
  }

  if (j.contains("splits")) {
    const json& s = j.at("splits");
    read_opt(s, "train", c.splits.train);
    read_opt(s, "dev", c.splits.dev);
    read_opt(s, "test", c.splits.test);
    read_opt(s, "dev_items", c.splits.dev_items);
    read_opt(s, "test_items", c.splits.test_items);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- stages

std::vector<SyntheticItem> make_synthetic_items(const SyntheticConfig& cfg, std::uint64_t seed) {
  std::vector<SyntheticItem> out;
  out.reserve(cfg.n_items);
  for (std::size_t j = 0; j < cfg.n_items; ++j) {
    Rng rng(seed, {stream::kItems, j});
    const ItemParams truth{rng.uniform(cfg.a_min, cfg.a_max), rng.uniform(cfg.b_min, cfg.b_max)};
    const ItemParams line = twopl_to_nrm_line(truth, cfg.n_options);
    char id[32];
    std::snprintf(id, sizeof id, "item_%03zu", j);
    out.push_back({id, NominalParams::zeroed_distractors(line.a, line.b, cfg.n_options, 0), truth});
  }
  return out;
}

std::vector<Split> assign_splits(const std::vector<std::string>& item_ids, const SplitConfig& cfg, std::uint64_t seed) {
  const std::size_t n = item_ids.size();
  std::vector<Split> out(n, Split::kTrain);
  if (!cfg.dev_items.empty() || !cfg.test_items.empty()) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[item_ids[i]] = i;
    auto mark = [&](const std::vector<std::string>& ids, Split s) {
      for (const auto& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw ValidationError("splits: unknown item '" + id + "'");
        if (out[it->second] != Split::kTrain) throw ValidationError("splits: item '" + id + "' listed twice");
        out[it->second] = s;
      }
    };
    mark(cfg.dev_items, Split::kDev);
    mark(cfg.test_items, Split::kTest);
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, {stream::kSplits, 1});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_dev = static_cast<std::size_t>(std::llround(cfg.dev * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(cfg.test * static_cast<double>(n)));
  if (n_dev + n_test > n) throw ValidationError("splits: dev and test exceed the item count");
  for (std::size_t i = 0; i < n_dev; ++i) out[order[i]] = Split::kDev;
  for (std::size_t i = n_dev; i < n_dev + n_test; ++i) out[order[i]] = Split::kTest;
  return out;
}

namespace {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const NumericalError& e) {
    throw StageError(name, e.what(), true);
  } catch (const ValidationError& e) {
    throw StageError(name, e.what(), false);
  }
}

}  // namespace

PipelineResult evaluate_estimates(std::vector<ItemEstimate> items, bool bias_correction) {
  PipelineResult res;
  const bool have_a = std::all_of(items.begin(), items.end(), [](const ItemEstimate& e) { return e.true_a.has_value(); });
  if (!have_a) res.notices.push_back("ground truth carries no discrimination; 2PL columns omitted");

  std::vector<Regime> regimes = {Regime::k1plB};
  if (have_a) regimes = {Regime::k1plB, Regime::k2plA, Regime::k2plB};

  auto pred_of = [](const ItemEstimate& e, Regime r) {
    switch (r) {
      case Regime::k1plB: return e.fit_1pl.params.b;
      case Regime::k2plA: return e.fit_2pl.params.a;
      case Regime::k2plB: return e.fit_2pl.params.b;
    }
    return 0.0;
  };
  auto true_of = [](const ItemEstimate& e, Regime r) { return r == Regime::k2plA ? *e.true_a : e.true_b; };

  EvalReport dev{"dev", {}};
  EvalReport test{"test", {}};
  for (const Regime r : regimes) {
    std::vector<double> pd, td;
    for (const auto& e : items)
      if (e.split == Split::kDev) {
        pd.push_back(pred_of(e, r));
        td.push_back(true_of(e, r));
      }
    BiasCorrection corr{1.0, 0.0, pd.size()};
    if (bias_correction) corr = fit_bias_correction(pd, td);
    res.corrections.emplace_back(r, corr);

    std::vector<double> ps[2], ts[2];
    for (auto& e : items) {
      const double c = corr.slope * pred_of(e, r) + corr.intercept;
      switch (r) {
        case Regime::k1plB: e.corrected_b_1pl = c; break;
        case Regime::k2plA: e.corrected_a = c; break;
        case Regime::k2plB: e.corrected_b_2pl = c; break;
      }
      if (e.split == Split::kTrain) continue;
      const int s = e.split == Split::kDev ? 0 : 1;
      ps[s].push_back(c);
      ts[s].push_back(true_of(e, r));
    }
    dev.rows.push_back({r, pearson(ps[0], ts[0]), rmse(ps[0], ts[0]), ps[0].size()});
    test.rows.push_back({r, pearson(ps[1], ts[1]), rmse(ps[1], ts[1]), ps[1].size()});
  }
  res.reports = {std::move(dev), std::move(test)};
  res.items = std::move(items);
  return res;
}

PipelineResult run_end_to_end(const PipelineConfig& cfg, const fs::path& out_dir) {
  stage("config", [&] { cfg.validate(); });
  const AbilityScalePtr scale =
      cfg.scale ? cfg.scale : std::make_shared<const AbilityScale>(AbilityScale::default_descriptors());

  std::vector<std::string> ids;
  std::vector<std::optional<double>> true_a;
  std::vector<double> true_b;
  std::vector<SyntheticItem> synth;
  std::optional<BinnedCounts> counts;
  std::vector<DiscreteICC> observed, smoothed;
  std::vector<ItemOptionProbs> smoother_probs;

  if (cfg.synthetic) {
    stage("simulate", [&] {
      synth = make_synthetic_items(*cfg.synthetic, cfg.seed);
      std::vector<NominalParams> params;
      for (const auto& it : synth) {
        ids.push_back(it.item_id);
        true_a.emplace_back(it.truth.a);
        true_b.push_back(it.truth.b);
        params.push_back(it.params);
      }
      const Population pop = sample_population(cfg.synthetic->n_students, scale->prior(), cfg.seed);
      counts = simulate_binned_counts(pop, params, scale, cfg.seed);
    });
    stage("smoother", [&] {
      for (std::size_t j = 0; j < ids.size(); ++j) {
        const std::size_t key = counts->layout(j).correct_index;
        observed.push_back(empirical_icc(*counts, j, key));
        const SmootherFit fit = fit_smoother(*counts, j, scale, cfg.calibration);
        smoothed.push_back(smoother_icc(fit, key));
        smoother_probs.push_back({ids[j], key, fit.per_label_probs.transpose()});
      }
    });
  } else {
    stage("truth", [&] {
      for (const auto& row : io::parse_truth_csv(io::read_text(cfg.truth_file))) {
        ids.push_back(row.item_id);
        true_a.push_back(row.a);
        true_b.push_back(row.b);
      }
    });
  }

  PipelineResult res;
  std::vector<ItemOptionProbs> model_probs;
  stage("model", [&] {
    switch (cfg.model) {
      case ModelSource::kSmoother: model_probs = smoother_probs; break;
      case ModelSource::kSurrogate: {
        res.training = train_surrogate(smoother_probs, scale->weights(), cfg.train);
        model_probs = table_probabilities(res.training->table, smoother_probs);
        break;
      }
      case ModelSource::kIngest: {
        const auto ingested = io::parse_probabilities(io::read_text(cfg.probs_file), *scale);
        std::map<std::string, const ItemOptionProbs*> by_id;
        for (const auto& rec : ingested) by_id[rec.item_id] = &rec;
        for (std::size_t j = 0; j < ids.size(); ++j) {
          const auto it = by_id.find(ids[j]);
          if (it == by_id.end()) throw ValidationError("no ingested probabilities for item '" + ids[j] + "'");
          if (counts && (it->second->option_count() != counts->layout(j).n_options ||
                         it->second->correct_index != counts->layout(j).correct_index))
            throw ValidationError("ingested item '" + ids[j] + "' disagrees with the field-test layout");
          model_probs.push_back(*it->second);
        }
        break;
      }
    }
  });

  std::vector<DiscreteICC> model_icc;
  stage("model", [&] {
    for (std::size_t j = 0; j < model_probs.size(); ++j) {
      const auto& rec = model_probs[j];
      Eigen::VectorXd p = rec.probs.col(static_cast<Eigen::Index>(rec.correct_index));
      std::vector<bool> present = io::present_labels(rec);
      if (cfg.model_noise > 0.0) {
        for (Eigen::Index k = 0; k < p.size(); ++k) {
          if (!present[static_cast<std::size_t>(k)]) continue;
          Rng rng(cfg.seed, {stream::kNoise, j, static_cast<std::uint64_t>(k)});
          p(k) = std::clamp(p(k) + cfg.model_noise * rng.normal(), 0.0, 1.0);
        }
      }
      for (Eigen::Index k = 0; k < p.size(); ++k)
        if (!present[static_cast<std::size_t>(k)]) p(k) = 0.0;
      model_icc.emplace_back(std::move(p), std::move(present), scale);
    }
  });

  std::vector<ItemEstimate> estimates(ids.size());
  stage("recover", [&] {
    const std::vector<Split> splits = assign_splits(ids, cfg.splits, cfg.seed);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      ItemEstimate& e = estimates[j];
      e.item_id = ids[j];
      e.split = splits[j];
      e.true_a = true_a[j];
      e.true_b = true_b[j];
      e.fit_2pl = recover_from_icc(model_icc[j], *scale, cfg.calibration);
      e.fit_1pl = recover_1pl_from_icc(model_icc[j], *scale, cfg.calibration);
    }
  });

  PipelineResult scored = stage("evaluate", [&] { return evaluate_estimates(std::move(estimates), cfg.bias_correction); });
  res.reports = std::move(scored.reports);
  res.corrections = std::move(scored.corrections);
  res.items = std::move(scored.items);
  res.notices.insert(res.notices.end(), scored.notices.begin(), scored.notices.end());
  res.model_probs = std::move(model_probs);

  for (std::size_t j = 0; j < ids.size(); ++j)
    res.iccs.push_back(make_icc_comparison(ids[j], *scale, counts ? &observed[j] : nullptr,
                                           counts ? &smoothed[j] : nullptr, &model_icc[j]));

  if (out_dir.empty()) return res;

  stage("write", [&] {
    io::write_text(out_dir / "report.json", report_to_json(res));
    io::write_text(out_dir / "report.csv", report_to_csv(res));

    std::string est = "item_id,split,true_a,true_b,a_2pl,b_2pl,b_1pl,corrected_a,corrected_b_2pl,corrected_b_1pl\n";
    std::vector<io::ItemParamRow> rows2, rows1;
    for (const auto& e : res.items) {
      est += e.item_id + "," + split_name(e.split) + "," + (e.true_a ? io::format_double(*e.true_a) : "") + "," +
             io::format_double(e.true_b) + "," + io::format_double(e.fit_2pl.params.a) + "," +
             io::format_double(e.fit_2pl.params.b) + "," + io::format_double(e.fit_1pl.params.b) + "," +
             io::format_double(e.corrected_a) + "," + io::format_double(e.corrected_b_2pl) + "," +
             io::format_double(e.corrected_b_1pl) + "\n";
      rows2.push_back({e.item_id, e.fit_2pl});
      rows1.push_back({e.item_id, e.fit_1pl});
    }
    io::write_text(out_dir / "item_estimates.csv", est);
    io::write_text(out_dir / "recovered_2pl.csv", io::item_params_to_csv(rows2));
    io::write_text(out_dir / "recovered_1pl.csv", io::item_params_to_csv(rows1));
    io::write_text(out_dir / "model_probs.json", io::probabilities_to_json(res.model_probs, *scale));
    for (const auto& cmp : res.iccs) export_icc_comparison(out_dir / "icc" / (cmp.item_id + ".csv"), cmp);

    if (counts) {
      io::write_text(out_dir / "counts.json", io::counts_to_json(*counts, ids));
      io::write_text(out_dir / "smoother_probs.json", io::probabilities_to_json(smoother_probs, *scale));
      std::vector<io::TruthRow> truth;
      std::vector<io::GroundTruthItem> gt;
      for (const auto& it : synth) {
        truth.push_back({it.item_id, it.truth.a, it.truth.b});
        gt.push_back({it.item_id, it.params, it.truth});
      }
      io::write_text(out_dir / "truth.csv", io::truth_to_csv(truth));
      io::write_text(out_dir / "items.json", io::items_to_json(gt));
    }
    if (res.training) {
      std::string h = "epoch,train_loss,dev_loss\n";
      for (std::size_t e = 0; e < res.training->train_loss.size(); ++e)
        h += std::to_string(e + 1) + "," + io::format_double(res.training->train_loss[e]) + "," +
             io::format_double(res.training->dev_loss[e]) + "\n";
      io::write_text(out_dir / "training_history.csv", h);
    }
  });
  return res;
}

std::string report_to_json(const PipelineResult& result) {
  json j;
  j["reports"] = json::array();
  for (const auto& r : result.reports) {
    json rep;
    rep["split"] = r.split;
    rep["rows"] = json::array();
    for (const auto& row : r.rows)
      rep["rows"].push_back(
          {{"regime", regime_name(row.regime)}, {"pearson", row.pearson}, {"rmse", row.rmse}, {"n_items", row.n_items}});
    j["reports"].push_back(rep);
  }
  j["bias_correction"] = json::array();
  for (const auto& [regime, c] : result.corrections)
    j["bias_correction"].push_back(
        {{"regime", regime_name(regime)}, {"slope", c.slope}, {"intercept", c.intercept}, {"fitted_on", c.fitted_on}});
  if (result.training) {
    json t;
    t["epochs_run"] = result.training->train_loss.size();
    t["best_epoch"] = result.training->best_epoch;
    t["stopped_early"] = result.training->stopped_early;
    t["initial_loss"] = result.training->initial_loss;
    t["final_train_loss"] = result.training->train_loss.empty() ? result.training->initial_loss
                                                                : result.training->train_loss.back();
    j["training"] = t;
  }
  j["notices"] = result.notices;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const PipelineResult& result) {
  std::string s = "split,regime,pearson,rmse,n_items\n";
  for (const auto& r : result.reports)
    for (const auto& row : r.rows)
      s += r.split + "," + regime_name(row.regime) + "," + io::format_double(row.pearson) + "," +
           io::format_double(row.rmse) + "," + std::to_string(row.n_items) + "\n";
  return s;
}

}  // namespace idm
