// idm: command-line front end for the item-difficulty pipeline.
//
// Every subcommand reads and writes plain CSV/JSON in the --out directory,
// so stages can be run one at a time or all at once with run-all.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "idm/calibrate.hpp"
#include "idm/errors.hpp"
#include "idm/io.hpp"
#include "idm/pipeline.hpp"
#include "idm/simulate.hpp"
#include "idm/surrogate.hpp"

namespace fs = std::filesystem;
using namespace idm;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

PipelineConfig load_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? parse_pipeline_config("{}")
                                        : parse_pipeline_config(io::read_text(g.config), fs::path(g.config).parent_path());
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.calibration.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  return cfg;
}

// An explicit path, or the default file name inside --out.
fs::path input_or(const std::string& given, const Globals& g, const char* name) {
  return given.empty() ? fs::path(g.out) / name : fs::path(given);
}

DiscreteICC correct_option_icc(const ItemOptionProbs& rec, const AbilityScalePtr& scale) {
  Eigen::VectorXd p = rec.probs.col(static_cast<Eigen::Index>(rec.correct_index));
  std::vector<bool> present = io::present_labels(rec);
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (!present[static_cast<std::size_t>(k)]) p(k) = 0.0;
  return DiscreteICC(std::move(p), std::move(present), scale);
}

std::vector<ItemOptionProbs> load_probs(const fs::path& path, const AbilityScalePtr& scale) {
  return io::parse_probabilities(io::read_text(path), *scale);
}

void print_report(const PipelineResult& res) {
  std::cout << report_to_csv(res);
  for (const auto& n : res.notices) std::cerr << "note: " << n << "\n";
}

// ---------------------------------------------------------------- commands

void cmd_simulate(const Globals& g, bool with_responses) {
  const PipelineConfig cfg = load_config(g);
  if (!cfg.synthetic) throw ValidationError("simulate: config has no synthetic section");
  const auto& scale = cfg.scale;
  const auto synth = make_synthetic_items(*cfg.synthetic, cfg.seed);
  std::vector<NominalParams> params;
  std::vector<std::string> ids;
  std::vector<io::TruthRow> truth;
  std::vector<io::GroundTruthItem> gt;
  for (const auto& it : synth) {
    params.push_back(it.params);
    ids.push_back(it.item_id);
    truth.push_back({it.item_id, it.truth.a, it.truth.b});
    gt.push_back({it.item_id, it.params, it.truth});
  }
  const Population pop = sample_population(cfg.synthetic->n_students, scale->prior(), cfg.seed);
  const fs::path out(g.out);
  io::write_text(out / "scale.json", io::scale_to_json(*scale));
  io::write_text(out / "items.json", io::items_to_json(gt));
  io::write_text(out / "truth.csv", io::truth_to_csv(truth));
  io::write_text(out / "counts.json", io::counts_to_json(simulate_binned_counts(pop, params, scale, cfg.seed), ids));
  if (with_responses) io::write_text(out / "responses.csv", io::responses_to_csv(sample_responses(pop, params, cfg.seed), pop, ids));
  std::cout << "simulated " << ids.size() << " items x " << pop.size() << " students into " << out.string() << "\n";
}

void cmd_calibrate(const Globals& g, const std::string& responses, const std::string& items_path) {
  const PipelineConfig cfg = load_config(g);
  const auto items = io::parse_items(io::read_text(input_or(items_path, g, "items.json")));
  std::map<std::string, std::size_t> keys;
  for (const auto& it : items) keys[it.item_id] = it.params.correct_index();
  const auto table = io::parse_responses_csv(io::read_text(input_or(responses, g, "responses.csv")), keys);
  std::vector<io::ItemParamRow> rows;
  for (std::size_t j = 0; j < table.item_ids.size(); ++j)
    rows.push_back({table.item_ids[j], calibrate_2pl(table.records, table.pop, j, cfg.calibration)});
  io::write_text(fs::path(g.out) / "direct_2pl.csv", io::item_params_to_csv(rows));
  std::cout << "calibrated " << rows.size() << " items\n";
}

void cmd_fit_nrm(const Globals& g, const std::string& counts_path) {
  const PipelineConfig cfg = load_config(g);
  const auto file = io::parse_counts(io::read_text(input_or(counts_path, g, "counts.json")), cfg.scale);
  std::vector<ItemOptionProbs> probs;
  std::string params = "item_id,option,slope,intercept\n";
  for (std::size_t j = 0; j < file.item_ids.size(); ++j) {
    const SmootherFit fit = fit_smoother(file.counts, j, cfg.scale, cfg.calibration);
    if (!fit.converged) std::cerr << "warning: smoother for '" << file.item_ids[j] << "' did not converge\n";
    probs.push_back({file.item_ids[j], file.counts.layout(j).correct_index, fit.per_label_probs.transpose()});
    for (std::size_t i = 0; i < fit.params.option_count(); ++i)
      params += file.item_ids[j] + "," + std::to_string(i) + "," + io::format_double(fit.params.slopes()(static_cast<Eigen::Index>(i))) + "," +
                io::format_double(fit.params.intercepts()(static_cast<Eigen::Index>(i))) + "\n";
  }
  io::write_text(fs::path(g.out) / "smoother_probs.json", io::probabilities_to_json(probs, *cfg.scale));
  io::write_text(fs::path(g.out) / "nrm_params.csv", params);
  std::cout << "fitted " << probs.size() << " nominal models\n";
}

void cmd_train(const Globals& g, const std::string& targets_path) {
  const PipelineConfig cfg = load_config(g);
  const auto targets = load_probs(input_or(targets_path, g, "smoother_probs.json"), cfg.scale);
  for (const auto& t : targets) {
    const auto present = io::present_labels(t);
    if (std::find(present.begin(), present.end(), false) != present.end())
      throw ValidationError("train-surrogate: targets for '" + t.item_id + "' miss some labels");
  }
  const TrainResult r = train_surrogate(targets, cfg.scale->weights(), cfg.train);
  io::write_text(fs::path(g.out) / "model_probs.json",
                 io::probabilities_to_json(table_probabilities(r.table, targets), *cfg.scale));
  std::string h = "epoch,train_loss,dev_loss\n";
  for (std::size_t e = 0; e < r.train_loss.size(); ++e)
    h += std::to_string(e + 1) + "," + io::format_double(r.train_loss[e]) + "," + io::format_double(r.dev_loss[e]) + "\n";
  io::write_text(fs::path(g.out) / "training_history.csv", h);
  std::cout << "trained " << r.train_loss.size() << " epochs, best epoch " << r.best_epoch << ", loss "
            << io::format_double(r.initial_loss) << " -> " << io::format_double(r.train_loss.back()) << "\n";
}

void cmd_ingest(const Globals& g, const std::string& probs_path) {
  const PipelineConfig cfg = load_config(g);
  if (probs_path.empty()) throw ValidationError("ingest-probs: --probs is required");
  const auto probs = load_probs(probs_path, cfg.scale);
  for (const auto& rec : probs) {
    const auto present = io::present_labels(rec);
    const auto n = std::count(present.begin(), present.end(), true);
    if (n < static_cast<long>(present.size()))
      std::cerr << "note: '" << rec.item_id << "' has " << n << " of " << present.size() << " labels\n";
  }
  io::write_text(fs::path(g.out) / "model_probs.json", io::probabilities_to_json(probs, *cfg.scale));
  std::cout << "ingested " << probs.size() << " items\n";
}

void cmd_recover(const Globals& g, const std::string& probs_path) {
  const PipelineConfig cfg = load_config(g);
  const auto probs = load_probs(input_or(probs_path, g, "model_probs.json"), cfg.scale);
  std::vector<io::ItemParamRow> rows2, rows1;
  for (const auto& rec : probs) {
    const DiscreteICC icc = correct_option_icc(rec, cfg.scale);
    rows2.push_back({rec.item_id, recover_from_icc(icc, *cfg.scale, cfg.calibration)});
    rows1.push_back({rec.item_id, recover_1pl_from_icc(icc, *cfg.scale, cfg.calibration)});
  }
  io::write_text(fs::path(g.out) / "recovered_2pl.csv", io::item_params_to_csv(rows2));
  io::write_text(fs::path(g.out) / "recovered_1pl.csv", io::item_params_to_csv(rows1));
  std::cout << "recovered " << rows2.size() << " items\n";
}

void cmd_evaluate(const Globals& g, const std::string& truth_path, const std::string& rec2_path,
                  const std::string& rec1_path) {
  const PipelineConfig cfg = load_config(g);
  const auto truth = io::parse_truth_csv(io::read_text(input_or(truth_path, g, "truth.csv")));
  auto by_id = [](const std::vector<io::ItemParamRow>& rows) {
    std::map<std::string, ItemFit> m;
    for (const auto& r : rows) m[r.item_id] = r.fit;
    return m;
  };
  const auto fit2 = by_id(io::parse_item_params_csv(io::read_text(input_or(rec2_path, g, "recovered_2pl.csv"))));
  const auto fit1 = by_id(io::parse_item_params_csv(io::read_text(input_or(rec1_path, g, "recovered_1pl.csv"))));
  std::vector<std::string> ids;
  for (const auto& t : truth) ids.push_back(t.item_id);
  const auto splits = assign_splits(ids, cfg.splits, cfg.seed);
  std::vector<ItemEstimate> est;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const auto a = fit2.find(ids[j]);
    const auto b = fit1.find(ids[j]);
    if (a == fit2.end() || b == fit1.end()) throw ValidationError("evaluate: no estimate for item '" + ids[j] + "'");
    ItemEstimate e;
    e.item_id = ids[j];
    e.split = splits[j];
    e.true_a = truth[j].a;
    e.true_b = truth[j].b;
    e.fit_2pl = a->second;
    e.fit_1pl = b->second;
    est.push_back(std::move(e));
  }
  const PipelineResult res = evaluate_estimates(std::move(est), cfg.bias_correction);
  io::write_text(fs::path(g.out) / "report.json", report_to_json(res));
  io::write_text(fs::path(g.out) / "report.csv", report_to_csv(res));
  print_report(res);
}

void cmd_export_icc(const Globals& g, const std::string& probs_path, const std::string& counts_path,
                    const std::string& smoother_path) {
  const PipelineConfig cfg = load_config(g);
  const auto model = load_probs(input_or(probs_path, g, "model_probs.json"), cfg.scale);
  std::optional<io::CountsFile> counts;
  if (!counts_path.empty()) counts = io::parse_counts(io::read_text(counts_path), cfg.scale);
  std::map<std::string, ItemOptionProbs> smooth;
  if (!smoother_path.empty())
    for (auto& rec : load_probs(smoother_path, cfg.scale)) smooth[rec.item_id] = std::move(rec);

  for (const auto& rec : model) {
    const DiscreteICC m = correct_option_icc(rec, cfg.scale);
    std::optional<DiscreteICC> obs, sm;
    if (counts) {
      const auto it = std::find(counts->item_ids.begin(), counts->item_ids.end(), rec.item_id);
      if (it != counts->item_ids.end()) {
        const auto j = static_cast<std::size_t>(it - counts->item_ids.begin());
        obs = empirical_icc(counts->counts, j, counts->counts.layout(j).correct_index);
      }
    }
    if (const auto it = smooth.find(rec.item_id); it != smooth.end()) sm = correct_option_icc(it->second, cfg.scale);
    export_icc_comparison(fs::path(g.out) / "icc" / (rec.item_id + ".csv"),
                          make_icc_comparison(rec.item_id, *cfg.scale, obs ? &*obs : nullptr, sm ? &*sm : nullptr, &m));
  }
  std::cout << "exported " << model.size() << " ICC comparisons\n";
}

void cmd_run_all(const Globals& g) {
  const PipelineConfig cfg = load_config(g);
  const PipelineResult res = run_end_to_end(cfg, g.out);
  print_report(res);
}

void cmd_plot(const Globals& g, const std::string& icc_path, const std::string& to) {
  if (icc_path.empty()) throw ValidationError("plot: --icc is required");
  const std::string id = fs::path(icc_path).stem().string();
  const std::string data = icc_comparison_to_gnuplot(parse_icc_comparison_csv(id, io::read_text(icc_path)));
  (void)g;
  if (to.empty())
    std::cout << data;
  else
    io::write_text(to, data);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit item-difficulty modeling: simulate, calibrate, train and evaluate"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  bool responses = false;
  std::string in_responses, in_items, in_counts, in_targets, in_probs, in_truth, in_rec2, in_rec1, in_smoother,
      in_icc, plot_to;

  auto* sim = app.add_subcommand("simulate", "Simulate a synthetic field test and bin it by ability label");
  sim->add_flag("--responses", responses, "Also write per-response records (large)");

  auto* cal = app.add_subcommand("calibrate", "Direct 2PL calibration from response records");
  cal->add_option("--responses", in_responses, "Responses CSV (default <out>/responses.csv)");
  cal->add_option("--items", in_items, "Items JSON with answer keys (default <out>/items.json)");

  auto* nrm = app.add_subcommand("fit-nrm", "Fit the nominal-model smoother to binned counts");
  nrm->add_option("--counts", in_counts, "Counts JSON (default <out>/counts.json)");

  auto* tr = app.add_subcommand("train-surrogate", "Train the logit-table student model on target probabilities");
  tr->add_option("--targets", in_targets, "Probabilities JSON (default <out>/smoother_probs.json)");

  auto* ing = app.add_subcommand("ingest-probs", "Validate an external model's option probabilities");
  ing->add_option("--probs", in_probs, "Probabilities JSON")->check(CLI::ExistingFile);

  auto* rec = app.add_subcommand("recover", "Recover 2PL and 1PL parameters from model ICCs");
  rec->add_option("--probs", in_probs, "Probabilities JSON (default <out>/model_probs.json)");

  auto* ev = app.add_subcommand("evaluate", "Bias-correct on dev items and score against ground truth");
  ev->add_option("--truth", in_truth, "Truth CSV (default <out>/truth.csv)");
  ev->add_option("--recovered-2pl", in_rec2, "2PL estimates (default <out>/recovered_2pl.csv)");
  ev->add_option("--recovered-1pl", in_rec1, "1PL estimates (default <out>/recovered_1pl.csv)");

  auto* ex = app.add_subcommand("export-icc", "Write observed / smoothed / model ICC comparisons");
  ex->add_option("--probs", in_probs, "Model probabilities (default <out>/model_probs.json)");
  ex->add_option("--counts", in_counts, "Counts JSON for the observed column");
  ex->add_option("--smoother", in_smoother, "Smoother probabilities for the nrm column");

  auto* all = app.add_subcommand("run-all", "Run every stage from the config");

  auto* pl = app.add_subcommand("plot", "Convert an ICC comparison CSV to gnuplot data");
  pl->add_option("--icc", in_icc, "ICC comparison CSV")->check(CLI::ExistingFile);
  pl->add_option("--to", plot_to, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) cmd_simulate(g, responses);
    if (*cal) cmd_calibrate(g, in_responses, in_items);
    if (*nrm) cmd_fit_nrm(g, in_counts);
    if (*tr) cmd_train(g, in_targets);
    if (*ing) cmd_ingest(g, in_probs);
    if (*rec) cmd_recover(g, in_probs);
    if (*ev) cmd_evaluate(g, in_truth, in_rec2, in_rec1);
    if (*ex) cmd_export_icc(g, in_probs, in_counts, in_smoother);
    if (*all) cmd_run_all(g);
    if (*pl) cmd_plot(g, in_icc, plot_to);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.numerical() ? 3 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
