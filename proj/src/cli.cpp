//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "solgraph/checkpoint.hpp"
#include "solgraph/config.hpp"
#include "solgraph/data.hpp"
#include "solgraph/featurize.hpp"
#include "solgraph/interpret.hpp"
#include "solgraph/io.hpp"
#include "solgraph/search.hpp"
#include "solgraph/smiles.hpp"
#include "solgraph/train.hpp"

namespace solgraph {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Options shared by the subcommands; unused ones stay empty.
struct Options {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<int> epochs;
  std::string data;
  std::string valid;
  std::string folds;
  std::string checkpoint;
  std::string out;
  std::vector<std::string> smiles;
};

RunConfig resolve_config(const Options &o) {
  RunConfig config;
  if (!o.config_file.empty()) {
    config.merge_text(io::read_file(o.config_file), o.config_file);
  }
  for (const std::string &kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) config.set("seed", std::to_string(*o.seed));
  if (o.workers) config.set("workers", std::to_string(*o.workers));
  if (o.epochs) config.set("train.epochs", std::to_string(*o.epochs));
  return config;
}

fs::path output_dir(const Options &o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

void write_text(const fs::path &path, const std::string &text) {
  io::atomic_write(path, [&](std::ostream &os) { os << text; });
}

template <typename F>
void write_csv(const fs::path &path, F &&writer) {
  io::atomic_write(path, [&](std::ostream &os) { writer(os); });
}

void echo_config(const fs::path &dir, const RunConfig &config) {
  write_text(dir / "config.txt", config.resolved());
}

Dataset load_data(const std::string &path, const RunConfig &config) {
  if (path.empty()) throw UsageError("--data is required");
  return load_csv(path, column_names(config));
}

FoldPlan fold_plan(const Options &o, const RunConfig &config, std::size_t n) {
  if (!o.folds.empty()) return load_fold_plan(o.folds, n);
  return kfold(n, config.get_uint("cv.k"), config.get_uint("seed"));
}

int cmd_parse(const Options &o, std::ostream &out) {
  for (const std::string &s : o.smiles) {
    out << "# " << s << '\n' << dump(parse(s));
  }
  return kExitOk;
}

int cmd_featurize(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  const Dataset data = load_data(o.data, config);
  const fs::path dir = output_dir(o);
  const std::vector<MoleculeGraph> graphs = data.graphs();
  io::atomic_write(
      dir / "features.bin",
      [&](std::ostream &os) { write_feature_container(os, graphs); }, true);
  write_csv(dir / "nodes.csv", [&](std::ostream &os) { write_node_csv(os, graphs); });
  write_csv(dir / "edges.csv", [&](std::ostream &os) { write_edge_csv(os, graphs); });
  write_csv(dir / "rejects.csv", [&](std::ostream &os) { write_rejects(os, data); });
  echo_config(dir, config);
  out << "featurized " << graphs.size() << " molecules, "
      << data.rejects.size() << " rejects, " << data.duplicates.size()
      << " duplicates -> " << dir.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  const TrainConfig tc = train_config(config);
  Dataset data = load_data(o.data, config);
  const fs::path dir = output_dir(o);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  if (!o.valid.empty()) {
    const Dataset valid = load_data(o.valid, config);
    for (std::size_t i = 0; i < data.size(); ++i) train_idx.push_back(i);
    for (const Record &r : valid.records) {
      val_idx.push_back(data.records.size());
      data.records.push_back(r);
    }
  } else {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::tie(train_idx, val_idx) = holdout_split(all, tc.val_fraction, tc.seed);
  }
  const TrainResult result = train_one(tc, data, train_idx, val_idx);
  save_checkpoint(dir / "model.ckpt", result.checkpoint);
  write_csv(dir / "history.csv",
            [&](std::ostream &os) { write_history(os, result.history); });
  write_csv(dir / "rejects.csv", [&](std::ostream &os) { write_rejects(os, data); });
  echo_config(dir, config);
  out << "trained " << result.history.epochs.size() << " epochs, best epoch "
      << result.history.best_epoch << ", validation RMSE "
      << io::format_double(result.history.best_val_rmse) << " -> "
      << (dir / "model.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_cv(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  const TrainConfig tc = train_config(config);
  const Dataset data = load_data(o.data, config);
  const fs::path dir = output_dir(o);
  const FoldPlan plan = fold_plan(o, config, data.size());
  CvOptions options;
  options.folds = config.get_list("cv.folds");
  options.workers = config.get_uint("workers");
  const CvResult result = cross_validate(tc, data, plan, options);
  write_csv(dir / "cv.csv", [&](std::ostream &os) { write_cv_report(os, result); });
  write_csv(dir / "fold_plan.csv", [&](std::ostream &os) { write_fold_plan(os, plan); });
  write_csv(dir / "cv_predictions.csv", [&](std::ostream &os) {
    os << "fold,index,smiles,y,yhat\n";
    for (const FoldResult &fr : result.folds) {
      for (std::size_t k = 0; k < fr.test.size(); ++k) {
        const Record &r = data.records[fr.test[k]];
        os << fr.fold << ',' << fr.test[k] << ',' << io::csv_escape(r.smiles)
           << ',' << io::format_double(r.log_s) << ','
           << io::format_double(fr.predictions[k]) << '\n';
      }
    }
  });
  echo_config(dir, config);
  out << "cv over " << result.folds.size() << " folds: RMSE "
      << io::format_double(result.mean_rmse) << " +/- "
      << io::format_double(result.std_rmse) << ", R2 "
      << io::format_double(result.mean_r2) << " +/- "
      << io::format_double(result.std_r2) << '\n';
  return kExitOk;
}

int cmd_search(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  const TrainConfig base = train_config(config);
  const Dataset data = load_data(o.data, config);
  const fs::path dir = output_dir(o);
  const FoldPlan plan = fold_plan(o, config, data.size());
  SearchOptions options;
  options.trials = config.get_uint("search.trials");
  options.folds = config.get_list("search.folds");
  options.workers = config.get_uint("workers");
  options.seed = config.get_uint("seed");

  // The trial log is appended as trials finish; the final file is then
  // rewritten in trial order.
  const fs::path log_path = dir / "trials.partial.csv";
  std::ofstream log(log_path);
  log << trial_log_header() << '\n' << std::flush;
  const SearchResult result =
      search_hparams(SearchSpace{}, base, data, plan, options, [&](const Trial &t) {
        log << trial_log_row(t) << '\n' << std::flush;
      });
  log.close();
  write_csv(dir / "trials.csv", [&](std::ostream &os) {
    os << trial_log_header() << '\n';
    for (const Trial &t : result.trials) os << trial_log_row(t) << '\n';
  });
  fs::remove(log_path);
  echo_config(dir, config);
  if (!result.best) {
    out << "search finished: no trial succeeded\n";
    return kExitNumeric;
  }
  const Trial &best = result.trials[*result.best];
  RunConfig best_config = config;
  best_config.set("train.lr", io::format_double(best.config.lr));
  best_config.set("train.batch_size", std::to_string(best.config.batch_size));
  best_config.set("model.hidden_dim", std::to_string(best.config.model.hidden_dim));
  best_config.set("model.heads", std::to_string(best.config.model.heads));
  best_config.set("model.depth", std::to_string(best.config.model.depth));
  best_config.set("model.dropout", io::format_double(best.config.model.dropout));
  write_text(dir / "best.cfg", best_config.resolved());
  out << "search over " << result.trials.size() << " trials: best trial "
      << best.index << ", RMSE " << io::format_double(best.result->mean_rmse)
      << " -> " << (dir / "best.cfg").string() << '\n';
  return kExitOk;
}

int cmd_predict(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  std::vector<std::string> smiles = o.smiles;
  std::vector<MoleculeGraph> graphs;
  if (!o.data.empty()) {
    const Dataset data = load_data(o.data, config);
    for (const Record &r : data.records) {
      smiles.push_back(r.smiles);
    }
    graphs = data.graphs();
  }
  std::vector<MoleculeGraph> direct;
  for (std::size_t i = 0; i < o.smiles.size(); ++i) {
    direct.push_back(featurize_smiles(o.smiles[i]));
  }
  direct.insert(direct.end(), graphs.begin(), graphs.end());
  if (direct.empty()) throw UsageError("give --smiles or --data");
  const std::vector<double> pred = predict_log_s(ckpt, direct);
  std::ostringstream text;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    text << io::csv_escape(smiles[i]) << ',' << io::format_double(pred[i]) << '\n';
  }
  if (!o.out.empty()) {
    const fs::path dir = output_dir(o);
    write_text(dir / "predictions.csv", "smiles,log_s\n" + text.str());
    echo_config(dir, config);
  }
  out << text.str();
  return kExitOk;
}

int cmd_evaluate(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Dataset data = load_data(o.data, config);
  const fs::path dir = output_dir(o);
  const Evaluation ev = evaluate(ckpt, data);
  write_csv(dir / "predictions.csv",
            [&](std::ostream &os) { write_predictions(os, data, ev); });
  write_csv(dir / "histogram.csv",
            [&](std::ostream &os) { write_histogram(os, ev.histogram); });
  write_csv(dir / "metrics.csv", [&](std::ostream &os) { write_metrics(os, ev); });
  write_csv(dir / "rejects.csv", [&](std::ostream &os) { write_rejects(os, data); });
  echo_config(dir, config);
  out << "evaluated " << ev.metrics.n << " molecules: R2 "
      << io::format_double(ev.metrics.r2) << ", RMSE "
      << io::format_double(ev.metrics.rmse) << ", mean error "
      << io::format_double(ev.mean_error) << '\n';
  return kExitOk;
}

int cmd_explain_zeroing(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Dataset data = load_data(o.data, config);
  const fs::path dir = output_dir(o);
  ImportanceReport report = zeroing_importance(checkpoint_predictor(ckpt), data.graphs());
  report.dataset = data.name;
  report.checkpoint = fs::path(o.checkpoint).filename().string();
  report.seed = config.get_uint("seed");
  write_csv(dir / "importance.csv",
            [&](std::ostream &os) { write_importance(os, report); });
  write_csv(dir / "importance_bars.csv", [&](std::ostream &os) {
    os << "feature,signed_score\n";
    for (const ImportanceEntry &e : report.entries) {
      if (e.section == "group") {
        os << e.feature << ',' << io::format_double(e.score) << '\n';
      }
    }
  });
  echo_config(dir, config);
  out << "zeroing importance over " << data.size() << " molecules: top group "
      << report.entries.front().feature << " ("
      << io::format_double(report.entries.front().score) << ")\n";
  return kExitOk;
}

int cmd_explain_local(const Options &o, std::ostream &out) {
  const RunConfig config = resolve_config(o);
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  if (o.smiles.size() != 1) throw UsageError("explain-local takes one --smiles");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const fs::path dir = output_dir(o);
  const MoleculeGraph graph = featurize_smiles(o.smiles.front());
  const LocalExplanation ex =
      local_explain(checkpoint_predictor(ckpt), graph, local_options(config));
  write_csv(dir / "local.csv", [&](std::ostream &os) { write_local(os, ex); });
  write_csv(dir / "local_bars.csv",
            [&](std::ostream &os) { write_bar_data(os, ex.top); });
  echo_config(dir, config);
  out << o.smiles.front() << ": predicted " << io::format_double(ex.prediction);
  if (!ex.top.empty()) {
    out << ", strongest condition " << ex.top.front().condition << " ("
        << io::format_double(ex.top.front().coefficient) << ")";
  }
  out << '\n';
  return kExitOk;
}

void add_common(CLI::App *sub, Options &o) {
  sub->add_option("--config", o.config_file, "Config file of key=value lines")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", o.overrides, "Override one config key (key=value)");
  sub->add_option("--seed", o.seed, "Seed for every random choice");
  sub->add_option("--workers", o.workers, "Parallel folds / trials");
}

}  // namespace

int dispatch(int argc, const char *const *argv, std::ostream &out,
             std::ostream &err) {
  CLI::App app{"Aqueous solubility prediction from SMILES"};
  app.require_subcommand(1);
  Options o;

  auto *parse_cmd = app.add_subcommand("parse", "Print the perceived molecule");
  parse_cmd->add_option("--smiles", o.smiles, "SMILES string")->required();

  auto *featurize = app.add_subcommand("featurize", "Write graph features");
  auto *train = app.add_subcommand("train", "Train one model");
  auto *cv = app.add_subcommand("cv", "Cross-validate a configuration");
  auto *search = app.add_subcommand("search", "Random hyperparameter search");
  auto *predict = app.add_subcommand("predict", "Predict log S");
  auto *evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  auto *zeroing = app.add_subcommand("explain-zeroing", "Feature-zeroing importance");
  auto *local = app.add_subcommand("explain-local", "Local surrogate explanation");

  for (auto *sub : {featurize, train, cv, search, predict, evaluate_cmd, zeroing, local}) {
    add_common(sub, o);
  }
  for (auto *sub : {featurize, train, cv, search, evaluate_cmd, zeroing}) {
    sub->add_option("--data", o.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  }
  predict->add_option("--data", o.data, "Dataset CSV")->check(CLI::ExistingFile);
  for (auto *sub : {featurize, train, cv, search, evaluate_cmd, zeroing, local}) {
    sub->add_option("--out", o.out, "Output directory")->required();
  }
  predict->add_option("--out", o.out, "Output directory");
  for (auto *sub : {train, cv, search}) {
    sub->add_option("--epochs", o.epochs, "Epoch budget (train.epochs)");
  }
  train->add_option("--valid", o.valid, "Validation CSV; default is a held-out split")
      ->check(CLI::ExistingFile);
  for (auto *sub : {cv, search}) {
    sub->add_option("--folds", o.folds, "Fold plan CSV (index,fold)")
        ->check(CLI::ExistingFile);
  }
  for (auto *sub : {predict, evaluate_cmd, zeroing, local}) {
    sub->add_option("--checkpoint", o.checkpoint, "Model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
  }
  predict->add_option("--smiles", o.smiles, "SMILES string (repeatable)");
  local->add_option("--smiles", o.smiles, "SMILES string")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (parse_cmd->parsed()) return cmd_parse(o, out);
    if (featurize->parsed()) return cmd_featurize(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (cv->parsed()) return cmd_cv(o, out);
    if (search->parsed()) return cmd_search(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o, out);
    if (zeroing->parsed()) return cmd_explain_zeroing(o, out);
    if (local->parsed()) return cmd_explain_local(o, out);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError &e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ad::AutodiffError &e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception &e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace solgraph
