//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when a gating criterion fails. Criterion 10 needs the full
// training and test CSVs (SOLGRAPH_STRETCH_TRAIN, SOLGRAPH_STRETCH_TEST) and
// never gates.
//

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "planted.hpp"
#include "solgraph/checkpoint.hpp"
#include "solgraph/elements.hpp"
#include "solgraph/interpret.hpp"
#include "solgraph/metrics.hpp"
#include "solgraph/train.hpp"
#include "support.hpp"

namespace solgraph {
namespace {

namespace fs = std::filesystem;
namespace nl = node_layout;
namespace el = edge_layout;
using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// 1. Feature dimensions and one-hot sums on the 25-molecule corpus.
Outcome feature_dimensions(double budget) {
  const auto start = std::chrono::steady_clock::now();
  const auto lines = testing::read_lines(testing::data_dir() / "corpus25.csv");
  std::size_t molecules = 0;
  std::size_t bad = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string smiles = lines[i].substr(0, lines[i].find(','));
    const MoleculeGraph g = featurize_smiles(smiles);
    ++molecules;
    if (g.node_features.size() != static_cast<std::size_t>(g.num_atoms) * 92) ++bad;
    if (g.edge_features.size() != g.num_edges() * 10) ++bad;
    auto sum = [](const float *row, int b, int e) {
      return std::accumulate(row + b, row + e, 0.0F);
    };
    for (int a = 0; a < g.num_atoms; ++a) {
      const float *r = g.node_features.data() + static_cast<std::ptrdiff_t>(a) * nl::kWidth;
      bad += sum(r, nl::kElement, nl::kDegree) != 1.0F;
      bad += sum(r, nl::kDegree, nl::kFormalCharge) != 1.0F;
      bad += sum(r, nl::kHybridization, nl::kAromatic) != 1.0F;
      bad += sum(r, nl::kHydrogens, nl::kChiral) != 1.0F;
      bad += sum(r, nl::kParity, nl::kWidth) != r[nl::kChiral];
    }
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const float *r = g.edge_features.data() + e * el::kWidth;
      bad += sum(r, el::kType, el::kConjugated) != 1.0F;
      bad += sum(r, el::kStereo, el::kWidth) != 1.0F;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(molecules == 25 && bad == 0 && secs < budget,
                 std::to_string(molecules) + " molecules, " + std::to_string(bad) +
                     " violations, " + fmt(secs) + " s");
}

// 2. Parser agreement with the committed toolkit reference table.
Outcome parser_oracle(double budget) {
  const auto start = std::chrono::steady_clock::now();
  const auto smiles = testing::read_lines(testing::data_dir() / "drug200.smi");
  const auto ref = testing::read_lines(testing::data_dir() / "drug200_reference.csv");
  const std::string exceptions =
      io::read_file(testing::data_dir() / "drug200_exceptions.md");
  std::vector<std::optional<Molecule>> mols;
  for (const std::string &s : smiles) {
    try {
      mols.emplace_back(parse(s));
    } catch (const SmilesError &) {
      mols.emplace_back();
    }
  }
  std::size_t atoms = 0;
  std::size_t agree = 0;
  std::size_t untriaged = 0;
  for (std::size_t i = 1; i < ref.size(); ++i) {
    const auto f = io::split_csv_line(ref[i]);
    const auto m = static_cast<std::size_t>(std::stoul(f[0]));
    const auto a = static_cast<std::size_t>(std::stoul(f[1]));
    ++atoms;
    bool ok = false;
    if (m < mols.size() && mols[m] && a < mols[m]->num_atoms()) {
      const Atom &at = mols[m]->atoms[a];
      ok = at.degree == std::stoi(f[3]) && at.aromatic == (f[4] == "1") &&
           at.total_h() == std::stoi(f[5]) && at.in_ring == (f[6] == "1");
    }
    if (ok) {
      ++agree;
    } else if (exceptions.find("\n" + f[0] + "," + f[1] + ",") == std::string::npos) {
      ++untriaged;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rate = atoms == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(atoms);
  return verdict(smiles.size() == 200 && rate >= 0.98 && untriaged == 0 && secs < budget,
                 std::to_string(agree) + "/" + std::to_string(atoms) + " atoms agree (" +
                     fmt(100.0 * rate) + "%), " + std::to_string(untriaged) +
                     " untriaged, " + fmt(secs) + " s");
}

// 3. Central finite differences for every op and the full model.
Outcome gradient_checks(double budget) {
  const auto start = std::chrono::steady_clock::now();
  using L = std::vector<Var<double>>;
  using testing::GradBuild;
  auto rnd = [](ad::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    CounterRng rng(seed);
    return testing::random_tensor(std::move(s), rng, lo, hi);
  };
  const ad::Segments seg = {0, 2, 3, 5};
  ad::SparseMatrix<double> sp(4, 4);
  std::vector<Eigen::Triplet<double>> trip = {{0, 0, 0.5}, {0, 1, 0.3}, {1, 0, 0.3},
                                              {2, 3, -0.7}, {3, 2, 1.1}};
  sp.setFromTriplets(trip.begin(), trip.end());
  const std::vector<std::size_t> rows = {3, 0, 0, 2};

  struct Case {
    std::string name;
    GradBuild build;
    std::vector<Tensor<double>> inputs;
  };
  std::vector<Case> cases = {
      {"matmul", [](Tape<double> &, const L &x) { return ad::matmul(x[0], x[1]); },
       {rnd({3, 4}, 1), rnd({4, 2}, 2)}},
      {"add", [](Tape<double> &, const L &x) { return ad::add(x[0], x[1]); },
       {rnd({3, 4}, 3), rnd({4}, 4)}},
      {"sub", [](Tape<double> &, const L &x) { return ad::sub(x[0], x[1]); },
       {rnd({3, 4}, 5), rnd({3, 4}, 6)}},
      {"mul", [](Tape<double> &, const L &x) { return ad::mul(x[0], x[1]); },
       {rnd({3, 4}, 7), rnd({3, 4}, 8)}},
      {"scale", [](Tape<double> &, const L &x) { return ad::scale(x[0], 0.3); },
       {rnd({3, 4}, 9)}},
      {"relu", [](Tape<double> &, const L &x) { return ad::relu(x[0]); }, {rnd({4, 5}, 10)}},
      {"sigmoid", [](Tape<double> &, const L &x) { return ad::sigmoid(x[0]); },
       {rnd({4, 5}, 11, -3, 3)}},
      {"tanh", [](Tape<double> &, const L &x) { return ad::tanh(x[0]); },
       {rnd({4, 5}, 12, -2, 2)}},
      {"exp", [](Tape<double> &, const L &x) { return ad::exp(x[0]); }, {rnd({4, 5}, 13)}},
      {"softmax_rows", [](Tape<double> &, const L &x) { return ad::softmax_rows(x[0]); },
       {rnd({3, 5}, 14, -2, 2)}},
      {"layer_norm",
       [](Tape<double> &, const L &x) { return ad::layer_norm(x[0], x[1], x[2]); },
       {rnd({4, 6}, 15, -2, 2), rnd({6}, 16), rnd({6}, 17)}},
      {"dropout",
       [](Tape<double> &, const L &x) {
         CounterRng rng(5);
         return ad::dropout(x[0], 0.3, true, rng);
       },
       {rnd({5, 6}, 18)}},
      {"concat_rows",
       [](Tape<double> &, const L &x) {
         return ad::concat_rows<double>(std::span<const Var<double>>(x.data(), 2));
       },
       {rnd({2, 3}, 19), rnd({4, 3}, 20)}},
      {"concat_cols",
       [](Tape<double> &, const L &x) {
         return ad::concat_cols<double>(std::span<const Var<double>>(x.data(), 2));
       },
       {rnd({3, 2}, 21), rnd({3, 5}, 22)}},
      {"slice_cols", [](Tape<double> &, const L &x) { return ad::slice_cols(x[0], 1, 4); },
       {rnd({3, 5}, 23)}},
      {"gather_rows",
       [rows](Tape<double> &, const L &x) {
         return ad::gather_rows(x[0], std::span<const std::size_t>(rows));
       },
       {rnd({4, 3}, 24)}},
      {"segment_sum", [seg](Tape<double> &, const L &x) { return ad::segment_sum(x[0], seg); },
       {rnd({5, 3}, 25)}},
      {"segment_mean",
       [seg](Tape<double> &, const L &x) { return ad::segment_mean(x[0], seg); },
       {rnd({5, 3}, 26)}},
      {"segment_broadcast",
       [seg](Tape<double> &, const L &x) { return ad::segment_broadcast(x[0], seg); },
       {rnd({3, 3}, 27)}},
      {"sum", [](Tape<double> &, const L &x) { return ad::sum(x[0]); }, {rnd({3, 4}, 28)}},
      {"mean", [](Tape<double> &, const L &x) { return ad::mean(x[0]); }, {rnd({3, 4}, 29)}},
      {"mse", [](Tape<double> &, const L &x) { return ad::mse(x[0], x[1]); },
       {rnd({5, 1}, 30), rnd({5, 1}, 31)}},
      {"spmm", [sp](Tape<double> &, const L &x) { return ad::spmm(sp, x[0]); },
       {rnd({4, 3}, 32)}},
      {"segment_attention",
       [](Tape<double> &, const L &x) {
         return ad::segment_attention(x[0], x[1], x[2], {0, 3, 4, 7}, 2);
       },
       {rnd({7, 6}, 33), rnd({7, 6}, 34), rnd({7, 6}, 35)}},
  };

  const ModelConfig config = testing::small_config(21);
  const ModelParams<double> shape = testing::random_params(config, 13);
  const Batch<double> batch = make_batch<double>({featurize_smiles("CCO")});
  cases.push_back({"yzs_forward(CCO)",
                   [&](Tape<double> &tape, const L &leaves) {
                     return yzs_forward(tape, testing::rebind(shape, leaves), batch, config,
                                        ForwardMode{});
                   },
                   testing::flatten(shape)});

  double worst = 0.0;
  std::string worst_name;
  std::size_t entries = 0;
  for (const Case &c : cases) {
    const auto r = testing::check_gradients(c.build, c.inputs);
    entries += r.entries;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = c.name;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(worst < 1e-4 && secs < budget,
                 std::to_string(cases.size()) + " ops, " + std::to_string(entries) +
                     " entries, max rel error " + fmt(worst) + " (" + worst_name + "), " +
                     fmt(secs) + " s");
}

// 4. Metrics against the literal formulas.
Outcome metric_oracles() {
  CounterRng rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(99);
    std::vector<double> y(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(-10, 2);
      p[i] = y[i] + rng.uniform(-2, 2);
    }
    long double ss = 0.0L;
    long double mu = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      ss += static_cast<long double>(y[i] - p[i]) * static_cast<long double>(y[i] - p[i]);
      mu += y[i];
    }
    mu /= static_cast<long double>(n);
    long double st = 0.0L;
    for (double v : y) st += (v - mu) * (v - mu);
    const double want_rmse = static_cast<double>(std::sqrt(ss / static_cast<long double>(n)));
    const double want_r2 = static_cast<double>(1.0L - ss / st);
    worst = std::max(worst, std::abs(rmse(y, p) - want_rmse) / std::max(1.0, want_rmse));
    worst = std::max(worst, std::abs(r2(y, p) - want_r2) / std::max(1.0, std::abs(want_r2)));
    const std::vector<double> mean_pred(n, static_cast<double>(mu));
    worst = std::max(worst, std::abs(r2(y, mean_pred)));
    worst = std::max(worst, rmse(y, y));
    worst = std::max(worst, std::abs(r2(y, y) - 1.0));
  }
  return verdict(worst <= 1e-12, "1000 vectors, max deviation " + fmt(worst));
}

// 5. Structural invariants of the model.
Outcome structural_invariants() {
  const ModelConfig config = testing::small_config();
  const ModelParams<double> p = testing::random_params(config, 5);

  // GCN permutation equivariance.
  const MoleculeGraph g = featurize_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C");
  std::vector<int> perm(static_cast<std::size_t>(g.num_atoms));
  for (int i = 0; i < g.num_atoms; ++i) perm[static_cast<std::size_t>(i)] = (i * 5 + 3) % g.num_atoms;
  const MoleculeGraph pg = testing::permute_graph(g, perm);
  Tape<double> tape;
  const ModelVars<double> vars = bind_params(tape, p, false);
  const Tensor<double> h = gcn_forward(tape, vars, make_batch<double>({g})).value();
  const Tensor<double> hp = gcn_forward(tape, vars, make_batch<double>({pg})).value();
  double equivariance = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < h.cols(); ++c) {
      equivariance = std::max(
          equivariance, std::abs(hp.at(i, c) - h.at(static_cast<std::size_t>(perm[i]), c)));
    }
  }

  // Attention rows.
  CounterRng rng(7);
  const Tensor<double> q = testing::random_tensor({9, 8}, rng, -3, 3);
  const Tensor<double> k = testing::random_tensor({9, 8}, rng, -3, 3);
  double stochastic = 0.0;
  for (const Tensor<double> &w : ad::segment_attention_weights(q, k, {0, 4, 5, 9}, 4)) {
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < w.cols(); ++c) total += w.at(r, c);
      stochastic = std::max(stochastic, std::abs(total - 1.0));
    }
  }

  // Batch versus single-graph predictions.
  std::vector<MoleculeGraph> graphs;
  for (const char *s : {"CCO", "c1ccccc1", "C", "CC(=O)Oc1ccccc1C(=O)O", "C/C=C/C",
                        "Cn1cnc2c1c(=O)n(C)c(=O)n2C"}) {
    graphs.push_back(featurize_smiles(s));
  }
  auto predict = [&](const std::vector<MoleculeGraph> &gs) {
    Tape<double> t;
    const ModelVars<double> v = bind_params(t, p, false);
    return yzs_forward(t, v, make_batch<double>(gs), config, ForwardMode{}).value();
  };
  const Tensor<double> batched = predict(graphs);
  double locality = 0.0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    locality = std::max(locality, std::abs(batched[i] - predict({graphs[i]})[0]));
  }

  // LSTM against the gate equations.
  ModelConfig lc = config;
  lc.lstm_hidden = 5;
  const ModelParams<double> lp = testing::random_params(lc, 10);
  const Tensor<double> x = testing::random_tensor({7, 8}, rng);
  const ad::Segments seg = {0, 4, 5, 7};
  Tape<double> lt;
  const Tensor<double> out =
      lstm_forward(bind_params(lt, lp, false), lt.constant(x), seg).value();
  const std::size_t hd = 5;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double lstm = 0.0;
  for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
    std::vector<double> hs(hd, 0.0);
    std::vector<double> cs(hd, 0.0);
    for (std::size_t r = seg[s]; r < seg[s + 1]; ++r) {
      std::vector<double> z(4 * hd);
      for (std::size_t j = 0; j < 4 * hd; ++j) {
        z[j] = lp.lstm_bias[j];
        for (std::size_t i = 0; i < 8; ++i) z[j] += x.at(r, i) * lp.lstm_wx.at(i, j);
        for (std::size_t i = 0; i < hd; ++i) z[j] += hs[i] * lp.lstm_wh.at(i, j);
      }
      for (std::size_t j = 0; j < hd; ++j) {
        cs[j] = sig(z[hd + j]) * cs[j] + sig(z[j]) * std::tanh(z[2 * hd + j]);
        hs[j] = sig(z[3 * hd + j]) * std::tanh(cs[j]);
        lstm = std::max(lstm, std::abs(out.at(r, j) - hs[j]));
      }
    }
  }
  return verdict(equivariance <= 1e-6 && stochastic <= 1e-6 && locality <= 1e-6 &&
                     lstm <= 1e-10,
                 "equivariance " + fmt(equivariance) + ", row sums " + fmt(stochastic) +
                     ", batch locality " + fmt(locality) + ", LSTM " + fmt(lstm));
}

// 6. The default configuration memorises 16 molecules.
Outcome overfit(double budget) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset corpus = testing::corpus25();
  std::vector<std::size_t> idx(16);
  std::iota(idx.begin(), idx.end(), 0);
  const Dataset data = corpus.subset(idx);
  TrainConfig config;
  config.epochs = 500;
  config.patience = 500;
  config.seed = 1;
  config.model.seed = 1;
  auto fit = [&] { return train_one(config, data, idx, idx); };
  const TrainResult a = fit();
  const TrainResult b = fit();
  bool same = a.history.epochs.size() == b.history.epochs.size();
  for (std::size_t i = 0; same && i < a.history.epochs.size(); ++i) {
    same = a.history.epochs[i].train_loss == b.history.epochs[i].train_loss &&
           a.history.epochs[i].val_rmse == b.history.epochs[i].val_rmse;
  }
  same = same && a.checkpoint.params.head_w2 == b.checkpoint.params.head_w2;
  const auto z = predict_normalized(a.checkpoint.params, a.checkpoint.config, data.graphs());
  std::vector<double> target;
  for (double y : data.labels()) target.push_back(a.checkpoint.scaler.apply(y));
  const double norm_rmse = rmse(target, z);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(norm_rmse < 0.1 && same && secs < budget,
                 "normalized train RMSE " + fmt(norm_rmse) + " (best epoch " +
                     std::to_string(a.history.best_epoch) + "), " +
                     (same ? "deterministic" : "NOT deterministic") + ", " + fmt(secs) +
                     " s for two runs");
}

// 7. Fold plans and the leakage audit.
Outcome protocol() {
  bool cover = true;
  for (std::size_t n : {10U, 25U, 101U, 9944U}) {
    const FoldPlan plan = kfold(n, 10, 42);
    std::vector<int> seen(n, 0);
    for (const auto &f : plan.folds) {
      for (std::size_t i : f) ++seen[i];
    }
    cover = cover && plan.num_folds() == 10 &&
            std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }
  const Dataset data = testing::corpus25();
  const FoldPlan plan = kfold(data.size(), 10, 42);
  TrainConfig config;
  config.model = testing::small_config(2);
  config.epochs = 2;
  const CvResult cv = cross_validate(config, data, plan);
  std::size_t leaks = 0;
  std::size_t unaccounted = 0;
  for (const FoldResult &f : cv.folds) {
    for (std::size_t i : f.test) {
      leaks += f.audit.gradient.count(i) + f.audit.scaler.count(i) + f.audit.validation.count(i);
    }
    if (f.audit.gradient.size() + f.audit.validation.size() + f.test.size() != data.size()) {
      ++unaccounted;
    }
  }
  return verdict(cover && cv.folds.size() == 10 && leaks == 0 && unaccounted == 0,
                 std::string(cover ? "disjoint covers" : "BAD cover") + ", " +
                     std::to_string(cv.folds.size()) + " folds audited, " +
                     std::to_string(leaks) + " test indices leaked");
}

// 8. save -> load -> predict is bit-identical.
Outcome checkpoint_round_trip() {
  const Dataset data = testing::corpus25();
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  TrainConfig config;
  config.epochs = 2;
  const TrainResult trained = train_one(config, data, idx, idx);
  const fs::path path = fs::temp_directory_path() / "solgraph_acceptance.ckpt";
  save_checkpoint(path, trained.checkpoint);
  const Checkpoint loaded = load_checkpoint(path);
  fs::remove(path);
  const auto graphs = data.graphs();
  const auto before = predict_log_s(trained.checkpoint, graphs);
  const auto after = predict_log_s(loaded, graphs);
  const bool same = before.size() == after.size() &&
                    std::memcmp(before.data(), after.data(), before.size() * sizeof(double)) == 0;
  return verdict(same && before.size() == 25,
                 std::to_string(before.size()) + " predictions, " +
                     (same ? "bit-identical" : "DIFFER"));
}

// 9. Planted linear models.
Outcome interpretability() {
  std::vector<MoleculeGraph> graphs;
  for (const std::string &s : testing::plant_corpus()) graphs.push_back(featurize_smiles(s));
  CounterRng rng(1);
  std::size_t isolated = 0;
  for (const FeatureGroup &g : feature_groups()) {
    const testing::PlantedModel m = testing::plant_group(g, rng);
    const ImportanceReport r = zeroing_importance(m.predictor(), graphs);
    bool ok = true;
    std::size_t seen = 0;
    for (const ImportanceEntry &e : r.entries) {
      if (e.section != "group" && e.feature != "Symbol") continue;
      ++seen;
      ok = ok && (e.feature == g.name ? e.score > 0.0 : e.score == 0.0);
    }
    isolated += ok && seen == feature_groups().size();
  }
  std::size_t agree = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng prng(seed, 17);
    const testing::PlantedModel m = testing::plant_all(prng);
    const auto &corpus = testing::plant_corpus();
    const MoleculeGraph g = featurize_smiles(corpus[seed % corpus.size()]);
    LocalOptions opt;
    opt.seed = seed;
    const LocalExplanation e = local_explain(m.predictor(), g, opt);
    const auto conds = interpretable_conditions(g);
    for (std::size_t j = 0; j < conds.size(); ++j) {
      const double truth = m.effect(g, conds[j]);
      if (truth == 0.0) continue;
      ++total;
      agree += (truth > 0) == (e.coefficients[j].coefficient > 0);
    }
  }
  const double rate = total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
  return verdict(isolated == feature_groups().size() && rate >= 0.95,
                 std::to_string(isolated) + "/" + std::to_string(feature_groups().size()) +
                     " planted groups isolated, local sign agreement " + fmt(rate) + " over " +
                     std::to_string(total) + " conditions in 20 plants");
}

// 10. Full-scale run; reported, never asserted.
Outcome stretch_run() {
  const char *train_path = std::getenv("SOLGRAPH_STRETCH_TRAIN");
  const char *test_path = std::getenv("SOLGRAPH_STRETCH_TEST");
  if (train_path == nullptr || test_path == nullptr) {
    return {Status::kSkip, "set SOLGRAPH_STRETCH_TRAIN and SOLGRAPH_STRETCH_TEST to run"};
  }
  const Dataset train = load_csv(train_path);
  const Dataset test = load_csv(test_path);
  std::vector<std::size_t> all(train.size());
  std::iota(all.begin(), all.end(), 0);
  TrainConfig config;
  config.epochs = 300;
  const auto [tr, va] = holdout_split(all, config.val_fraction, config.seed);
  const TrainResult trained = train_one(config, train, tr, va);
  const Evaluation ev = evaluate(trained.checkpoint, test);
  const fs::path hist = fs::temp_directory_path() / "solgraph_stretch_histogram.csv";
  io::atomic_write(hist, [&](std::ostream &os) { write_histogram(os, ev.histogram); });
  const bool finite = std::isfinite(ev.metrics.rmse);
  return {finite ? Status::kPass : Status::kFail,
          "R2 " + fmt(ev.metrics.r2) + ", RMSE " + fmt(ev.metrics.rmse) + " on " +
              std::to_string(ev.metrics.n) + " molecules, histogram " + hist.string()};
}

}  // namespace
}  // namespace solgraph

int main() {
  using namespace solgraph;
  struct Criterion {
    int id;
    const char *name;
    bool gating;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "feature-dimension fidelity", true, [] { return feature_dimensions(1.0); }},
      {2, "parser oracle agreement", true, [] { return parser_oracle(5.0); }},
      {3, "gradient correctness", true, [] { return gradient_checks(60.0); }},
      {4, "metric oracles", true, [] { return metric_oracles(); }},
      {5, "structural invariants", true, [] { return structural_invariants(); }},
      {6, "overfit sanity", true, [] { return overfit(300.0); }},
      {7, "protocol correctness", true, [] { return protocol(); }},
      {8, "checkpoint round-trip", true, [] { return checkpoint_round_trip(); }},
      {9, "interpretability oracles", true, [] { return interpretability(); }},
      {10, "full-scale stretch run (non-gating)", false, [] { return stretch_run(); }},
  };
  int failures = 0;
  for (const Criterion &c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char *tag = o.status == Status::kPass ? "PASS" : o.status == Status::kSkip ? "SKIP" : "FAIL";
    std::cout << "criterion " << c.id << ": " << tag << " - " << c.name << " - " << o.detail
              << std::endl;
    if (c.gating && o.status != Status::kPass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
