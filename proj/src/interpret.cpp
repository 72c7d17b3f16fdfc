//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <Eigen/Dense>

#include "solgraph/elements.hpp"
#include "solgraph/io.hpp"
#include "solgraph/rng.hpp"

namespace solgraph {

namespace nl = node_layout;

Predictor checkpoint_predictor(const Checkpoint &checkpoint,
                               std::size_t batch_size) {
  return [&checkpoint, batch_size](const std::vector<MoleculeGraph> &graphs) {
    return predict_log_s(checkpoint, graphs, batch_size);
  };
}

const std::vector<FeatureGroup> &feature_groups() {
  static const std::vector<FeatureGroup> groups = {
      {"Symbol", nl::kElement, nl::kDegree},
      {"Degree", nl::kDegree, nl::kFormalCharge},
      {"FormalCharge", nl::kFormalCharge, nl::kRadicals},
      {"Electrons", nl::kRadicals, nl::kHybridization},
      {"Hybridization", nl::kHybridization, nl::kAromatic},
      {"Aromatic", nl::kAromatic, nl::kHydrogens},
      {"Hydrogen", nl::kHydrogens, nl::kChiral},
      {"Chirality", nl::kChiral, nl::kParity},
      {"ChiralityType", nl::kParity, nl::kWidth},
  };
  return groups;
}

namespace {

void sort_by_magnitude(std::vector<ImportanceEntry> &entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ImportanceEntry &a, const ImportanceEntry &b) {
                     return std::abs(a.score) > std::abs(b.score);
                   });
}

std::string signed_int(int v) { return (v > 0 ? "+" : "") + std::to_string(v); }

}  // namespace

ImportanceReport zeroing_importance(const Predictor &predictor,
                                    const std::vector<MoleculeGraph> &graphs) {
  ImportanceReport report;
  report.column_mapd.assign(nl::kWidth, 0.0);
  if (graphs.empty()) return report;
  const std::vector<double> base = predictor(graphs);
  const double n = static_cast<double>(graphs.size());
  for (int c = 0; c < nl::kWidth; ++c) {
    std::vector<MoleculeGraph> zeroed = graphs;
    bool changed = false;
    for (MoleculeGraph &g : zeroed) {
      for (int a = 0; a < g.num_atoms; ++a) {
        float &v = g.node_features[static_cast<std::size_t>(a) * nl::kWidth +
                                   static_cast<std::size_t>(c)];
        changed = changed || v != 0.0F;
        v = 0.0F;
      }
    }
    // An all-zero column leaves every input, and so every prediction, as is.
    if (!changed) continue;
    const std::vector<double> pred = predictor(zeroed);
    double total = 0.0;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      total += std::abs(pred[i] - base[i]);
    }
    report.column_mapd[static_cast<std::size_t>(c)] = total / n;
  }

  std::vector<ImportanceEntry> groups;
  std::vector<ImportanceEntry> symbols;
  for (const FeatureGroup &g : feature_groups()) {
    double sum = 0.0;
    for (int c = g.begin; c < g.end; ++c) {
      sum += report.column_mapd[static_cast<std::size_t>(c)];
    }
    const ImportanceEntry entry{g.name, sum / (g.end - g.begin), "MAPD",
                                g.name == "Symbol" ? "symbol" : "group"};
    (g.name == "Symbol" ? symbols : groups).push_back(entry);
  }
  sort_by_magnitude(groups);

  std::vector<ImportanceEntry> elements;
  const auto symbols_list = element_symbols();
  for (std::size_t e = 0; e < kNumElements; ++e) {
    bool present = false;
    for (const MoleculeGraph &g : graphs) {
      for (int a = 0; a < g.num_atoms && !present; ++a) {
        present = g.node(a, static_cast<int>(e)) != 0.0F;
      }
    }
    if (present) {
      elements.push_back({std::string(symbols_list[e]), report.column_mapd[e],
                          "MAPD", "symbol"});
    }
  }
  sort_by_magnitude(elements);
  report.entries = groups;
  report.entries.insert(report.entries.end(), symbols.begin(), symbols.end());
  report.entries.insert(report.entries.end(), elements.begin(), elements.end());
  return report;
}

std::vector<Condition> interpretable_conditions(const MoleculeGraph &graph) {
  std::vector<Condition> out;
  auto add = [&](std::string name, const std::vector<int> &columns,
                 const std::function<bool(int)> &on_atom) {
    Condition cond{std::move(name), {}};
    for (int a = 0; a < graph.num_atoms; ++a) {
      if (!on_atom(a)) continue;
      for (int c : columns) {
        if (graph.node(a, c) != 0.0F) cond.cells.emplace_back(a, c);
      }
    }
    if (!cond.cells.empty()) out.push_back(std::move(cond));
  };
  auto any = [](int) { return true; };

  const auto symbols = element_symbols();
  for (int e = 0; e < static_cast<int>(kNumElements); ++e) {
    add("has " + std::string(symbols[static_cast<std::size_t>(e)]),
        {nl::kElement + e}, any);
  }
  add("aromatic", {nl::kAromatic}, any);
  for (int d = 0; d < nl::kNumDegrees; ++d) {
    add("degree=" + std::to_string(d), {nl::kDegree + d}, any);
  }
  for (int h = 0; h < nl::kNumHydrogens; ++h) {
    add("H=" + std::to_string(h), {nl::kHydrogens + h}, any);
  }
  std::map<int, bool> charges;
  for (int a = 0; a < graph.num_atoms; ++a) {
    const auto q = static_cast<int>(graph.node(a, nl::kFormalCharge));
    if (q != 0) charges[q] = true;
  }
  for (const auto &[q, unused] : charges) {
    add("charge=" + signed_int(q), {nl::kFormalCharge}, [&, q = q](int a) {
      return static_cast<int>(graph.node(a, nl::kFormalCharge)) == q;
    });
  }
  for (int h = 0; h < kNumHybridizations; ++h) {
    add("hyb=" + std::string(to_string(static_cast<Hybridization>(h))),
        {nl::kHybridization + h}, any);
  }
  add("chiral", {nl::kChiral, nl::kParity, nl::kParity + 1}, any);
  add("radical", {nl::kRadicals}, any);
  return out;
}

LocalExplanation local_explain(const Predictor &predictor,
                               const MoleculeGraph &graph,
                               const LocalOptions &options) {
  if (options.n_samples < 50) {
    throw std::invalid_argument("local_explain needs at least 50 samples");
  }
  const std::vector<Condition> conditions = interpretable_conditions(graph);
  const std::size_t m = conditions.size();
  const std::size_t n = options.n_samples;
  if (m == 0) throw DegenerateSamples("DegenerateSamples: no conditions to perturb");

  // Row 0 is the unperturbed molecule.
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  CounterRng rng(options.seed, 0x6c696d65ULL);
  std::vector<MoleculeGraph> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MoleculeGraph g = graph;
    if (i > 0) {
      for (std::size_t j = 0; j < m; ++j) {
        if (rng.uniform() < 0.5) {
          z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
          for (const auto &[a, c] : conditions[j].cells) {
            g.node_features[static_cast<std::size_t>(a) * nl::kWidth +
                            static_cast<std::size_t>(c)] = 0.0F;
          }
        }
      }
    }
    samples.push_back(std::move(g));
  }
  bool varied = false;
  for (Eigen::Index i = 1; i < z.rows() && !varied; ++i) {
    varied = z.row(i) != z.row(0);
  }
  if (!varied) throw DegenerateSamples("DegenerateSamples: all perturbations identical");

  const std::vector<double> y = predictor(samples);
  const double sigma2 = options.kernel_width * options.kernel_width;
  Eigen::MatrixXd x(z.rows(), z.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(z.cols()) = z;
  Eigen::VectorXd w(z.rows());
  Eigen::VectorXd yv(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double d = 1.0 - z.row(i).mean();  // fraction switched off
    w(i) = std::exp(-d * d / sigma2);
    yv(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXd a = x.transpose() * w.asDiagonal() * x;
  for (Eigen::Index j = 1; j < a.rows(); ++j) a(j, j) += options.ridge;
  const Eigen::VectorXd theta =
      a.ldlt().solve(x.transpose() * w.asDiagonal() * yv);

  LocalExplanation out;
  out.prediction = y.front();
  out.intercept = theta(0);
  for (std::size_t j = 0; j < m; ++j) {
    out.coefficients.push_back(
        {conditions[j].name, theta(static_cast<Eigen::Index>(j) + 1)});
  }
  out.top = out.coefficients;
  std::stable_sort(out.top.begin(), out.top.end(),
                   [](const LocalEntry &p, const LocalEntry &q) {
                     return std::abs(p.coefficient) > std::abs(q.coefficient);
                   });
  if (out.top.size() > options.top_k) out.top.resize(options.top_k);
  return out;
}

void write_importance(std::ostream &os, const ImportanceReport &report) {
  os << "# dataset=" << report.dataset << " checkpoint=" << report.checkpoint
     << " seed=" << report.seed << '\n';
  os << "feature,score,sign,method,section\n";
  for (const ImportanceEntry &e : report.entries) {
    os << io::csv_escape(e.feature) << ',' << io::format_double(e.score) << ','
       << (e.score < 0 ? '-' : '+') << ',' << e.method << ',' << e.section
       << '\n';
  }
}

void write_local(std::ostream &os, const LocalExplanation &explanation) {
  os << "feature,score,sign\n";
  for (const LocalEntry &e : explanation.top) {
    os << io::csv_escape(e.condition) << ','
       << io::format_double(std::abs(e.coefficient)) << ','
       << (e.coefficient < 0 ? '-' : '+') << '\n';
  }
}

void write_bar_data(std::ostream &os, const std::vector<LocalEntry> &entries) {
  os << "feature,signed_score\n";
  for (const LocalEntry &e : entries) {
    os << io::csv_escape(e.condition) << ',' << io::format_double(e.coefficient)
       << '\n';
  }
}

}  // namespace solgraph
