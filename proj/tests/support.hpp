//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "solgraph/autodiff.hpp"
#include "solgraph/data.hpp"
#include "solgraph/featurize.hpp"
#include "solgraph/io.hpp"
#include "solgraph/model.hpp"
#include "solgraph/rng.hpp"

namespace solgraph::testing {

inline std::filesystem::path data_dir() { return SOLGRAPH_TEST_DATA_DIR; }

inline Dataset corpus25() { return load_csv(data_dir() / "corpus25.csv"); }

inline std::vector<std::string> read_lines(const std::filesystem::path &path) {
  std::vector<std::string> out;
  const std::string text = io::read_file(path);
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();
    if (end > begin) out.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return out;
}

inline ad::Tensor<double> random_tensor(ad::Shape shape, CounterRng &rng,
                                        double lo = -1.0, double hi = 1.0) {
  ad::Tensor<double> t(std::move(shape));
  for (double &v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Builds an output from leaf variables; called once per evaluation so any
// randomness inside must be reseeded by the builder itself.
using GradBuild = std::function<ad::Var<double>(
    ad::Tape<double> &, const std::vector<ad::Var<double>> &)>;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

// Central differences of loss = sum(output * R) for fixed random R against
// the tape gradient. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(const GradBuild &build,
                                 std::vector<ad::Tensor<double>> inputs,
                                 double h = 1e-5, double floor = 1.0) {
  ad::Tensor<double> weights;
  auto loss_of = [&](const std::vector<ad::Tensor<double>> &x,
                     std::vector<ad::Tensor<double>> *grads) {
    ad::Tape<double> tape;
    std::vector<ad::Var<double>> leaves;
    for (const auto &t : x) leaves.push_back(tape.leaf(t));
    const ad::Var<double> out = build(tape, leaves);
    if (weights.size() == 0) {
      CounterRng rng(99);
      weights = random_tensor(out.shape(), rng, 0.5, 1.5);
    }
    const ad::Var<double> loss =
        ad::sum(ad::mul(out, tape.constant(weights)));
    const double value = loss.value()[0];
    if (grads != nullptr) {
      tape.backward(loss);
      for (const auto &v : leaves) grads->push_back(tape.grad(v));
    }
    return value;
  };
  std::vector<ad::Tensor<double>> analytic;
  loss_of(inputs, &analytic);
  GradCheck out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double saved = inputs[i][j];
      inputs[i][j] = saved + h;
      const double up = loss_of(inputs, nullptr);
      inputs[i][j] = saved - h;
      const double down = loss_of(inputs, nullptr);
      inputs[i][j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
      ++out.entries;
    }
  }
  return out;
}

// Flattens parameters in canonical order and rebinds them from leaves.
inline std::vector<ad::Tensor<double>> flatten(const ModelParams<double> &p) {
  std::vector<ad::Tensor<double>> out;
  p.visit([&](const std::string &, const ad::Tensor<double> &t) { out.push_back(t); });
  return out;
}

inline ModelVars<double> rebind(const ModelParams<double> &shape,
                                const std::vector<ad::Var<double>> &leaves) {
  ModelVars<double> vars;
  vars.layers.resize(shape.layers.size());
  std::size_t i = 0;
  vars.visit([&](const std::string &, ad::Var<double> &v) { v = leaves[i++]; });
  return vars;
}

inline ModelConfig small_config(std::uint64_t seed = 3) {
  ModelConfig c;
  c.hidden_dim = 8;
  c.depth = 2;
  c.heads = 2;
  c.mlp_dim = 6;
  c.dropout = 0.0;
  c.seed = seed;
  return c;
}

// Gives every parameter a nonzero random value, including biases and norms.
inline ModelParams<double> random_params(const ModelConfig &config,
                                         std::uint64_t seed, double scale = 0.5) {
  ModelParams<double> p = zero_params<double>(config);
  CounterRng rng(seed);
  p.visit([&](const std::string &, ad::Tensor<double> &t) {
    for (double &v : t.values()) v = rng.uniform(-scale, scale);
  });
  return p;
}

// Relabels atoms: new atom i is old atom perm[i].
inline MoleculeGraph permute_graph(const MoleculeGraph &g,
                                   const std::vector<int> &perm) {
  MoleculeGraph out = g;
  std::vector<int> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    inverse[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
    std::copy_n(g.node_features.begin() + perm[i] * node_layout::kWidth,
                node_layout::kWidth,
                out.node_features.begin() +
                    static_cast<std::ptrdiff_t>(i) * node_layout::kWidth);
  }
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    out.edge_src[e] = inverse[static_cast<std::size_t>(g.edge_src[e])];
    out.edge_dst[e] = inverse[static_cast<std::size_t>(g.edge_dst[e])];
  }
  return out;
}

}  // namespace solgraph::testing
