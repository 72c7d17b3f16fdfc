//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "solgraph/autodiff.hpp"
#include "solgraph/featurize.hpp"
#include "solgraph/rng.hpp"

namespace solgraph {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  int in_dim = node_layout::kWidth;
  int hidden_dim = 128;
  int depth = 6;
  int heads = 8;
  int mlp_dim = 256;
  double dropout = 0.2519;
  int lstm_hidden = 0;  // 0 means hidden_dim
  std::uint64_t seed = 0;

  int lstm_width() const { return lstm_hidden > 0 ? lstm_hidden : hidden_dim; }
  // Throws ConfigError.
  void validate() const;
  bool operator==(const ModelConfig &) const = default;
};

// One pre-norm encoder block. Projections carry no bias.
template <typename S>
struct TransformerLayer {
  S ln1_gamma, ln1_beta;
  S wq, wk, wv, wo;
  S ln2_gamma, ln2_beta;
  S ff1, ff2;
};

// Model parameters, generic over the slot type so the same layout holds
// tensors (`ModelParams<T>`) or their tape handles (`ModelVars<T>`).
template <typename S>
struct ParamSet {
  S gcn_weight, gcn_bias;
  std::vector<TransformerLayer<S>> layers;
  // LSTM gates packed as [input, forget, cell, output] column blocks.
  S lstm_wx, lstm_wh, lstm_bias;
  S head_w1, head_b1, head_w2, head_b2;

  // Calls f(name, slot) for every parameter in canonical order.
  template <typename F>
  void visit(F &&f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F &&f) const {
    visit_impl(*this, f);
  }

private:
  template <typename Self, typename F>
  static void visit_impl(Self &self, F &f) {
    f(std::string("gcn.weight"), self.gcn_weight);
    f(std::string("gcn.bias"), self.gcn_bias);
    for (std::size_t i = 0; i < self.layers.size(); ++i) {
      auto &l = self.layers[i];
      const std::string p = "transformer." + std::to_string(i) + ".";
      f(p + "ln1.gamma", l.ln1_gamma);
      f(p + "ln1.beta", l.ln1_beta);
      f(p + "wq", l.wq);
      f(p + "wk", l.wk);
      f(p + "wv", l.wv);
      f(p + "wo", l.wo);
      f(p + "ln2.gamma", l.ln2_gamma);
      f(p + "ln2.beta", l.ln2_beta);
      f(p + "ff1", l.ff1);
      f(p + "ff2", l.ff2);
    }
    f(std::string("lstm.wx"), self.lstm_wx);
    f(std::string("lstm.wh"), self.lstm_wh);
    f(std::string("lstm.bias"), self.lstm_bias);
    f(std::string("head.w1"), self.head_w1);
    f(std::string("head.b1"), self.head_b1);
    f(std::string("head.w2"), self.head_w2);
    f(std::string("head.b2"), self.head_b2);
  }
};

template <typename T>
using ModelParams = ParamSet<ad::Tensor<T>>;
template <typename T>
using ModelVars = ParamSet<ad::Var<T>>;

// Parameter shapes for a config, default-filled with zeros.
template <typename T>
ModelParams<T> zero_params(const ModelConfig &config);

// Xavier-uniform weights, zero biases, unit layer-norm scales, forget-gate
// bias 1. Deterministic in config.seed.
template <typename T>
ModelParams<T> init_params(const ModelConfig &config);

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From> &params);

// Checks every tensor shape against the config.
template <typename T>
void check_params(const ModelParams<T> &params, const ModelConfig &config);

template <typename T>
ModelVars<T> bind_params(ad::Tape<T> &tape, const ModelParams<T> &params,
                         bool requires_grad);

// Block-diagonal batch of molecule graphs.
template <typename T>
struct Batch {
  ad::Tensor<T> features;        // N x in_dim
  ad::Segments offsets;          // G + 1 row offsets
  std::vector<int> graph_id;     // per node, non-decreasing
  ad::SparseMatrix<T> adjacency; // D^-1/2 (A + I) D^-1/2, block diagonal
  std::vector<std::optional<double>> labels;

  std::size_t num_graphs() const { return offsets.size() - 1; }
  std::size_t num_nodes() const { return offsets.back(); }
};

// Throws ConfigError for an empty graph or an empty batch.
template <typename T>
Batch<T> make_batch(const std::vector<const MoleculeGraph *> &graphs);
template <typename T>
Batch<T> make_batch(const std::vector<MoleculeGraph> &graphs);

// Per-call forward settings. `rng` drives dropout when training.
struct ForwardMode {
  bool training = false;
  CounterRng *rng = nullptr;
};

// ReLU(Â X W + b).
template <typename T>
ad::Var<T> gcn_forward(ad::Tape<T> &tape, const ModelVars<T> &params,
                       const Batch<T> &batch);

template <typename T>
ad::Var<T> transformer_block(const TransformerLayer<ad::Var<T>> &layer,
                             ad::Var<T> x, const ad::Segments &offsets,
                             const ModelConfig &config, ForwardMode mode);

template <typename T>
ad::Var<T> transformer_encode(const ModelVars<T> &params, ad::Var<T> x,
                              const ad::Segments &offsets,
                              const ModelConfig &config, ForwardMode mode);

// Runs each graph's rows, in order, through the LSTM from a zero state.
// Returns the hidden state for every node (N x lstm_width).
template <typename T>
ad::Var<T> lstm_forward(const ModelVars<T> &params, ad::Var<T> x,
                        const ad::Segments &offsets);

// Mean pool per graph, then the two-layer head. Returns G x 1.
template <typename T>
ad::Var<T> pool_and_head(const ModelVars<T> &params, ad::Var<T> h,
                         const ad::Segments &offsets);

// Full stack; predictions are in normalized label space (G x 1).
template <typename T>
ad::Var<T> yzs_forward(ad::Tape<T> &tape, const ModelVars<T> &params,
                       const Batch<T> &batch, const ModelConfig &config,
                       ForwardMode mode);

// Eval-mode predictions in normalized label space, batched.
std::vector<double> predict_normalized(const ModelParams<float> &params,
                                       const ModelConfig &config,
                                       const std::vector<MoleculeGraph> &graphs,
                                       std::size_t batch_size = 64);

}  // namespace solgraph
