//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCore>

namespace solgraph {

using ad::Segments;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

void ModelConfig::validate() const {
  auto fail = [](const std::string &what) { throw ConfigError(what); };
  if (in_dim <= 0) fail("in_dim must be positive");
  if (hidden_dim <= 0) fail("hidden_dim must be positive");
  if (depth <= 0) fail("depth must be positive");
  if (heads <= 0) fail("heads must be positive");
  if (mlp_dim <= 0) fail("mlp_dim must be positive");
  if (lstm_hidden < 0) fail("lstm_hidden must be non-negative");
  if (hidden_dim % heads != 0) {
    fail("hidden_dim " + std::to_string(hidden_dim) +
         " is not divisible by heads " + std::to_string(heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

template <typename T>
ModelParams<T> zero_params(const ModelConfig &config) {
  config.validate();
  const auto in = static_cast<std::size_t>(config.in_dim);
  const auto d = static_cast<std::size_t>(config.hidden_dim);
  const auto m = static_cast<std::size_t>(config.mlp_dim);
  const auto h = static_cast<std::size_t>(config.lstm_width());
  ModelParams<T> p;
  p.gcn_weight = Tensor<T>(Shape{in, d});
  p.gcn_bias = Tensor<T>(Shape{d});
  p.layers.resize(static_cast<std::size_t>(config.depth));
  for (auto &l : p.layers) {
    l.ln1_gamma = Tensor<T>(Shape{d});
    l.ln1_beta = Tensor<T>(Shape{d});
    l.wq = Tensor<T>(Shape{d, d});
    l.wk = Tensor<T>(Shape{d, d});
    l.wv = Tensor<T>(Shape{d, d});
    l.wo = Tensor<T>(Shape{d, d});
    l.ln2_gamma = Tensor<T>(Shape{d});
    l.ln2_beta = Tensor<T>(Shape{d});
    l.ff1 = Tensor<T>(Shape{d, m});
    l.ff2 = Tensor<T>(Shape{m, d});
  }
  p.lstm_wx = Tensor<T>(Shape{d, 4 * h});
  p.lstm_wh = Tensor<T>(Shape{h, 4 * h});
  p.lstm_bias = Tensor<T>(Shape{4 * h});
  p.head_w1 = Tensor<T>(Shape{h, m});
  p.head_b1 = Tensor<T>(Shape{m});
  p.head_w2 = Tensor<T>(Shape{m, 1});
  p.head_b2 = Tensor<T>(Shape{1});
  return p;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig &config) {
  ModelParams<T> p = zero_params<T>(config);
  std::uint64_t stream = 0;
  p.visit([&](const std::string &name, Tensor<T> &t) {
    CounterRng rng(config.seed, stream++);
    if (t.rank() == 2) {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(t.shape()[0] + t.shape()[1]));
      for (T &v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    } else if (name.ends_with(".gamma")) {
      std::fill(t.values().begin(), t.values().end(), T{1});
    }
  });
  const auto h = static_cast<std::size_t>(config.lstm_width());
  for (std::size_t i = h; i < 2 * h; ++i) p.lstm_bias[i] = T{1};
  return p;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From> &params) {
  ModelParams<To> out;
  out.layers.resize(params.layers.size());
  std::vector<const Tensor<From> *> src;
  params.visit([&](const std::string &, const Tensor<From> &t) { src.push_back(&t); });
  std::size_t i = 0;
  out.visit([&](const std::string &, Tensor<To> &t) {
    t = src[i++]->template cast<To>();
  });
  return out;
}

template <typename T>
void check_params(const ModelParams<T> &params, const ModelConfig &config) {
  const ModelParams<T> expected = zero_params<T>(config);
  if (params.layers.size() != expected.layers.size()) {
    throw ConfigError("parameter set has " +
                      std::to_string(params.layers.size()) +
                      " transformer layers, config expects " +
                      std::to_string(expected.layers.size()));
  }
  std::vector<Shape> shapes;
  expected.visit([&](const std::string &, const Tensor<T> &t) {
    shapes.push_back(t.shape());
  });
  std::size_t i = 0;
  params.visit([&](const std::string &name, const Tensor<T> &t) {
    if (t.shape() != shapes[i]) {
      throw ConfigError("parameter " + name + " has shape " +
                        ad::shape_string(t.shape()) + ", expected " +
                        ad::shape_string(shapes[i]));
    }
    ++i;
  });
}

template <typename T>
ModelVars<T> bind_params(Tape<T> &tape, const ModelParams<T> &params,
                         bool requires_grad) {
  ModelVars<T> vars;
  vars.layers.resize(params.layers.size());
  std::vector<Var<T>> bound;
  params.visit([&](const std::string &, const Tensor<T> &t) {
    bound.push_back(tape.leaf(t, requires_grad));
  });
  std::size_t i = 0;
  vars.visit([&](const std::string &, Var<T> &v) { v = bound[i++]; });
  return vars;
}

template <typename T>
Batch<T> make_batch(const std::vector<const MoleculeGraph *> &graphs) {
  if (graphs.empty()) throw ConfigError("empty batch");
  Batch<T> batch;
  batch.offsets.push_back(0);
  for (const MoleculeGraph *g : graphs) {
    if (g->num_atoms <= 0) throw ConfigError("EmptyGraph: molecule has no atoms");
    batch.offsets.push_back(batch.offsets.back() +
                            static_cast<std::size_t>(g->num_atoms));
  }
  const std::size_t n = batch.offsets.back();
  const auto width = static_cast<std::size_t>(node_layout::kWidth);
  batch.features = Tensor<T>::matrix(n, width);
  batch.graph_id.resize(n);

  std::vector<Eigen::Triplet<T, int>> entries;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const MoleculeGraph &g = *graphs[gi];
    const std::size_t base = batch.offsets[gi];
    std::copy(g.node_features.begin(), g.node_features.end(),
              batch.features.values().begin() +
                  static_cast<std::ptrdiff_t>(base * width));
    std::fill(batch.graph_id.begin() + static_cast<std::ptrdiff_t>(base),
              batch.graph_id.begin() +
                  static_cast<std::ptrdiff_t>(batch.offsets[gi + 1]),
              static_cast<int>(gi));
    batch.labels.push_back(g.label);

    const auto atoms = static_cast<std::size_t>(g.num_atoms);
    std::vector<std::vector<int>> neighbours(atoms);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const int s = g.edge_src[e];
      const int d = g.edge_dst[e];
      if (s < 0 || d < 0 || static_cast<std::size_t>(s) >= atoms ||
          static_cast<std::size_t>(d) >= atoms) {
        throw ConfigError("edge index out of range");
      }
      if (s != d) neighbours[static_cast<std::size_t>(s)].push_back(d);
    }
    std::vector<double> inv_sqrt(atoms);
    for (std::size_t a = 0; a < atoms; ++a) {
      auto &nb = neighbours[a];
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      inv_sqrt[a] = 1.0 / std::sqrt(1.0 + static_cast<double>(nb.size()));
    }
    for (std::size_t a = 0; a < atoms; ++a) {
      const int row = static_cast<int>(base + a);
      entries.emplace_back(row, row, static_cast<T>(inv_sqrt[a] * inv_sqrt[a]));
      for (int b : neighbours[a]) {
        entries.emplace_back(
            row, static_cast<int>(base) + b,
            static_cast<T>(inv_sqrt[a] * inv_sqrt[static_cast<std::size_t>(b)]));
      }
    }
  }
  batch.adjacency.resize(static_cast<int>(n), static_cast<int>(n));
  batch.adjacency.setFromTriplets(entries.begin(), entries.end());
  return batch;
}

template <typename T>
Batch<T> make_batch(const std::vector<MoleculeGraph> &graphs) {
  std::vector<const MoleculeGraph *> ptrs;
  ptrs.reserve(graphs.size());
  for (const MoleculeGraph &g : graphs) ptrs.push_back(&g);
  return make_batch<T>(ptrs);
}

template <typename T>
Var<T> gcn_forward(Tape<T> &tape, const ModelVars<T> &params,
                   const Batch<T> &batch) {
  const Var<T> x = tape.constant(batch.features);
  const Var<T> ax = ad::spmm(batch.adjacency, x);
  return ad::relu(ad::add(ad::matmul(ax, params.gcn_weight), params.gcn_bias));
}

namespace {

template <typename T>
Var<T> maybe_dropout(Var<T> x, const ModelConfig &config, ForwardMode mode) {
  if (!mode.training || config.dropout == 0.0) return x;
  if (mode.rng == nullptr) throw ConfigError("training forward needs an RNG");
  return ad::dropout(x, static_cast<T>(config.dropout), true, *mode.rng);
}

}  // namespace

template <typename T>
Var<T> transformer_block(const TransformerLayer<Var<T>> &layer, Var<T> x,
                         const Segments &offsets, const ModelConfig &config,
                         ForwardMode mode) {
  const Var<T> n1 = ad::layer_norm(x, layer.ln1_gamma, layer.ln1_beta);
  const Var<T> att = ad::segment_attention(
      ad::matmul(n1, layer.wq), ad::matmul(n1, layer.wk),
      ad::matmul(n1, layer.wv), offsets, static_cast<std::size_t>(config.heads));
  const Var<T> msa = maybe_dropout(ad::matmul(att, layer.wo), config, mode);
  const Var<T> mid = ad::add(x, msa);
  const Var<T> n2 = ad::layer_norm(mid, layer.ln2_gamma, layer.ln2_beta);
  const Var<T> ff = maybe_dropout(
      ad::matmul(ad::relu(ad::matmul(n2, layer.ff1)), layer.ff2), config, mode);
  return ad::add(mid, ff);
}

template <typename T>
Var<T> transformer_encode(const ModelVars<T> &params, Var<T> x,
                          const Segments &offsets, const ModelConfig &config,
                          ForwardMode mode) {
  for (const auto &layer : params.layers) {
    x = transformer_block(layer, x, offsets, config, mode);
  }
  return x;
}

template <typename T>
Var<T> lstm_forward(const ModelVars<T> &params, Var<T> x,
                    const Segments &offsets) {
  const std::size_t h = params.lstm_wh.rows();
  const std::size_t graphs = offsets.size() - 1;
  const Var<T> xw = ad::add(ad::matmul(x, params.lstm_wx), params.lstm_bias);

  std::size_t longest = 0;
  for (std::size_t g = 0; g < graphs; ++g) {
    longest = std::max(longest, offsets[g + 1] - offsets[g]);
  }

  // Graphs drop out of the step set once their sequence ends and never come
  // back, so the carried state only holds the graphs still running.
  std::vector<std::size_t> running;
  for (std::size_t g = 0; g < graphs; ++g) {
    if (offsets[g + 1] > offsets[g]) running.push_back(g);
  }
  Var<T> hs{};
  Var<T> cs{};
  std::vector<Var<T>> outputs;
  std::vector<std::size_t> output_row(offsets.back());
  std::size_t emitted = 0;
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<std::size_t> active;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < running.size(); ++k) {
      const std::size_t g = running[k];
      if (offsets[g + 1] - offsets[g] > t) {
        active.push_back(g);
        keep.push_back(k);
      }
    }
    std::vector<std::size_t> rows;
    for (std::size_t g : active) rows.push_back(offsets[g] + t);
    Var<T> z = ad::gather_rows(xw, std::span<const std::size_t>(rows));
    Var<T> c_prev{};
    if (t > 0) {
      Var<T> h_prev = hs;
      c_prev = cs;
      if (active.size() != running.size()) {
        h_prev = ad::gather_rows(hs, std::span<const std::size_t>(keep));
        c_prev = ad::gather_rows(cs, std::span<const std::size_t>(keep));
      }
      z = ad::add(z, ad::matmul(h_prev, params.lstm_wh));
    }
    const Var<T> ig = ad::sigmoid(ad::slice_cols(z, 0, h));
    const Var<T> fg = ad::sigmoid(ad::slice_cols(z, h, 2 * h));
    const Var<T> gg = ad::tanh(ad::slice_cols(z, 2 * h, 3 * h));
    const Var<T> og = ad::sigmoid(ad::slice_cols(z, 3 * h, 4 * h));
    cs = t > 0 ? ad::add(ad::mul(fg, c_prev), ad::mul(ig, gg)) : ad::mul(ig, gg);
    hs = ad::mul(og, ad::tanh(cs));
    outputs.push_back(hs);
    for (std::size_t r : rows) output_row[r] = emitted++;
    running = std::move(active);
  }
  const Var<T> stacked = ad::concat_rows(std::span<const Var<T>>(outputs));
  return ad::gather_rows(stacked, std::span<const std::size_t>(output_row));
}

template <typename T>
Var<T> pool_and_head(const ModelVars<T> &params, Var<T> h,
                     const Segments &offsets) {
  const Var<T> pooled = ad::segment_mean(h, offsets);
  const Var<T> hidden =
      ad::relu(ad::add(ad::matmul(pooled, params.head_w1), params.head_b1));
  return ad::add(ad::matmul(hidden, params.head_w2), params.head_b2);
}

template <typename T>
Var<T> yzs_forward(Tape<T> &tape, const ModelVars<T> &params,
                   const Batch<T> &batch, const ModelConfig &config,
                   ForwardMode mode) {
  Var<T> x = gcn_forward(tape, params, batch);
  x = transformer_encode(params, x, batch.offsets, config, mode);
  x = lstm_forward(params, x, batch.offsets);
  return pool_and_head(params, x, batch.offsets);
}

std::vector<double> predict_normalized(const ModelParams<float> &params,
                                       const ModelConfig &config,
                                       const std::vector<MoleculeGraph> &graphs,
                                       std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(graphs.size());
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t begin = 0; begin < graphs.size(); begin += batch_size) {
    const std::size_t end = std::min(graphs.size(), begin + batch_size);
    std::vector<const MoleculeGraph *> chunk;
    for (std::size_t i = begin; i < end; ++i) chunk.push_back(&graphs[i]);
    const Batch<float> batch = make_batch<float>(chunk);
    Tape<float> tape;
    const ModelVars<float> vars = bind_params(tape, params, false);
    const Var<float> y = yzs_forward(tape, vars, batch, config, ForwardMode{});
    for (float v : y.value().values()) out.push_back(static_cast<double>(v));
  }
  return out;
}

#define SOLGRAPH_MODEL_INSTANTIATE(T)                                          \
  template ModelParams<T> zero_params<T>(const ModelConfig &);                 \
  template ModelParams<T> init_params<T>(const ModelConfig &);                 \
  template void check_params<T>(const ModelParams<T> &, const ModelConfig &);  \
  template ModelVars<T> bind_params<T>(Tape<T> &, const ModelParams<T> &,      \
                                       bool);                                  \
  template Batch<T> make_batch<T>(const std::vector<const MoleculeGraph *> &); \
  template Batch<T> make_batch<T>(const std::vector<MoleculeGraph> &);         \
  template Var<T> gcn_forward<T>(Tape<T> &, const ModelVars<T> &,              \
                                 const Batch<T> &);                            \
  template Var<T> transformer_block<T>(const TransformerLayer<Var<T>> &,       \
                                       Var<T>, const Segments &,               \
                                       const ModelConfig &, ForwardMode);      \
  template Var<T> transformer_encode<T>(const ModelVars<T> &, Var<T>,          \
                                        const Segments &, const ModelConfig &, \
                                        ForwardMode);                          \
  template Var<T> lstm_forward<T>(const ModelVars<T> &, Var<T>,                \
                                  const Segments &);                           \
  template Var<T> pool_and_head<T>(const ModelVars<T> &, Var<T>,               \
                                   const Segments &);                          \
  template Var<T> yzs_forward<T>(Tape<T> &, const ModelVars<T> &,              \
                                 const Batch<T> &, const ModelConfig &,        \
                                 ForwardMode);

SOLGRAPH_MODEL_INSTANTIATE(float)
SOLGRAPH_MODEL_INSTANTIATE(double)

template ModelParams<double> cast_params<double, float>(const ModelParams<float> &);
template ModelParams<float> cast_params<float, double>(const ModelParams<double> &);

}  // namespace solgraph
