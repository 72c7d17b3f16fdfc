//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "solgraph/model.hpp"
#include "support.hpp"

namespace solgraph {
namespace {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using testing::random_params;
using testing::small_config;

double max_abs_diff(const Tensor<double> &a, const Tensor<double> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Tensor<double> predict(const ModelParams<double> &p, const ModelConfig &c,
                       const std::vector<MoleculeGraph> &graphs) {
  Tape<double> tape;
  const ModelVars<double> vars = bind_params(tape, p, false);
  return yzs_forward(tape, vars, make_batch<double>(graphs), c, ForwardMode{}).value();
}

TEST(Config, Validate) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  c.heads = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.depth = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Params, CanonicalNamesAndShapes) {
  ModelConfig c;
  const ModelParams<float> p = init_params<float>(c);
  std::vector<std::string> names;
  p.visit([&](const std::string &n, const Tensor<float> &) { names.push_back(n); });
  ASSERT_EQ(names.size(), 2U + 10U * 6U + 3U + 4U);
  EXPECT_EQ(names.front(), "gcn.weight");
  EXPECT_EQ(names[2], "transformer.0.ln1.gamma");
  EXPECT_EQ(names.back(), "head.b2");
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
  EXPECT_EQ(p.gcn_weight.shape(), (ad::Shape{92, 128}));
  EXPECT_EQ(p.lstm_wx.shape(), (ad::Shape{128, 512}));
  EXPECT_EQ(p.head_w2.shape(), (ad::Shape{256, 1}));
  for (float g : p.layers[0].ln1_gamma.values()) EXPECT_EQ(g, 1.0F);
  EXPECT_NO_THROW(check_params(p, c));
}

TEST(Params, InitDeterministicPerSeed) {
  ModelConfig a;
  a.seed = 11;
  ModelConfig b = a;
  b.seed = 12;
  EXPECT_EQ(init_params<float>(a).gcn_weight, init_params<float>(a).gcn_weight);
  EXPECT_NE(init_params<float>(a).gcn_weight, init_params<float>(b).gcn_weight);
}

TEST(Params, DepthChangesLayerCount) {
  ModelConfig five;
  five.depth = 5;
  const ModelParams<float> p5 = init_params<float>(five);
  EXPECT_EQ(p5.layers.size(), 5U);
  EXPECT_THROW(check_params(p5, ModelConfig{}), ConfigError);
}

TEST(Gcn, PermutationEquivariant) {
  const ModelConfig c = small_config();
  const ModelParams<double> p = random_params(c, 5);
  const MoleculeGraph g = featurize_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C");
  std::vector<int> perm(static_cast<std::size_t>(g.num_atoms));
  for (int i = 0; i < g.num_atoms; ++i) perm[static_cast<std::size_t>(i)] = (i * 5 + 3) % g.num_atoms;
  const MoleculeGraph pg = testing::permute_graph(g, perm);

  Tape<double> tape;
  const ModelVars<double> vars = bind_params(tape, p, false);
  const Tensor<double> h = gcn_forward(tape, vars, make_batch<double>({g})).value();
  const Tensor<double> hp = gcn_forward(tape, vars, make_batch<double>({pg})).value();
  double worst = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t col = 0; col < h.cols(); ++col) {
      worst = std::max(worst, std::abs(hp.at(i, col) -
                                       h.at(static_cast<std::size_t>(perm[i]), col)));
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Gcn, SymmetricAtomsShareRows) {
  const ModelConfig c = small_config();
  const ModelParams<double> p = random_params(c, 6);
  Tape<double> tape;
  const ModelVars<double> vars = bind_params(tape, p, false);
  const Tensor<double> h =
      gcn_forward(tape, vars, make_batch<double>({featurize_smiles("c1ccccc1")})).value();
  for (std::size_t r = 1; r < 6; ++r) {
    for (std::size_t col = 0; col < h.cols(); ++col) EXPECT_DOUBLE_EQ(h.at(r, col), h.at(0, col));
  }
}

TEST(Gcn, AdjacencyNormalised) {
  const Batch<double> b = make_batch<double>({featurize_smiles("CCO")});
  // Degrees with self-loops: 2, 3, 2.
  const Eigen::MatrixXd a(b.adjacency);
  EXPECT_NEAR(a(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(a(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(a(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(a(0, 2), 0.0);
  EXPECT_EQ(a, a.transpose());
}

TEST(Attention, RowStochastic) {
  CounterRng rng(7);
  const Tensor<double> q = testing::random_tensor({9, 8}, rng, -3, 3);
  const Tensor<double> k = testing::random_tensor({9, 8}, rng, -3, 3);
  const auto weights = ad::segment_attention_weights(q, k, {0, 4, 5, 9}, 4);
  ASSERT_EQ(weights.size(), 12U);
  for (const Tensor<double> &w : weights) {
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double total = 0.0;
      for (std::size_t col = 0; col < w.cols(); ++col) {
        EXPECT_GE(w.at(r, col), 0.0);
        total += w.at(r, col);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(Attention, TransformerGraphLocal) {
  const ModelConfig c = small_config();
  const ModelParams<double> p = random_params(c, 8);
  CounterRng rng(9);
  const Tensor<double> x = testing::random_tensor({7, 8}, rng);
  Tensor<double> head(ad::Shape{3, 8});
  std::copy_n(x.values().begin(), 24, head.values().begin());

  Tape<double> tape;
  const ModelVars<double> vars = bind_params(tape, p, false);
  const Tensor<double> both =
      transformer_encode(vars, tape.constant(x), {0, 3, 7}, c, ForwardMode{}).value();
  const Tensor<double> alone =
      transformer_encode(vars, tape.constant(head), {0, 3}, c, ForwardMode{}).value();
  double worst = 0.0;
  for (std::size_t i = 0; i < 24; ++i) worst = std::max(worst, std::abs(both[i] - alone[i]));
  EXPECT_LE(worst, 1e-6);
}

TEST(Lstm, MatchesGateEquations) {
  ModelConfig c = small_config();
  c.lstm_hidden = 5;
  const ModelParams<double> p = random_params(c, 10);
  CounterRng rng(11);
  const Tensor<double> x = testing::random_tensor({7, 8}, rng);
  const ad::Segments seg = {0, 4, 5, 7};

  Tape<double> tape;
  const ModelVars<double> vars = bind_params(tape, p, false);
  const Tensor<double> out = lstm_forward(vars, tape.constant(x), seg).value();
  ASSERT_EQ(out.shape(), (ad::Shape{7, 5}));

  const std::size_t h = 5;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double worst = 0.0;
  for (std::size_t g = 0; g + 1 < seg.size(); ++g) {
    std::vector<double> hs(h, 0.0);
    std::vector<double> cs(h, 0.0);
    for (std::size_t r = seg[g]; r < seg[g + 1]; ++r) {
      std::vector<double> z(4 * h);
      for (std::size_t j = 0; j < 4 * h; ++j) {
        double v = p.lstm_bias[j];
        for (std::size_t i = 0; i < 8; ++i) v += x.at(r, i) * p.lstm_wx.at(i, j);
        for (std::size_t i = 0; i < h; ++i) v += hs[i] * p.lstm_wh.at(i, j);
        z[j] = v;
      }
      for (std::size_t j = 0; j < h; ++j) {
        const double ig = sig(z[j]);
        const double fg = sig(z[h + j]);
        const double gg = std::tanh(z[2 * h + j]);
        const double og = sig(z[3 * h + j]);
        cs[j] = fg * cs[j] + ig * gg;
        hs[j] = og * std::tanh(cs[j]);
        worst = std::max(worst, std::abs(out.at(r, j) - hs[j]));
      }
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Lstm, ForgetBiasInit) {
  ModelConfig c;
  const ModelParams<float> p = init_params<float>(c);
  const std::size_t h = static_cast<std::size_t>(c.lstm_width());
  for (std::size_t j = 0; j < 4 * h; ++j) {
    EXPECT_EQ(p.lstm_bias[j], (j >= h && j < 2 * h) ? 1.0F : 0.0F);
  }
}

TEST(Yzs, BatchingDoesNotLeak) {
  const ModelConfig c = small_config();
  const ModelParams<double> p = random_params(c, 12);
  std::vector<MoleculeGraph> graphs;
  for (const char *s : {"CCO", "c1ccccc1", "C", "CC(=O)Oc1ccccc1C(=O)O", "C/C=C/C"}) {
    graphs.push_back(featurize_smiles(s));
  }
  const Tensor<double> batched = predict(p, c, graphs);
  ASSERT_EQ(batched.size(), graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    EXPECT_NEAR(batched[i], predict(p, c, {graphs[i]})[0], 1e-6);
  }
}

TEST(Yzs, ZeroWeightsGiveZero) {
  const ModelConfig c = small_config();
  const Tensor<double> y = predict(zero_params<double>(c), c, {featurize_smiles("CCO")});
  EXPECT_EQ(y[0], 0.0);
}

TEST(Yzs, FloatPathAgreesWithDouble) {
  ModelConfig c;
  c.seed = 4;
  const ModelParams<float> pf = init_params<float>(c);
  std::vector<MoleculeGraph> graphs = {featurize_smiles("CCO"), featurize_smiles("c1ccncc1")};
  const std::vector<double> f = predict_normalized(pf, c, graphs, 1);
  const Tensor<double> d = predict(cast_params<double>(pf), c, graphs);
  for (std::size_t i = 0; i < graphs.size(); ++i) EXPECT_NEAR(f[i], d[i], 1e-4);
}

TEST(Yzs, GradCheckThreeAtoms) {
  ModelConfig c = small_config(21);
  const ModelParams<double> shape = random_params(c, 13);
  const Batch<double> batch = make_batch<double>({featurize_smiles("CCO")});
  const auto r = testing::check_gradients(
      [&](Tape<double> &tape, const std::vector<Var<double>> &leaves) {
        return yzs_forward(tape, testing::rebind(shape, leaves), batch, c,
                           ForwardMode{});
      },
      testing::flatten(shape));
  EXPECT_GT(r.entries, 500U);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(Yzs, GradCheckTrainingBatch) {
  ModelConfig c = small_config(22);
  c.dropout = 0.2;
  const ModelParams<double> shape = random_params(c, 14);
  const Batch<double> batch =
      make_batch<double>({featurize_smiles("CCO"), featurize_smiles("C=O"), featurize_smiles("CC(C)C")});
  const auto r = testing::check_gradients(
      [&](Tape<double> &tape, const std::vector<Var<double>> &leaves) {
        CounterRng rng(3);
        return yzs_forward(tape, testing::rebind(shape, leaves), batch, c,
                           ForwardMode{true, &rng});
      },
      testing::flatten(shape));
  EXPECT_LT(r.max_rel_error, 1e-4);
}

}  // namespace
}  // namespace solgraph
