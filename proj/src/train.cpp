//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "solgraph/io.hpp"
#include "solgraph/parallel.hpp"
#include "solgraph/rng.hpp"

namespace solgraph {

using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

// Stream ids for the generators derived from TrainConfig::seed.
constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
constexpr std::uint64_t kDropoutStream = 0x64726f70ULL;
constexpr std::uint64_t kHoldoutStream = 0x686f6c64ULL;

class Adam {
public:
  explicit Adam(const ModelParams<float> &params, double lr) : lr_(lr) {
    params.visit([&](const std::string &, const Tensor<float> &t) {
      m_.emplace_back(t.size(), 0.0F);
      v_.emplace_back(t.size(), 0.0F);
    });
  }

  void step(ModelParams<float> &params, const std::vector<Tensor<float>> &grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    std::size_t k = 0;
    params.visit([&](const std::string &, Tensor<float> &p) {
      const Tensor<float> &g = grads[k];
      std::vector<float> &m = m_[k];
      std::vector<float> &v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g[i];
        const double mi = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
        const double vi = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        p[i] = static_cast<float>(p[i] - lr_ * (mi / c1) / (std::sqrt(vi / c2) + kEps));
      }
      ++k;
    });
  }

private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

std::vector<MoleculeGraph> gather_graphs(const Dataset &data,
                                         std::span<const std::size_t> idx) {
  std::vector<MoleculeGraph> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data.records.at(i).graph);
  return out;
}

std::vector<double> gather_labels(const Dataset &data,
                                  std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data.records.at(i).log_s);
  return out;
}

std::pair<double, double> mean_and_sd(const std::vector<double> &xs) {
  if (xs.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must be in (0, 1)");
  }
}

TrainResult train_one(const TrainConfig &config, const Dataset &data,
                      std::span<const std::size_t> train,
                      std::span<const std::size_t> validation,
                      TrainAudit *audit, const EpochCallback &on_epoch) {
  config.validate();
  if (train.empty()) throw ConfigError("empty training set");
  if (validation.empty()) throw ConfigError("empty validation set");
  const auto start = std::chrono::steady_clock::now();

  const std::vector<double> train_labels = gather_labels(data, train);
  TrainResult result;
  result.checkpoint.config = config.model;
  result.checkpoint.scaler = LabelScaler::fit(train_labels);
  const LabelScaler scaler = result.checkpoint.scaler;
  if (audit != nullptr) {
    audit->scaler.insert(train.begin(), train.end());
    audit->validation.insert(validation.begin(), validation.end());
  }

  const std::vector<MoleculeGraph> val_graphs = gather_graphs(data, validation);
  const std::vector<double> val_labels = gather_labels(data, validation);

  ModelParams<float> params = init_params<float>(config.model);
  ModelParams<float> best = params;
  Adam adam(params, config.lr);
  TrainHistory &history = result.history;
  history.best_val_rmse = std::numeric_limits<double>::infinity();

  const CounterRng shuffle_root(config.seed, kShuffleStream);
  const CounterRng dropout_root(config.seed, kDropoutStream);
  std::vector<std::size_t> order(train.begin(), train.end());
  int since_best = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    CounterRng shuffle_rng = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    shuffle(order, shuffle_rng);
    const CounterRng epoch_dropout =
        dropout_root.split(static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0, begin = 0; begin < order.size();
         ++b, begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const MoleculeGraph *> graphs;
      Tensor<float> target = Tensor<float>::matrix(end - begin, 1);
      for (std::size_t i = begin; i < end; ++i) {
        const Record &rec = data.records.at(order[i]);
        graphs.push_back(&rec.graph);
        target[i - begin] = static_cast<float>(scaler.apply(rec.log_s));
        if (audit != nullptr) audit->gradient.insert(order[i]);
      }
      const Batch<float> batch = make_batch<float>(graphs);
      CounterRng dropout_rng = epoch_dropout.split(b);
      Tape<float> tape;
      const ModelVars<float> vars = bind_params(tape, params, true);
      const Var<float> pred = yzs_forward(tape, vars, batch, config.model,
                                          ForwardMode{true, &dropout_rng});
      const Var<float> loss = ad::mse(pred, tape.constant(std::move(target)));
      const double loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        throw NumericError(epoch, b,
                           "NonFiniteLoss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(b));
      }
      tape.backward(loss);
      std::vector<Tensor<float>> grads;
      vars.visit([&](const std::string &, const Var<float> &v) {
        grads.push_back(tape.grad(v));
      });
      adam.step(params, grads);
      loss_sum += loss_value * static_cast<double>(end - begin);
      seen += end - begin;
    }

    std::vector<double> val_pred = predict_normalized(params, config.model, val_graphs);
    for (double &v : val_pred) v = scaler.invert(v);
    const double val_rmse = rmse(val_labels, val_pred);
    if (!std::isfinite(val_rmse)) {
      throw NumericError(epoch, 0, "non-finite validation RMSE at epoch " +
                                       std::to_string(epoch));
    }
    const EpochRecord record{epoch, loss_sum / static_cast<double>(seen), val_rmse};
    history.epochs.push_back(record);
    if (val_rmse < history.best_val_rmse) {
      history.best_val_rmse = val_rmse;
      history.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      history.stopped_early = true;
      break;
    }
    if (on_epoch && !on_epoch(record)) break;
  }
  result.checkpoint.params = std::move(best);
  history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
holdout_split(std::span<const std::size_t> indices, double fraction,
              std::uint64_t seed) {
  const std::size_t n = indices.size();
  if (n < 3) {
    throw DataError(DataErrorKind::kTooFewRecords,
                    "TooFewRecords: need at least 3 records to hold out a "
                    "validation split");
  }
  auto n_val = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 2);
  std::vector<std::size_t> order(indices.begin(), indices.end());
  CounterRng rng(seed, kHoldoutStream);
  shuffle(order, rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {tr, val};
}

CvResult cross_validate(const TrainConfig &config, const Dataset &data,
                        const FoldPlan &plan, const CvOptions &options) {
  config.validate();
  plan.validate(data.size());
  std::vector<std::size_t> folds = options.folds;
  if (folds.empty()) {
    folds.resize(plan.num_folds());
    std::iota(folds.begin(), folds.end(), 0);
  }
  for (std::size_t f : folds) {
    if (f >= plan.num_folds()) {
      throw ConfigError("fold " + std::to_string(f) + " not in plan");
    }
  }
  CvResult result;
  result.folds.resize(folds.size());
  parallel_for(folds.size(), options.workers, [&](std::size_t slot) {
    const std::size_t f = folds[slot];
    FoldResult &fr = result.folds[slot];
    fr.fold = f;
    fr.test = plan.folds[f];
    const std::vector<std::size_t> pool = plan.complement(f);
    const auto [tr, va] = holdout_split(pool, config.val_fraction,
                                        config.seed ^ (0x9E3779B97F4A7C15ULL * (f + 1)));
    TrainResult trained = train_one(config, data, tr, va, &fr.audit);
    fr.n_train = tr.size();
    fr.n_validation = va.size();
    fr.history = std::move(trained.history);
    fr.predictions = predict_log_s(trained.checkpoint, gather_graphs(data, fr.test));
    fr.metrics = compute_metrics(gather_labels(data, fr.test), fr.predictions);
  });
  std::vector<double> rmses;
  std::vector<double> r2s;
  for (const FoldResult &fr : result.folds) {
    rmses.push_back(fr.metrics.rmse);
    if (std::isfinite(fr.metrics.r2)) r2s.push_back(fr.metrics.r2);
  }
  std::tie(result.mean_rmse, result.std_rmse) = mean_and_sd(rmses);
  std::tie(result.mean_r2, result.std_r2) = mean_and_sd(r2s);
  return result;
}

void write_cv_report(std::ostream &os, const CvResult &result) {
  os << "fold,n_train,n_validation,n_test,r2,rmse,best_epoch\n";
  for (const FoldResult &fr : result.folds) {
    os << fr.fold << ',' << fr.n_train << ',' << fr.n_validation << ','
       << fr.test.size() << ',' << io::format_double(fr.metrics.r2) << ','
       << io::format_double(fr.metrics.rmse) << ',' << fr.history.best_epoch
       << '\n';
  }
  os << "mean,,,," << io::format_double(result.mean_r2) << ','
     << io::format_double(result.mean_rmse) << ",\n";
  os << "std,,,," << io::format_double(result.std_r2) << ','
     << io::format_double(result.std_rmse) << ",\n";
}

void write_history(std::ostream &os, const TrainHistory &history) {
  os << "epoch,train_loss,val_rmse,best\n";
  for (const EpochRecord &e : history.epochs) {
    os << e.epoch << ',' << io::format_double(e.train_loss) << ','
       << io::format_double(e.val_rmse) << ','
       << (e.epoch == history.best_epoch ? 1 : 0) << '\n';
  }
}

Histogram error_histogram(std::span<const double> errors, double bin_width) {
  Histogram h;
  h.bin_width = bin_width;
  if (errors.empty()) return h;
  const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
  h.start = std::floor(*lo / bin_width) * bin_width;
  const auto bins =
      static_cast<std::size_t>(std::floor((*hi - h.start) / bin_width)) + 1;
  h.counts.assign(bins, 0);
  for (double e : errors) {
    auto k = static_cast<std::size_t>(std::floor((e - h.start) / bin_width));
    ++h.counts[std::min(k, bins - 1)];
  }
  return h;
}

Evaluation evaluate(const Checkpoint &checkpoint, const Dataset &data) {
  Evaluation ev;
  ev.y = data.labels();
  ev.yhat = predict_log_s(checkpoint, data.graphs());
  for (double v : ev.yhat) {
    if (!std::isfinite(v)) throw NumericError(-1, 0, "non-finite prediction");
  }
  ev.metrics = compute_metrics(ev.y, ev.yhat);
  std::vector<double> errors(ev.y.size());
  for (std::size_t i = 0; i < ev.y.size(); ++i) errors[i] = ev.yhat[i] - ev.y[i];
  ev.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) /
                  static_cast<double>(errors.size());
  ev.histogram = error_histogram(errors);
  return ev;
}

void write_predictions(std::ostream &os, const Dataset &data,
                       const Evaluation &evaluation) {
  os << "smiles,y,yhat,error\n";
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    os << io::csv_escape(data.records[i].smiles) << ','
       << io::format_double(evaluation.y[i]) << ','
       << io::format_double(evaluation.yhat[i]) << ','
       << io::format_double(evaluation.yhat[i] - evaluation.y[i]) << '\n';
  }
}

void write_histogram(std::ostream &os, const Histogram &histogram) {
  os << "bin_start,bin_end,count\n";
  for (std::size_t k = 0; k < histogram.counts.size(); ++k) {
    const double a = histogram.start + static_cast<double>(k) * histogram.bin_width;
    os << io::format_double(a) << ',' << io::format_double(a + histogram.bin_width)
       << ',' << histogram.counts[k] << '\n';
  }
}

void write_metrics(std::ostream &os, const Evaluation &evaluation) {
  os << "r2,rmse,n,mean_error\n"
     << io::format_double(evaluation.metrics.r2) << ','
     << io::format_double(evaluation.metrics.rmse) << ',' << evaluation.metrics.n
     << ',' << io::format_double(evaluation.mean_error) << '\n';
}

}  // namespace solgraph
