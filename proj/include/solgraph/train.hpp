//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "solgraph/checkpoint.hpp"
#include "solgraph/data.hpp"
#include "solgraph/metrics.hpp"
#include "solgraph/model.hpp"

namespace solgraph {

// Non-finite loss or prediction; carries where it happened.
class NumericError : public std::runtime_error {
public:
  NumericError(int epoch, std::size_t batch, const std::string &what)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
  int epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

private:
  int epoch_;
  std::size_t batch_;
};

struct TrainConfig {
  ModelConfig model;
  double lr = 5e-4;
  std::size_t batch_size = 32;
  int epochs = 300;
  int patience = 30;
  std::uint64_t seed = 0;
  // Share of the training folds held out for early stopping in cross
  // validation and search.
  double val_fraction = 0.1;

  // Throws ConfigError.
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean batch MSE, normalized units
  double val_rmse = 0.0;    // log S units
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_rmse = 0.0;
  double wall_seconds = 0.0;
  bool stopped_early = false;
};

// Record indices that reached each training stage, for leakage checks.
struct TrainAudit {
  std::set<std::size_t> gradient;
  std::set<std::size_t> scaler;
  std::set<std::size_t> validation;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainHistory history;
};

// Called after every epoch; return false to stop.
using EpochCallback = std::function<bool(const EpochRecord &)>;

// Adam on the MSE of scaler-normalized labels with per-epoch seeded shuffles
// and early stopping on validation RMSE. Returns the best-epoch weights.
// Indices refer to `data.records`.
TrainResult train_one(const TrainConfig &config, const Dataset &data,
                      std::span<const std::size_t> train,
                      std::span<const std::size_t> validation,
                      TrainAudit *audit = nullptr,
                      const EpochCallback &on_epoch = {});

// Splits `indices` into (train, validation) with a seeded shuffle; the
// validation part holds round(fraction * n) records, at least one.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
holdout_split(std::span<const std::size_t> indices, double fraction,
              std::uint64_t seed);

struct FoldResult {
  std::size_t fold = 0;
  Metrics metrics;
  TrainHistory history;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::vector<std::size_t> test;
  std::vector<double> predictions;  // log S, aligned with `test`
  TrainAudit audit;
};

struct CvResult {
  std::vector<FoldResult> folds;
  // Mean and sample standard deviation of the per-fold metrics. R² folds that
  // are undefined are skipped; NaN when none is defined.
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  double mean_r2 = 0.0;
  double std_r2 = 0.0;
};

struct CvOptions {
  // Folds to run; empty means all.
  std::vector<std::size_t> folds;
  std::size_t workers = 1;
};

CvResult cross_validate(const TrainConfig &config, const Dataset &data,
                        const FoldPlan &plan, const CvOptions &options = {});

void write_cv_report(std::ostream &os, const CvResult &result);
void write_history(std::ostream &os, const TrainHistory &history);

struct Histogram {
  double bin_width = 0.25;
  double start = 0.0;
  std::vector<std::size_t> counts;
};

// Bins aligned to multiples of the width, covering [min, max].
Histogram error_histogram(std::span<const double> errors, double bin_width = 0.25);

struct Evaluation {
  Metrics metrics;
  std::vector<double> y;
  std::vector<double> yhat;
  double mean_error = 0.0;  // mean of yhat - y
  Histogram histogram;
};

Evaluation evaluate(const Checkpoint &checkpoint, const Dataset &data);

// smiles,y,yhat,error
void write_predictions(std::ostream &os, const Dataset &data,
                       const Evaluation &evaluation);
// bin_start,bin_end,count
void write_histogram(std::ostream &os, const Histogram &histogram);
// r2,rmse,n,mean_error
void write_metrics(std::ostream &os, const Evaluation &evaluation);

}  // namespace solgraph
