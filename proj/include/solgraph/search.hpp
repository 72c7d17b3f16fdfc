//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "solgraph/data.hpp"
#include "solgraph/rng.hpp"
#include "solgraph/train.hpp"

namespace solgraph {

// The searched hyperparameters and their ranges.
struct SearchSpace {
  double lr_low = 0.0003, lr_high = 0.0007;               // uniform
  double dim_low = 92, dim_high = 128, dim_step = 2;       // quantized uniform
  double dropout_low = 0.25, dropout_high = 0.35;          // uniform
  std::vector<int> depths = {2, 4, 6, 8, 12};              // choice
  std::vector<int> heads = {4, 8, 12, 16};                 // choice
  double batch_low = 24, batch_high = 72, batch_step = 8;  // quantized uniform
};

// round(uniform(low, high) / step) * step.
double quniform(CounterRng &rng, double low, double high, double step);

// Draws one configuration on top of `base`. A (dim, heads) pair whose
// width does not divide evenly is redrawn.
TrainConfig sample_config(const SearchSpace &space, const TrainConfig &base,
                          CounterRng &rng);

struct Trial {
  std::size_t index = 0;
  TrainConfig config;
  std::optional<CvResult> result;  // empty when the trial failed
  std::string error;
};

struct SearchOptions {
  std::size_t trials = 200;
  std::vector<std::size_t> folds;  // empty means all folds of the plan
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

struct SearchResult {
  std::vector<Trial> trials;
  std::optional<std::size_t> best;  // lowest mean RMSE among finished trials
};

// Random search; trials run on the worker pool, each evaluated by cross
// validation on the chosen folds. `on_trial` is called under a lock as each
// trial finishes. Failed trials are recorded, never fatal.
SearchResult search_hparams(const SearchSpace &space, const TrainConfig &base,
                            const Dataset &data, const FoldPlan &plan,
                            const SearchOptions &options,
                            const std::function<void(const Trial &)> &on_trial = {});

// CSV header and row for the trial log.
std::string trial_log_header();
std::string trial_log_row(const Trial &trial);

}  // namespace solgraph
