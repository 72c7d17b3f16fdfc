//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/search.hpp"

#include <cmath>
#include <mutex>

#include "solgraph/io.hpp"
#include "solgraph/parallel.hpp"

namespace solgraph {

double quniform(CounterRng &rng, double low, double high, double step) {
  return std::round(rng.uniform(low, high) / step) * step;
}

TrainConfig sample_config(const SearchSpace &space, const TrainConfig &base,
                          CounterRng &rng) {
  TrainConfig c = base;
  c.lr = rng.uniform(space.lr_low, space.lr_high);
  c.model.dropout = rng.uniform(space.dropout_low, space.dropout_high);
  c.model.depth = space.depths[rng.below(space.depths.size())];
  c.batch_size = static_cast<std::size_t>(
      quniform(rng, space.batch_low, space.batch_high, space.batch_step));
  do {
    c.model.hidden_dim = static_cast<int>(
        quniform(rng, space.dim_low, space.dim_high, space.dim_step));
    c.model.heads = space.heads[rng.below(space.heads.size())];
  } while (c.model.hidden_dim % c.model.heads != 0);
  return c;
}

SearchResult search_hparams(const SearchSpace &space, const TrainConfig &base,
                            const Dataset &data, const FoldPlan &plan,
                            const SearchOptions &options,
                            const std::function<void(const Trial &)> &on_trial) {
  SearchResult out;
  out.trials.resize(options.trials);
  const CounterRng root(options.seed, 0x736561726368ULL);
  for (std::size_t t = 0; t < options.trials; ++t) {
    CounterRng rng = root.split(t);
    out.trials[t].index = t;
    out.trials[t].config = sample_config(space, base, rng);
  }
  std::mutex log_mu;
  CvOptions cv;
  cv.folds = options.folds;
  parallel_for(options.trials, options.workers, [&](std::size_t t) {
    Trial &trial = out.trials[t];
    try {
      trial.result = cross_validate(trial.config, data, plan, cv);
    } catch (const std::exception &e) {
      trial.error = e.what();
    }
    if (on_trial) {
      std::lock_guard lock(log_mu);
      on_trial(trial);
    }
  });
  for (const Trial &trial : out.trials) {
    if (!trial.result || !std::isfinite(trial.result->mean_rmse)) continue;
    if (!out.best || trial.result->mean_rmse <
                         out.trials[*out.best].result->mean_rmse) {
      out.best = trial.index;
    }
  }
  return out;
}

std::string trial_log_header() {
  return "trial,lr,dim,dropout,depth,heads,batch_size,mean_rmse,std_rmse,"
         "mean_r2,std_r2,status";
}

std::string trial_log_row(const Trial &trial) {
  const TrainConfig &c = trial.config;
  std::string row = std::to_string(trial.index) + ',' + io::format_double(c.lr) +
                    ',' + std::to_string(c.model.hidden_dim) + ',' +
                    io::format_double(c.model.dropout) + ',' +
                    std::to_string(c.model.depth) + ',' +
                    std::to_string(c.model.heads) + ',' +
                    std::to_string(c.batch_size) + ',';
  if (trial.result) {
    row += io::format_double(trial.result->mean_rmse) + ',' +
           io::format_double(trial.result->std_rmse) + ',' +
           io::format_double(trial.result->mean_r2) + ',' +
           io::format_double(trial.result->std_r2) + ",ok";
  } else {
    row += ",,,," + io::csv_escape("failed: " + trial.error);
  }
  return row;
}

}  // namespace solgraph
