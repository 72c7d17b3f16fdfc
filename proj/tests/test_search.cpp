//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "solgraph/search.hpp"
#include "support.hpp"

namespace solgraph {
namespace {

TEST(Search, QuniformOnGrid) {
  CounterRng rng(1);
  std::set<double> seen;
  for (int i = 0; i < 2000; ++i) {
    const double v = quniform(rng, 24, 72, 8);
    EXPECT_GE(v, 24.0);
    EXPECT_LE(v, 72.0);
    EXPECT_EQ(std::fmod(v, 8.0), 0.0);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7U);
}

TEST(Search, SampledConfigsWithinBounds) {
  const SearchSpace space;
  CounterRng rng(2);
  std::set<int> dims;
  for (int i = 0; i < 200; ++i) {
    const TrainConfig c = sample_config(space, TrainConfig{}, rng);
    EXPECT_GE(c.lr, 0.0003);
    EXPECT_LE(c.lr, 0.0007);
    EXPECT_GE(c.model.hidden_dim, 92);
    EXPECT_LE(c.model.hidden_dim, 128);
    EXPECT_EQ(c.model.hidden_dim % 2, 0);
    EXPECT_GE(c.model.dropout, 0.25);
    EXPECT_LE(c.model.dropout, 0.35);
    EXPECT_EQ(std::set<int>({2, 4, 6, 8, 12}).count(c.model.depth), 1U);
    EXPECT_EQ(std::set<int>({4, 8, 12, 16}).count(c.model.heads), 1U);
    EXPECT_GE(c.batch_size, 24U);
    EXPECT_LE(c.batch_size, 72U);
    EXPECT_EQ(c.batch_size % 8, 0U);
    EXPECT_NO_THROW(c.validate());
    dims.insert(c.model.hidden_dim);
  }
  EXPECT_GT(dims.size(), 5U);
}

TEST(Search, SingleTrialIsOneCrossValidation) {
  const Dataset d = testing::corpus25();
  const FoldPlan plan = kfold(d.size(), 5, 1);
  TrainConfig base;
  base.epochs = 1;
  SearchOptions opt;
  opt.trials = 1;
  opt.folds = {0, 1};
  opt.seed = 9;
  std::vector<std::string> rows;
  const SearchResult r = search_hparams(SearchSpace{}, base, d, plan, opt,
                                        [&](const Trial &t) { rows.push_back(trial_log_row(t)); });
  ASSERT_EQ(r.trials.size(), 1U);
  ASSERT_TRUE(r.trials[0].result.has_value());
  EXPECT_EQ(r.best, 0U);
  CvOptions cv;
  cv.folds = {0, 1};
  const CvResult direct = cross_validate(r.trials[0].config, d, plan, cv);
  EXPECT_EQ(direct.mean_rmse, r.trials[0].result->mean_rmse);
  ASSERT_EQ(rows.size(), 1U);
  const std::string header = trial_log_header();
  EXPECT_EQ(std::count(rows[0].begin(), rows[0].end(), ','),
            std::count(header.begin(), header.end(), ','));
}

TEST(Search, FailedTrialRecorded) {
  const Dataset d = testing::corpus25();
  const FoldPlan plan = kfold(d.size(), 5, 1);
  TrainConfig base;
  base.epochs = 1;
  base.val_fraction = -1.0;  // rejected by validation inside each trial
  SearchOptions opt;
  opt.trials = 1;
  const SearchResult r = search_hparams(SearchSpace{}, base, d, plan, opt);
  EXPECT_FALSE(r.trials[0].result.has_value());
  EXPECT_FALSE(r.trials[0].error.empty());
  EXPECT_FALSE(r.best.has_value());
}

}  // namespace
}  // namespace solgraph
