//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "solgraph/data.hpp"
#include "support.hpp"

namespace solgraph {
namespace {

DataErrorKind kind_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const DataError &e) {
    return e.kind();
  }
  ADD_FAILURE() << "no DataError";
  return DataErrorKind::kIo;
}

TEST(Csv, ToyFile) {
  const Dataset d = parse_csv("smiles,logS\nCCO,1.1\nc1ccccc1,-1.64\nCC(=O)O,1.22\n", "toy");
  ASSERT_EQ(d.size(), 3U);
  EXPECT_EQ(d.records[1].smiles, "c1ccccc1");
  EXPECT_DOUBLE_EQ(d.records[1].log_s, -1.64);
  EXPECT_EQ(d.records[1].row, 2U);
  EXPECT_EQ(d.records[1].graph.label, -1.64);
  EXPECT_TRUE(d.rejects.empty());
}

TEST(Csv, MalformedSmilesRejected) {
  const Dataset d = parse_csv("SMILES,LogS\nCCO,1\nC1CC,2\nCCN,3\n", "bad");
  ASSERT_EQ(d.size(), 2U);
  ASSERT_EQ(d.rejects.size(), 1U);
  EXPECT_EQ(d.rejects[0].row, 2U);
  EXPECT_EQ(d.rejects[0].smiles, "C1CC");
  EXPECT_NE(d.rejects[0].reason.find("UnclosedRingBond"), std::string::npos);
  std::ostringstream os;
  write_rejects(os, d);
  EXPECT_NE(os.str().find("C1CC"), std::string::npos);
}

TEST(Csv, LabelProblemsRejected) {
  const Dataset d = parse_csv("smiles,y\nCCO,abc\nCCN,\nCCC,0.5\n", "labels");
  EXPECT_EQ(d.size(), 1U);
  EXPECT_EQ(d.rejects.size(), 2U);
}

TEST(Csv, DuplicateKeysKeepFirst) {
  const Dataset d = parse_csv(
      "InChIKey,SMILES,logS\nK1,CCO,1\nK2,CCN,2\nK1,OCC,3\n", "dups");
  ASSERT_EQ(d.size(), 2U);
  ASSERT_EQ(d.duplicates.size(), 1U);
  EXPECT_EQ(d.duplicates[0].row, 3U);
  EXPECT_EQ(d.duplicates[0].first_row, 1U);
  EXPECT_EQ(d.records[0].inchikey, "K1");
}

TEST(Csv, Errors) {
  EXPECT_EQ(kind_of([] { parse_csv("name,logS\nx,1\n", "a"); }), DataErrorKind::kMissingColumn);
  EXPECT_EQ(kind_of([] { parse_csv("smiles,foo\nC,1\n", "a"); }), DataErrorKind::kMissingColumn);
  EXPECT_EQ(kind_of([] { parse_csv("", "a"); }), DataErrorKind::kEmptyDataset);
  EXPECT_EQ(kind_of([] { parse_csv("smiles,logS\nC1,1\n", "a"); }), DataErrorKind::kEmptyDataset);
  EXPECT_EQ(kind_of([] { load_csv("/nonexistent/file.csv"); }), DataErrorKind::kIo);
}

TEST(Csv, ExplicitColumnNames) {
  const Dataset d = parse_csv("mol,target\nCCO,1\n", "named", ColumnNames{"mol", "", "target"});
  EXPECT_EQ(d.size(), 1U);
}

TEST(Csv, CorpusFixture) {
  const Dataset d = testing::corpus25();
  EXPECT_EQ(d.size(), 25U);
  EXPECT_TRUE(d.rejects.empty());
}

TEST(Scaler, Example) {
  const std::vector<double> y = {-2.0, -4.0};
  const LabelScaler s = LabelScaler::fit(y);
  EXPECT_DOUBLE_EQ(s.mean, -3.0);
  EXPECT_DOUBLE_EQ(s.std, 1.0);
  EXPECT_DOUBLE_EQ(s.apply(-2.0), 1.0);
  EXPECT_DOUBLE_EQ(s.apply(-4.0), -1.0);
}

TEST(Scaler, InvertApplyIdentity) {
  CounterRng rng(1);
  std::vector<double> y(100);
  for (double &v : y) v = rng.uniform(-8, 2);
  const LabelScaler s = LabelScaler::fit(y);
  for (double v : y) EXPECT_NEAR(s.invert(s.apply(v)), v, 1e-9);
}

TEST(Scaler, Degenerate) {
  const std::vector<double> one = {1.0};
  const std::vector<double> flat = {2.0, 2.0, 2.0};
  EXPECT_EQ(kind_of([&] { LabelScaler::fit(one); }), DataErrorKind::kDegenerateLabels);
  EXPECT_EQ(kind_of([&] { LabelScaler::fit(flat); }), DataErrorKind::kDegenerateLabels);
}

TEST(KFold, Singletons) {
  const FoldPlan p = kfold(10, 10, 3);
  ASSERT_EQ(p.num_folds(), 10U);
  for (const auto &f : p.folds) EXPECT_EQ(f.size(), 1U);
  EXPECT_NO_THROW(p.validate(10));
}

TEST(KFold, UnevenSizes) {
  const FoldPlan p = kfold(25, 10, 3);
  std::multiset<std::size_t> sizes;
  for (const auto &f : p.folds) sizes.insert(f.size());
  EXPECT_EQ(sizes.count(3), 5U);
  EXPECT_EQ(sizes.count(2), 5U);
}

TEST(KFold, DisjointCoverProperty) {
  for (std::size_t n : {10U, 11U, 37U, 200U, 1001U}) {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
      const FoldPlan p = kfold(n, 10, seed);
      std::vector<int> seen(n, 0);
      for (const auto &f : p.folds) {
        for (std::size_t i : f) ++seen[i];
      }
      for (int c : seen) EXPECT_EQ(c, 1);
      EXPECT_NO_THROW(p.validate(n));
      for (std::size_t k = 0; k < 10; ++k) {
        EXPECT_EQ(p.complement(k).size() + p.folds[k].size(), n);
      }
    }
  }
}

TEST(KFold, SeededDeterminism) {
  EXPECT_EQ(kfold(50, 10, 7).folds, kfold(50, 10, 7).folds);
  EXPECT_NE(kfold(50, 10, 7).folds, kfold(50, 10, 8).folds);
  EXPECT_EQ(kind_of([] { kfold(5, 10, 1); }), DataErrorKind::kTooFewRecords);
}

TEST(FoldPlanFile, RoundTripAndValidation) {
  const FoldPlan p = kfold(23, 5, 2);
  std::ostringstream os;
  write_fold_plan(os, p);
  EXPECT_EQ(parse_fold_plan(os.str(), 23).folds, p.folds);
  EXPECT_EQ(parse_fold_plan("0,0\n1,1\n2,0\n", 3).num_folds(), 2U);
  EXPECT_EQ(kind_of([] { parse_fold_plan("0,0\n0,1\n1,1\n", 2); }), DataErrorKind::kBadFoldPlan);
  EXPECT_EQ(kind_of([] { parse_fold_plan("0,0\n", 2); }), DataErrorKind::kBadFoldPlan);
  EXPECT_EQ(kind_of([] { parse_fold_plan("0,0\n5,1\n", 2); }), DataErrorKind::kBadFoldPlan);
}

TEST(Dataset, Subset) {
  const Dataset d = testing::corpus25();
  const std::vector<std::size_t> idx = {4, 0};
  const Dataset s = d.subset(idx);
  ASSERT_EQ(s.size(), 2U);
  EXPECT_EQ(s.records[0].smiles, d.records[4].smiles);
  EXPECT_EQ(s.labels(), (std::vector<double>{d.records[4].log_s, d.records[0].log_s}));
}

}  // namespace
}  // namespace solgraph
