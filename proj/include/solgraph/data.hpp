//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "solgraph/featurize.hpp"

namespace solgraph {

enum class DataErrorKind {
  kMissingColumn,
  kEmptyDataset,
  kDegenerateLabels,
  kTooFewRecords,
  kBadFoldPlan,
  kIo,
};

class DataError : public std::runtime_error {
public:
  DataError(DataErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  DataErrorKind kind() const { return kind_; }

private:
  DataErrorKind kind_;
};

struct Record {
  std::string smiles;
  std::string inchikey;  // empty when the file has no such column
  double log_s = 0.0;
  std::size_t row = 0;   // 1-based data row in the source file
  MoleculeGraph graph;
};

struct Reject {
  std::size_t row = 0;
  std::string smiles;
  std::string reason;
};

struct Duplicate {
  std::size_t row = 0;
  std::size_t first_row = 0;
  std::string inchikey;
};

struct Dataset {
  std::string name;
  std::vector<Record> records;
  std::vector<Reject> rejects;
  std::vector<Duplicate> duplicates;

  std::size_t size() const { return records.size(); }
  std::vector<double> labels() const;
  std::vector<MoleculeGraph> graphs() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

// Header names are matched case-insensitively. Empty fields fall back to the
// built-in aliases ("smiles"; "inchikey"; "logs", "log s", "log_s",
// "solubility", "label", "y").
struct ColumnNames {
  std::string smiles;
  std::string inchikey;
  std::string label;
};

// Rows with missing fields, unparseable labels or rejected SMILES go to
// `rejects`; repeated InChIKeys keep the first row and are listed in
// `duplicates`. Throws DataError (MissingColumn, EmptyDataset).
Dataset parse_csv(std::string_view text, std::string name,
                  const ColumnNames &columns = {});
Dataset load_csv(const std::filesystem::path &path,
                 const ColumnNames &columns = {});

// CSV of (row, smiles, reason).
void write_rejects(std::ostream &os, const Dataset &dataset);

// z-score with population standard deviation.
struct LabelScaler {
  double mean = 0.0;
  double std = 1.0;

  // Throws DataError (DegenerateLabels) on fewer than two labels or zero
  // variance.
  static LabelScaler fit(std::span<const double> labels);
  double apply(double x) const { return (x - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;

  std::size_t num_folds() const { return folds.size(); }
  std::size_t num_records() const;
  // Indices of every fold except `fold`, ascending.
  std::vector<std::size_t> complement(std::size_t fold) const;
  // Throws DataError (BadFoldPlan) unless the folds are a disjoint cover of
  // [0, n).
  void validate(std::size_t n) const;
};

// Seeded shuffle, then round-robin assignment. Throws TooFewRecords when
// n < k.
FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed);

// Lines of `index,fold`; an optional header line is skipped.
FoldPlan load_fold_plan(const std::filesystem::path &path, std::size_t n);
FoldPlan parse_fold_plan(std::string_view text, std::size_t n);
void write_fold_plan(std::ostream &os, const FoldPlan &plan);

}  // namespace solgraph
