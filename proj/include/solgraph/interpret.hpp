//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "solgraph/checkpoint.hpp"
#include "solgraph/featurize.hpp"

namespace solgraph {

// Maps featurized molecules to one prediction each (log S).
using Predictor =
    std::function<std::vector<double>(const std::vector<MoleculeGraph> &)>;

// Holds a reference: the checkpoint must outlive the returned predictor.
Predictor checkpoint_predictor(const Checkpoint &checkpoint,
                               std::size_t batch_size = 64);

// Contiguous node-feature column range [begin, end).
struct FeatureGroup {
  std::string name;
  int begin = 0;
  int end = 0;
};

// Symbol, Degree, FormalCharge, Electrons, Hybridization, Aromatic,
// Hydrogen, Chirality, ChiralityType; disjoint, covering all 92 columns.
const std::vector<FeatureGroup> &feature_groups();

struct ImportanceEntry {
  std::string feature;
  double score = 0.0;
  std::string method;   // MAPD or LOCAL
  std::string section;  // "group" or "symbol"
};

struct ImportanceReport {
  std::string dataset;
  std::string checkpoint;
  std::uint64_t seed = 0;
  // Non-symbol groups by descending score, then the Symbol group score and
  // each element column that occurs in the data.
  std::vector<ImportanceEntry> entries;
  std::vector<double> column_mapd;  // per node-feature column
};

// Zeroes each node-feature column in turn across every atom of every
// molecule and averages |prediction change| over molecules; a group scores
// the mean over its columns.
ImportanceReport zeroing_importance(const Predictor &predictor,
                                    const std::vector<MoleculeGraph> &graphs);

class DegenerateSamples : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A molecule-level condition that can be switched off.
struct Condition {
  std::string name;
  // Node-feature cells zeroed when the condition is off: (atom, column).
  std::vector<std::pair<int, int>> cells;
};

// Element presence, aromaticity, each degree / H count / nonzero charge
// value, each hybridization, chirality and radicals, as present in `graph`.
std::vector<Condition> interpretable_conditions(const MoleculeGraph &graph);

struct LocalOptions {
  std::size_t n_samples = 500;
  std::size_t top_k = 15;
  double kernel_width = 0.25;
  double ridge = 1e-3;
  std::uint64_t seed = 0;
};

struct LocalEntry {
  std::string condition;
  double coefficient = 0.0;
};

struct LocalExplanation {
  double prediction = 0.0;
  double intercept = 0.0;
  std::vector<LocalEntry> coefficients;  // every condition, input order
  std::vector<LocalEntry> top;           // top_k by |coefficient|
};

// Throws std::invalid_argument when n_samples < 50 and DegenerateSamples
// when every perturbation is identical.
LocalExplanation local_explain(const Predictor &predictor,
                               const MoleculeGraph &graph,
                               const LocalOptions &options = {});

// feature,score,sign,method,section
void write_importance(std::ostream &os, const ImportanceReport &report);
// feature,score,sign
void write_local(std::ostream &os, const LocalExplanation &explanation);
// feature,signed_score (horizontal bar data)
void write_bar_data(std::ostream &os, const std::vector<LocalEntry> &entries);

}  // namespace solgraph
