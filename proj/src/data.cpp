//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "solgraph/io.hpp"
#include "solgraph/rng.hpp"

namespace solgraph {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<std::size_t> find_column(const std::vector<std::string> &header,
                                       const std::string &wanted,
                                       std::initializer_list<std::string_view> aliases) {
  std::vector<std::string> names;
  if (!wanted.empty()) {
    names.push_back(lower(wanted));
  } else {
    for (std::string_view a : aliases) names.emplace_back(a);
  }
  for (const std::string &name : names) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(trim(header[i])) == name) return i;
    }
  }
  return std::nullopt;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::vector<double> Dataset::labels() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const Record &r : records) out.push_back(r.log_s);
  return out;
}

std::vector<MoleculeGraph> Dataset::graphs() const {
  std::vector<MoleculeGraph> out;
  out.reserve(records.size());
  for (const Record &r : records) out.push_back(r.graph);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(records.at(i));
  return out;
}

Dataset parse_csv(std::string_view text, std::string name,
                  const ColumnNames &columns) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  const std::vector<std::string_view> lines = split_lines(text);
  if (lines.empty()) {
    throw DataError(DataErrorKind::kEmptyDataset, "EmptyDataset: " + name);
  }
  const std::vector<std::string> header = io::split_csv_line(lines.front());
  const auto smiles_col = find_column(header, columns.smiles, {"smiles"});
  const auto key_col =
      find_column(header, columns.inchikey, {"inchikey", "inchi_key"});
  const auto label_col = find_column(
      header, columns.label,
      {"logs", "log s", "log_s", "logs (mol/l)", "solubility", "label", "y"});
  if (!smiles_col) {
    throw DataError(DataErrorKind::kMissingColumn,
                    "MissingColumn: no SMILES column in " + name);
  }
  if (!label_col) {
    throw DataError(DataErrorKind::kMissingColumn,
                    "MissingColumn: no logS column in " + name);
  }
  if (!columns.inchikey.empty() && !key_col) {
    throw DataError(DataErrorKind::kMissingColumn,
                    "MissingColumn: no column named " + columns.inchikey);
  }

  Dataset ds;
  ds.name = std::move(name);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const std::size_t row = li;
    const std::vector<std::string> fields = io::split_csv_line(lines[li]);
    auto field = [&](std::size_t c) -> std::string {
      return c < fields.size() ? std::string(trim(fields[c])) : std::string();
    };
    const std::string smiles = field(*smiles_col);
    const std::string label_text = field(*label_col);
    const std::string key = key_col ? field(*key_col) : std::string();
    if (smiles.empty() || label_text.empty()) {
      ds.rejects.push_back({row, smiles, "missing field"});
      continue;
    }
    const std::optional<double> label = parse_number(label_text);
    if (!label || !std::isfinite(*label)) {
      ds.rejects.push_back({row, smiles, "unparseable label '" + label_text + "'"});
      continue;
    }
    if (!key.empty()) {
      const auto it = seen.find(key);
      if (it != seen.end()) {
        ds.duplicates.push_back({row, it->second, key});
        continue;
      }
    }
    Record rec;
    try {
      rec.graph = featurize_smiles(smiles, *label);
    } catch (const std::exception &e) {
      ds.rejects.push_back({row, smiles, e.what()});
      continue;
    }
    if (!key.empty()) seen.emplace(key, row);
    rec.smiles = smiles;
    rec.inchikey = key;
    rec.log_s = *label;
    rec.row = row;
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) {
    throw DataError(DataErrorKind::kEmptyDataset,
                    "EmptyDataset: no usable records in " + ds.name + " (" +
                        std::to_string(ds.rejects.size()) + " rejects)");
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path &path, const ColumnNames &columns) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception &e) {
    throw DataError(DataErrorKind::kIo, e.what());
  }
  return parse_csv(text, path.filename().string(), columns);
}

void write_rejects(std::ostream &os, const Dataset &dataset) {
  os << "row,smiles,reason\n";
  for (const Reject &r : dataset.rejects) {
    os << r.row << ',' << io::csv_escape(r.smiles) << ','
       << io::csv_escape(r.reason) << '\n';
  }
  for (const Duplicate &d : dataset.duplicates) {
    os << d.row << ",," << io::csv_escape("duplicate InChIKey " + d.inchikey +
                                          " (first at row " +
                                          std::to_string(d.first_row) + ")")
       << '\n';
  }
}

LabelScaler LabelScaler::fit(std::span<const double> labels) {
  if (labels.size() < 2) {
    throw DataError(DataErrorKind::kDegenerateLabels,
                    "DegenerateLabels: need at least two labels");
  }
  const double n = static_cast<double>(labels.size());
  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : labels) ss += (y - mean) * (y - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) {
    throw DataError(DataErrorKind::kDegenerateLabels,
                    "DegenerateLabels: labels have zero variance");
  }
  return LabelScaler{mean, sd};
}

std::size_t FoldPlan::num_records() const {
  std::size_t n = 0;
  for (const auto &f : folds) n += f.size();
  return n;
}

std::vector<std::size_t> FoldPlan::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != fold) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void FoldPlan::validate(std::size_t n) const {
  std::vector<int> hits(n, 0);
  for (const auto &f : folds) {
    if (f.empty()) throw DataError(DataErrorKind::kBadFoldPlan, "empty fold");
    for (std::size_t i : f) {
      if (i >= n) {
        throw DataError(DataErrorKind::kBadFoldPlan,
                        "fold index " + std::to_string(i) + " out of range");
      }
      if (++hits[i] > 1) {
        throw DataError(DataErrorKind::kBadFoldPlan,
                        "index " + std::to_string(i) + " in two folds");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (hits[i] == 0) {
      throw DataError(DataErrorKind::kBadFoldPlan,
                      "index " + std::to_string(i) + " in no fold");
    }
  }
}

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || n < k) {
    throw DataError(DataErrorKind::kTooFewRecords,
                    "TooFewRecords: " + std::to_string(n) + " records for " +
                        std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, 0x6b666f6c64ULL);
  shuffle(order, rng);
  FoldPlan plan;
  plan.folds.resize(k);
  for (std::size_t i = 0; i < n; ++i) plan.folds[i % k].push_back(order[i]);
  for (auto &f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

FoldPlan parse_fold_plan(std::string_view text, std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t max_fold = 0;
  bool first = true;
  for (std::string_view line : split_lines(text)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = io::split_csv_line(line);
    std::optional<double> idx = f.size() == 2 ? parse_number(f[0]) : std::nullopt;
    std::optional<double> fold = f.size() == 2 ? parse_number(f[1]) : std::nullopt;
    if (!idx || !fold) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw DataError(DataErrorKind::kBadFoldPlan,
                      "bad fold plan line '" + std::string(line) + "'");
    }
    first = false;
    if (*idx < 0 || *fold < 0 || *idx != std::floor(*idx) ||
        *fold != std::floor(*fold)) {
      throw DataError(DataErrorKind::kBadFoldPlan,
                      "fold plan entries must be non-negative integers");
    }
    const auto i = static_cast<std::size_t>(*idx);
    const auto k = static_cast<std::size_t>(*fold);
    pairs.emplace_back(i, k);
    max_fold = std::max(max_fold, k);
  }
  if (pairs.empty()) throw DataError(DataErrorKind::kBadFoldPlan, "empty fold plan");
  FoldPlan plan;
  plan.folds.resize(max_fold + 1);
  for (const auto &[i, k] : pairs) plan.folds[k].push_back(i);
  for (auto &f : plan.folds) std::sort(f.begin(), f.end());
  plan.validate(n);
  return plan;
}

FoldPlan load_fold_plan(const std::filesystem::path &path, std::size_t n) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception &e) {
    throw DataError(DataErrorKind::kIo, e.what());
  }
  return parse_fold_plan(text, n);
}

void write_fold_plan(std::ostream &os, const FoldPlan &plan) {
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (std::size_t k = 0; k < plan.folds.size(); ++k) {
    for (std::size_t i : plan.folds[k]) rows.emplace_back(i, k);
  }
  std::sort(rows.begin(), rows.end());
  os << "index,fold\n";
  for (const auto &[i, k] : rows) os << i << ',' << k << '\n';
}

}  // namespace solgraph
