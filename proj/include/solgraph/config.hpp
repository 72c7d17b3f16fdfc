//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "solgraph/interpret.hpp"
#include "solgraph/model.hpp"
#include "solgraph/train.hpp"

namespace solgraph {

// Flat key=value settings layered as defaults <- config file <- flags.
// Only keys from the built-in schema are accepted.
class RunConfig {
public:
  RunConfig();

  // Throws ConfigError for an unknown key or a value of the wrong type.
  void set(const std::string &key, const std::string &value);
  // Lines of `key=value`; blank lines and lines starting with '#' are skipped.
  void merge_text(std::string_view text, const std::string &origin);

  const std::string &get(const std::string &key) const;
  std::int64_t get_int(const std::string &key) const;
  std::uint64_t get_uint(const std::string &key) const;
  double get_double(const std::string &key) const;
  // Comma-separated non-negative integers; empty string gives an empty list.
  std::vector<std::size_t> get_list(const std::string &key) const;

  // Sorted `key=value` lines, loadable by merge_text.
  std::string resolved() const;

  static const std::vector<std::string> &keys();

private:
  std::map<std::string, std::string> values_;
};

TrainConfig train_config(const RunConfig &config);
LocalOptions local_options(const RunConfig &config);
ColumnNames column_names(const RunConfig &config);

}  // namespace solgraph
