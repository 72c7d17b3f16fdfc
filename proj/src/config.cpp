//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/config.hpp"

#include <cctype>
#include <charconv>

namespace solgraph {

namespace {

enum class Kind { kInt, kUint, kDouble, kList, kText };

struct KeySpec {
  std::string_view key;
  Kind kind;
  std::string_view default_value;
};

// Defaults mirror ModelConfig, TrainConfig and LocalOptions.
constexpr KeySpec kSchema[] = {
    {"cv.folds", Kind::kList, ""},
    {"cv.k", Kind::kUint, "10"},
    {"data.inchikey_column", Kind::kText, ""},
    {"data.label_column", Kind::kText, ""},
    {"data.smiles_column", Kind::kText, ""},
    {"local.kernel_width", Kind::kDouble, "0.25"},
    {"local.ridge", Kind::kDouble, "0.001"},
    {"local.samples", Kind::kUint, "500"},
    {"local.top_k", Kind::kUint, "15"},
    {"model.depth", Kind::kInt, "6"},
    {"model.dropout", Kind::kDouble, "0.2519"},
    {"model.heads", Kind::kInt, "8"},
    {"model.hidden_dim", Kind::kInt, "128"},
    {"model.lstm_hidden", Kind::kInt, "0"},
    {"model.mlp_dim", Kind::kInt, "256"},
    {"search.folds", Kind::kList, "0,1,2"},
    {"search.trials", Kind::kUint, "200"},
    {"seed", Kind::kUint, "0"},
    {"train.batch_size", Kind::kUint, "32"},
    {"train.epochs", Kind::kInt, "300"},
    {"train.lr", Kind::kDouble, "0.0005"},
    {"train.patience", Kind::kInt, "30"},
    {"train.val_fraction", Kind::kDouble, "0.1"},
    {"workers", Kind::kUint, "1"},
};

const KeySpec *find_spec(std::string_view key) {
  for (const KeySpec &s : kSchema) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

template <typename N>
bool parse_exact(std::string_view s, N &out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_value(Kind kind, std::string_view v) {
  switch (kind) {
    case Kind::kInt: {
      std::int64_t x = 0;
      return parse_exact(v, x);
    }
    case Kind::kUint: {
      std::uint64_t x = 0;
      return parse_exact(v, x);
    }
    case Kind::kDouble: {
      double x = 0;
      return parse_exact(v, x);
    }
    case Kind::kList: {
      if (v.empty()) return true;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = v.find(',', start);
        std::size_t x = 0;
        if (!parse_exact(trim(v.substr(start, comma - start)), x)) return false;
        if (comma == std::string_view::npos) return true;
        start = comma + 1;
      }
    }
    case Kind::kText:
      return true;
  }
  return false;
}

}  // namespace

RunConfig::RunConfig() {
  for (const KeySpec &s : kSchema) {
    values_.emplace(std::string(s.key), std::string(s.default_value));
  }
}

const std::vector<std::string> &RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const KeySpec &s : kSchema) out.emplace_back(s.key);
    return out;
  }();
  return k;
}

void RunConfig::set(const std::string &key, const std::string &value) {
  const KeySpec *spec = find_spec(key);
  if (spec == nullptr) throw ConfigError("unknown config key '" + key + "'");
  const std::string v(trim(value));
  if (!valid_value(spec->kind, v)) {
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
  values_[key] = v;
}

void RunConfig::merge_text(std::string_view text, const std::string &origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    try {
      set(std::string(trim(line.substr(0, eq))), std::string(line.substr(eq + 1)));
    } catch (const ConfigError &e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

const std::string &RunConfig::get(const std::string &key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string &key) const {
  std::int64_t v = 0;
  if (!parse_exact(get(key), v)) throw ConfigError(key + " is not an integer");
  return v;
}

std::uint64_t RunConfig::get_uint(const std::string &key) const {
  std::uint64_t v = 0;
  if (!parse_exact(get(key), v)) throw ConfigError(key + " is not a non-negative integer");
  return v;
}

double RunConfig::get_double(const std::string &key) const {
  double v = 0;
  if (!parse_exact(get(key), v)) throw ConfigError(key + " is not a number");
  return v;
}

std::vector<std::size_t> RunConfig::get_list(const std::string &key) const {
  const std::string &v = get(key);
  std::vector<std::size_t> out;
  if (v.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = v.find(',', start);
    std::size_t x = 0;
    if (!parse_exact(trim(std::string_view(v).substr(start, comma - start)), x)) {
      throw ConfigError(key + " is not an index list");
    }
    out.push_back(x);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto &[k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

TrainConfig train_config(const RunConfig &config) {
  TrainConfig t;
  t.model.hidden_dim = static_cast<int>(config.get_int("model.hidden_dim"));
  t.model.depth = static_cast<int>(config.get_int("model.depth"));
  t.model.heads = static_cast<int>(config.get_int("model.heads"));
  t.model.mlp_dim = static_cast<int>(config.get_int("model.mlp_dim"));
  t.model.dropout = config.get_double("model.dropout");
  t.model.lstm_hidden = static_cast<int>(config.get_int("model.lstm_hidden"));
  t.model.seed = config.get_uint("seed");
  t.seed = config.get_uint("seed");
  t.lr = config.get_double("train.lr");
  t.batch_size = config.get_uint("train.batch_size");
  t.epochs = static_cast<int>(config.get_int("train.epochs"));
  t.patience = static_cast<int>(config.get_int("train.patience"));
  t.val_fraction = config.get_double("train.val_fraction");
  t.validate();
  return t;
}

LocalOptions local_options(const RunConfig &config) {
  LocalOptions o;
  o.n_samples = config.get_uint("local.samples");
  o.top_k = config.get_uint("local.top_k");
  o.kernel_width = config.get_double("local.kernel_width");
  o.ridge = config.get_double("local.ridge");
  o.seed = config.get_uint("seed");
  return o;
}

ColumnNames column_names(const RunConfig &config) {
  return {config.get("data.smiles_column"), config.get("data.inchikey_column"),
          config.get("data.label_column")};
}

}  // namespace solgraph
