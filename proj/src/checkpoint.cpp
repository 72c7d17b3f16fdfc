//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <zlib.h>

#include "solgraph/io.hpp"

namespace solgraph {

namespace {

std::map<std::string, std::string> config_entries(const Checkpoint &c) {
  return {
      {"model.depth", std::to_string(c.config.depth)},
      {"model.dropout", io::format_double(c.config.dropout)},
      {"model.heads", std::to_string(c.config.heads)},
      {"model.hidden_dim", std::to_string(c.config.hidden_dim)},
      {"model.in_dim", std::to_string(c.config.in_dim)},
      {"model.lstm_hidden", std::to_string(c.config.lstm_hidden)},
      {"model.mlp_dim", std::to_string(c.config.mlp_dim)},
      {"model.seed", std::to_string(c.config.seed)},
      {"scaler.mean", io::format_double(c.scaler.mean)},
      {"scaler.std", io::format_double(c.scaler.std)},
  };
}

template <typename N>
N parse_value(const std::map<std::string, std::string> &kv,
              const std::string &key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("checkpoint config lacks " + key);
  N v{};
  const std::string &s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("bad checkpoint value " + key + "=" + s);
  }
  return v;
}

}  // namespace

std::string config_document(const Checkpoint &checkpoint) {
  std::string doc;
  for (const auto &[k, v] : config_entries(checkpoint)) doc += k + "=" + v + "\n";
  return doc;
}

void write_checkpoint(std::ostream &os, const Checkpoint &checkpoint) {
  check_params(checkpoint.params, checkpoint.config);
  io::write_line(os, kCheckpointMagic);
  const std::string doc = config_document(checkpoint);
  io::write_u32(os, static_cast<std::uint32_t>(doc.size()));
  os.write(doc.data(), static_cast<std::streamsize>(doc.size()));
  std::uint32_t blocks = 0;
  checkpoint.params.visit([&](const std::string &, const ad::Tensor<float> &) { ++blocks; });
  io::write_u32(os, blocks);
  uLong crc = crc32(0L, Z_NULL, 0);
  checkpoint.params.visit([&](const std::string &name, const ad::Tensor<float> &t) {
    io::write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) io::write_u32(os, static_cast<std::uint32_t>(e));
    for (float v : t.values()) {
      const auto bytes = io::f32_bytes(v);
      os.write(reinterpret_cast<const char *>(bytes.data()), 4);
      crc = crc32(crc, bytes.data(), 4);
    }
  });
  io::write_u32(os, static_cast<std::uint32_t>(crc));
}

Checkpoint read_checkpoint(std::istream &is) {
  if (io::read_line(is) != kCheckpointMagic) {
    throw FormatError("not a SOLGRAPH-CKPT v1 file");
  }
  const std::uint32_t doc_len = io::read_u32(is);
  std::string doc(doc_len, '\0');
  is.read(doc.data(), doc_len);
  if (static_cast<std::uint32_t>(is.gcount()) != doc_len) {
    throw FormatError("truncated checkpoint config");
  }
  std::map<std::string, std::string> kv;
  std::istringstream lines(doc);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("bad config line " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  Checkpoint c;
  c.config.depth = parse_value<int>(kv, "model.depth");
  c.config.dropout = parse_value<double>(kv, "model.dropout");
  c.config.heads = parse_value<int>(kv, "model.heads");
  c.config.hidden_dim = parse_value<int>(kv, "model.hidden_dim");
  c.config.in_dim = parse_value<int>(kv, "model.in_dim");
  c.config.lstm_hidden = parse_value<int>(kv, "model.lstm_hidden");
  c.config.mlp_dim = parse_value<int>(kv, "model.mlp_dim");
  c.config.seed = parse_value<std::uint64_t>(kv, "model.seed");
  c.scaler.mean = parse_value<double>(kv, "scaler.mean");
  c.scaler.std = parse_value<double>(kv, "scaler.std");
  try {
    c.config.validate();
    c.params = zero_params<float>(c.config);
  } catch (const ConfigError &e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }

  std::uint32_t expected_blocks = 0;
  c.params.visit([&](const std::string &, ad::Tensor<float> &) { ++expected_blocks; });
  if (io::read_u32(is) != expected_blocks) {
    throw FormatError("checkpoint block count does not match its config");
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  c.params.visit([&](const std::string &name, ad::Tensor<float> &t) {
    const std::uint32_t len = io::read_u32(is);
    std::string got(len, '\0');
    is.read(got.data(), len);
    if (got != name) {
      throw FormatError("expected block " + name + ", found " + got);
    }
    const std::uint32_t rank = io::read_u32(is);
    ad::Shape shape(rank);
    for (auto &e : shape) e = io::read_u32(is);
    if (shape != t.shape()) {
      throw FormatError("block " + name + " has shape " + ad::shape_string(shape));
    }
    for (float &v : t.values()) {
      v = io::read_f32(is);
      const auto bytes = io::f32_bytes(v);
      crc = crc32(crc, bytes.data(), 4);
    }
  });
  if (io::read_u32(is) != static_cast<std::uint32_t>(crc)) {
    throw FormatError("checkpoint checksum mismatch");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path &path,
                     const Checkpoint &checkpoint) {
  io::atomic_write(
      path, [&](std::ostream &os) { write_checkpoint(os, checkpoint); }, true);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

std::vector<double> predict_log_s(const Checkpoint &checkpoint,
                                  const std::vector<MoleculeGraph> &graphs,
                                  std::size_t batch_size) {
  std::vector<double> z =
      predict_normalized(checkpoint.params, checkpoint.config, graphs, batch_size);
  for (double &v : z) v = checkpoint.scaler.invert(v);
  return z;
}

}  // namespace solgraph
