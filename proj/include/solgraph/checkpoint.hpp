//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "solgraph/data.hpp"
#include "solgraph/model.hpp"

namespace solgraph {

// A trained model: architecture, label scaler and float parameters.
struct Checkpoint {
  ModelConfig config;
  LabelScaler scaler;
  ModelParams<float> params;
};

inline constexpr std::string_view kCheckpointMagic = "SOLGRAPH-CKPT v1";

// Sorted key=value lines describing config and scaler.
std::string config_document(const Checkpoint &checkpoint);

// Layout (little-endian):
//   "SOLGRAPH-CKPT v1\n", u32 length + config document, u32 block count,
//   per block: u32 name length, name, u32 rank, u32 extents[rank],
//   f32 values; then u32 CRC-32 over every float byte in block order.
void write_checkpoint(std::ostream &os, const Checkpoint &checkpoint);
// Throws FormatError on a bad header, unknown block or checksum mismatch.
Checkpoint read_checkpoint(std::istream &is);

void save_checkpoint(const std::filesystem::path &path,
                     const Checkpoint &checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path &path);

// Eval-mode predictions in log S units.
std::vector<double> predict_log_s(const Checkpoint &checkpoint,
                                  const std::vector<MoleculeGraph> &graphs,
                                  std::size_t batch_size = 64);

}  // namespace solgraph
