//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "solgraph/smiles.hpp"

namespace solgraph {

// Node feature layout (92 columns):
//   [0, 66)   element one-hot
//   [66, 74)  heavy-atom degree one-hot, clamped at 7
//   74        formal charge (raw)
//   75        radical electrons (raw)
//   [76, 83)  hybridization one-hot
//   83        aromatic flag
//   [84, 89)  attached-hydrogen one-hot, clamped at 4
//   89        chiral flag
//   [90, 92)  parity one-hot (CCW, CW)
namespace node_layout {
inline constexpr int kElement = 0;
inline constexpr int kDegree = 66;
inline constexpr int kNumDegrees = 8;
inline constexpr int kFormalCharge = 74;
inline constexpr int kRadicals = 75;
inline constexpr int kHybridization = 76;
inline constexpr int kAromatic = 83;
inline constexpr int kHydrogens = 84;
inline constexpr int kNumHydrogens = 5;
inline constexpr int kChiral = 89;
inline constexpr int kParity = 90;
inline constexpr int kWidth = 92;
}  // namespace node_layout

// Edge feature layout (10 columns):
//   [0, 4)  bond type one-hot (single, double, triple, aromatic)
//   4       conjugated
//   5       in ring
//   [6, 10) stereo one-hot (none, any, Z, E)
namespace edge_layout {
inline constexpr int kType = 0;
inline constexpr int kConjugated = 4;
inline constexpr int kInRing = 5;
inline constexpr int kStereo = 6;
inline constexpr int kWidth = 10;
}  // namespace edge_layout

struct MoleculeGraph {
  int num_atoms = 0;
  std::vector<float> node_features;  // num_atoms x 92, row-major
  // Directed edges; bond k occupies columns 2k (begin->end) and 2k+1.
  std::vector<std::int32_t> edge_src;
  std::vector<std::int32_t> edge_dst;
  std::vector<float> edge_features;  // num_edges x 10, row-major
  std::string source_smiles;
  std::optional<double> label;

  std::size_t num_edges() const { return edge_src.size(); }
  float node(int atom, int column) const {
    return node_features[static_cast<std::size_t>(atom) * node_layout::kWidth +
                         column];
  }
  bool operator==(const MoleculeGraph &) const = default;
};

std::array<float, node_layout::kWidth> atom_features(const Atom &atom);
std::array<float, edge_layout::kWidth> bond_features(const Bond &bond);

MoleculeGraph build_graph(const Molecule &molecule,
                          std::optional<double> label = std::nullopt,
                          std::string source_smiles = {});

// parse + build_graph.
MoleculeGraph featurize_smiles(const std::string &smiles,
                               std::optional<double> label = std::nullopt);

// Binary container: the text line "SOLGRAPH-FEAT v1", then a u32 record
// count, then per record (all little-endian):
//   u32 smiles length, smiles bytes, u8 has_label, f64 label,
//   u32 N, u32 E (undirected bonds),
//   f32[N*92] node features, i32[2E] sources, i32[2E] targets,
//   f32[2E*10] edge features.
inline constexpr std::string_view kFeatureMagic = "SOLGRAPH-FEAT v1";

void write_feature_container(std::ostream &os,
                             const std::vector<MoleculeGraph> &graphs);
std::vector<MoleculeGraph> read_feature_container(std::istream &is);

// Audit exports: one CSV row per atom / per directed edge.
void write_node_csv(std::ostream &os, const std::vector<MoleculeGraph> &graphs);
void write_edge_csv(std::ostream &os, const std::vector<MoleculeGraph> &graphs);

}  // namespace solgraph
