//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include <istream>
#include <ostream>

#include "solgraph/featurize.hpp"
#include "solgraph/io.hpp"

namespace solgraph {

void write_feature_container(std::ostream &os,
                             const std::vector<MoleculeGraph> &graphs) {
  io::write_line(os, kFeatureMagic);
  io::write_u32(os, static_cast<std::uint32_t>(graphs.size()));
  for (const MoleculeGraph &g : graphs) {
    io::write_u32(os, static_cast<std::uint32_t>(g.source_smiles.size()));
    os.write(g.source_smiles.data(),
             static_cast<std::streamsize>(g.source_smiles.size()));
    io::write_u8(os, g.label ? 1 : 0);
    io::write_f64(os, g.label ? *g.label : 0.0);
    io::write_u32(os, static_cast<std::uint32_t>(g.num_atoms));
    io::write_u32(os, static_cast<std::uint32_t>(g.num_edges() / 2));
    for (float v : g.node_features) io::write_f32(os, v);
    for (std::int32_t v : g.edge_src) io::write_i32(os, v);
    for (std::int32_t v : g.edge_dst) io::write_i32(os, v);
    for (float v : g.edge_features) io::write_f32(os, v);
  }
}

std::vector<MoleculeGraph> read_feature_container(std::istream &is) {
  if (io::read_line(is) != kFeatureMagic) {
    throw FormatError("not a SOLGRAPH-FEAT v1 container");
  }
  const std::uint32_t count = io::read_u32(is);
  std::vector<MoleculeGraph> graphs;
  graphs.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    MoleculeGraph g;
    const std::uint32_t len = io::read_u32(is);
    g.source_smiles.resize(len);
    is.read(g.source_smiles.data(), len);
    if (static_cast<std::uint32_t>(is.gcount()) != len) {
      throw FormatError("truncated SMILES field");
    }
    const bool has_label = io::read_u8(is) != 0;
    const double label = io::read_f64(is);
    if (has_label) g.label = label;
    g.num_atoms = static_cast<int>(io::read_u32(is));
    const std::uint32_t bonds = io::read_u32(is);
    g.node_features.resize(static_cast<std::size_t>(g.num_atoms) *
                           node_layout::kWidth);
    for (float &v : g.node_features) v = io::read_f32(is);
    g.edge_src.resize(2 * bonds);
    g.edge_dst.resize(2 * bonds);
    for (auto &v : g.edge_src) v = io::read_i32(is);
    for (auto &v : g.edge_dst) v = io::read_i32(is);
    g.edge_features.resize(2 * static_cast<std::size_t>(bonds) *
                           edge_layout::kWidth);
    for (float &v : g.edge_features) v = io::read_f32(is);
    graphs.push_back(std::move(g));
  }
  return graphs;
}

void write_node_csv(std::ostream &os, const std::vector<MoleculeGraph> &graphs) {
  os << "molecule,atom";
  for (int c = 0; c < node_layout::kWidth; ++c) os << ",f" << c;
  os << '\n';
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    const MoleculeGraph &g = graphs[m];
    for (int a = 0; a < g.num_atoms; ++a) {
      os << m << ',' << a;
      for (int c = 0; c < node_layout::kWidth; ++c) {
        os << ',' << io::format_float(g.node(a, c));
      }
      os << '\n';
    }
  }
}

void write_edge_csv(std::ostream &os, const std::vector<MoleculeGraph> &graphs) {
  os << "molecule,edge,src,dst";
  for (int c = 0; c < edge_layout::kWidth; ++c) os << ",e" << c;
  os << '\n';
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    const MoleculeGraph &g = graphs[m];
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      os << m << ',' << e << ',' << g.edge_src[e] << ',' << g.edge_dst[e];
      for (int c = 0; c < edge_layout::kWidth; ++c) {
        os << ','
           << io::format_float(g.edge_features[e * edge_layout::kWidth + c]);
      }
      os << '\n';
    }
  }
}

}  // namespace solgraph
