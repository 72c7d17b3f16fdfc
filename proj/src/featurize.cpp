//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/featurize.hpp"

#include <algorithm>

#include "solgraph/elements.hpp"

namespace solgraph {

std::array<float, node_layout::kWidth> atom_features(const Atom &atom) {
  namespace L = node_layout;
  std::array<float, L::kWidth> f{};
  const std::optional<int> element = element_index(atom.element);
  if (!element) {
    throw SmilesError(SmilesErrorKind::kUnknownElement, atom.element);
  }
  f[L::kElement + *element] = 1.0F;
  f[L::kDegree + std::clamp(atom.degree, 0, L::kNumDegrees - 1)] = 1.0F;
  f[L::kFormalCharge] = static_cast<float>(atom.formal_charge);
  f[L::kRadicals] = static_cast<float>(atom.radical_electrons);
  f[L::kHybridization + static_cast<int>(atom.hybridization)] = 1.0F;
  f[L::kAromatic] = atom.aromatic ? 1.0F : 0.0F;
  f[L::kHydrogens + std::clamp(atom.total_h(), 0, L::kNumHydrogens - 1)] =
      1.0F;
  f[L::kChiral] = atom.chiral ? 1.0F : 0.0F;
  if (atom.parity) {
    f[L::kParity + (*atom.parity == Parity::kCCW ? 0 : 1)] = 1.0F;
  }
  return f;
}

std::array<float, edge_layout::kWidth> bond_features(const Bond &bond) {
  namespace L = edge_layout;
  std::array<float, L::kWidth> f{};
  f[L::kType + static_cast<int>(bond.order)] = 1.0F;
  f[L::kConjugated] = bond.conjugated ? 1.0F : 0.0F;
  f[L::kInRing] = bond.in_ring ? 1.0F : 0.0F;
  f[L::kStereo + static_cast<int>(bond.stereo)] = 1.0F;
  return f;
}

MoleculeGraph build_graph(const Molecule &molecule, std::optional<double> label,
                          std::string source_smiles) {
  MoleculeGraph g;
  g.num_atoms = static_cast<int>(molecule.num_atoms());
  g.label = label;
  g.source_smiles = std::move(source_smiles);
  g.node_features.reserve(molecule.num_atoms() * node_layout::kWidth);
  for (const Atom &atom : molecule.atoms) {
    const auto row = atom_features(atom);
    g.node_features.insert(g.node_features.end(), row.begin(), row.end());
  }
  g.edge_src.reserve(2 * molecule.num_bonds());
  g.edge_dst.reserve(2 * molecule.num_bonds());
  g.edge_features.reserve(2 * molecule.num_bonds() * edge_layout::kWidth);
  for (const Bond &bond : molecule.bonds) {
    const auto row = bond_features(bond);
    g.edge_src.push_back(bond.begin);
    g.edge_dst.push_back(bond.end);
    g.edge_features.insert(g.edge_features.end(), row.begin(), row.end());
    g.edge_src.push_back(bond.end);
    g.edge_dst.push_back(bond.begin);
    g.edge_features.insert(g.edge_features.end(), row.begin(), row.end());
  }
  return g;
}

MoleculeGraph featurize_smiles(const std::string &smiles,
                               std::optional<double> label) {
  return build_graph(parse(smiles), label, smiles);
}

}  // namespace solgraph
