//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

#include "solgraph/smiles.hpp"

namespace solgraph::detail {

// Runs ring perception, aromaticity cleanup and promotion, hydrogen counts,
// hybridization, conjugation and double-bond stereo on a freshly built graph.
// `implicit_aromatic[b]` marks bonds that are aromatic only because both
// endpoints were written lowercase (or with ':').
Molecule perceive(Molecule mol, const std::vector<bool> &implicit_aromatic);

}  // namespace solgraph::detail
