//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace solgraph {

// Element vocabulary of the atom one-hot, in feature-slot order.
inline constexpr std::size_t kNumElements = 66;

std::span<const std::string_view> element_symbols();

// Slot of `symbol` in the element one-hot, or nullopt when the symbol is not
// part of the vocabulary.
std::optional<int> element_index(std::string_view symbol);

// Elements whose valences we model (B, C, N, O, P, S, halogens, H). Other
// elements get no implicit hydrogens and skip valence checks.
bool has_valence_model(std::string_view symbol);

// Allowed valences for `symbol` carrying `charge`, ascending. Charged atoms
// take the valences of their isoelectronic neighbour (N+ behaves like C,
// O- like F). Empty when the element has no valence model.
std::vector<int> allowed_valences(std::string_view symbol, int charge);

}  // namespace solgraph
