//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/elements.hpp"

#include <algorithm>

namespace solgraph {
namespace {

constexpr std::array<std::string_view, kNumElements> kSymbols = {
    "K",  "Y",  "V",  "Sm", "Dy", "In", "Lu", "Hg", "Co", "Mg", "Cu",
    "Rh", "Hf", "O",  "As", "Ge", "Au", "Mo", "Br", "Ce", "Zr", "Ag",
    "Ba", "N",  "Cr", "Sr", "Fe", "Gd", "I",  "Al", "B",  "Se", "Pr",
    "Te", "Cd", "Pd", "Si", "Zn", "Pb", "Sn", "Cl", "Mn", "Cs", "Na",
    "S",  "Ti", "Ni", "Ru", "Ca", "Nd", "W",  "H",  "Li", "Sb", "Bi",
    "La", "Pt", "Nb", "P",  "F",  "C",  "Re", "Ta", "Ir", "Be", "Tl",
};

struct ValenceModel {
  std::string_view symbol;
  int valence_electrons;
  int period;
};

constexpr std::array<ValenceModel, 11> kValenceModels = {{
    {"H", 1, 1},
    {"B", 3, 2},
    {"C", 4, 2},
    {"N", 5, 2},
    {"O", 6, 2},
    {"F", 7, 2},
    {"P", 5, 3},
    {"S", 6, 3},
    {"Cl", 7, 3},
    {"Br", 7, 4},
    {"I", 7, 5},
}};

const ValenceModel *find_model(std::string_view symbol) {
  for (const auto &m : kValenceModels) {
    if (m.symbol == symbol) return &m;
  }
  return nullptr;
}

}  // namespace

std::span<const std::string_view> element_symbols() { return kSymbols; }

std::optional<int> element_index(std::string_view symbol) {
  const auto *it = std::find(kSymbols.begin(), kSymbols.end(), symbol);
  if (it == kSymbols.end()) return std::nullopt;
  return static_cast<int>(it - kSymbols.begin());
}

bool has_valence_model(std::string_view symbol) {
  return find_model(symbol) != nullptr;
}

std::vector<int> allowed_valences(std::string_view symbol, int charge) {
  const ValenceModel *m = find_model(symbol);
  if (m == nullptr) return {};
  const int electrons = m->valence_electrons - charge;
  if (electrons <= 0 || electrons >= 8) return {0};
  if (electrons <= 4) return {electrons};

  const int base = 8 - electrons;
  // Hypervalent states only for period >= 3, and among halogens only iodine.
  const bool hypervalent =
      m->period >= 3 && !(m->valence_electrons == 7 && symbol != "I" &&
                          electrons == 7);
  std::vector<int> out{base};
  if (hypervalent) {
    for (int v = base + 2; v <= electrons; v += 2) out.push_back(v);
  }
  return out;
}

}  // namespace solgraph
