//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "perception.hpp"

#include <algorithm>
#include <string>

#include "solgraph/elements.hpp"

namespace solgraph {
namespace {

// Aromatic atoms of these elements hold back one valence unit for the ring
// pi system when they have room for it; o/s/se donate a lone pair instead.
bool reserves_pi_unit(const Atom &a) {
  return a.aromatic && (a.element == "C" || a.element == "N" ||
                        a.element == "P" || a.element == "B");
}

int bond_valence(BondOrder order) {
  switch (order) {
  case BondOrder::kDouble:
    return 2;
  case BondOrder::kTriple:
    return 3;
  default:
    return 1;
  }
}

int explicit_valence(const Molecule &mol, int atom) {
  int v = 0;
  for (int b : mol.atom_bonds[atom]) v += bond_valence(mol.bonds[b].order);
  return v;
}

void assign_hydrogens(Molecule &mol) {
  for (int i = 0; i < static_cast<int>(mol.num_atoms()); ++i) {
    Atom &a = mol.atoms[i];
    const std::vector<int> valences =
        allowed_valences(a.element, a.formal_charge);
    int used = explicit_valence(mol, i);
    if (a.bracket) {
      used += *a.explicit_h;
      a.implicit_h = *a.explicit_h;
      if (valences.empty()) continue;
      if (reserves_pi_unit(a) && used < valences.front()) ++used;
      const auto it = std::lower_bound(valences.begin(), valences.end(), used);
      if (it == valences.end()) {
        throw SmilesError(SmilesErrorKind::kValenceExceeded,
                          "atom " + std::to_string(i) + " (" + a.element +
                              ") valence " + std::to_string(used));
      }
      a.radical_electrons = *it - used;
      continue;
    }
    if (reserves_pi_unit(a) && used < valences.front()) ++used;
    const auto it = std::lower_bound(valences.begin(), valences.end(), used);
    if (it == valences.end()) {
      throw SmilesError(SmilesErrorKind::kValenceExceeded,
                        "atom " + std::to_string(i) + " (" + a.element +
                            ") valence " + std::to_string(used));
    }
    a.implicit_h = *it - used;
  }
}

bool cycle_contains_bond(const Ring &ring, const Bond &bond) {
  const std::size_t k = ring.size();
  for (std::size_t i = 0; i < k; ++i) {
    const int u = ring[i];
    const int v = ring[(i + 1) % k];
    if ((u == bond.begin && v == bond.end) ||
        (u == bond.end && v == bond.begin)) {
      return true;
    }
  }
  return false;
}

int ring_bond(const Molecule &mol, int u, int v) {
  for (int b : mol.atom_bonds[u]) {
    if (mol.bonds[b].other(u) == v) return b;
  }
  return -1;
}

std::vector<int> ring_bonds(const Molecule &mol, const Ring &ring) {
  std::vector<int> out;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    out.push_back(ring_bond(mol, ring[i], ring[(i + 1) % ring.size()]));
  }
  return out;
}

// Pi electrons `atom` would donate to `ring`, or -1 when it cannot take part
// in an aromatic sextet. `kekule` holds bond orders before promotion;
// `aromatic_bond` marks bonds already inside a promoted ring.
int pi_contribution(const Molecule &mol, int atom, const Ring &ring,
                    const std::vector<BondOrder> &kekule,
                    const std::vector<bool> &aromatic_bond) {
  const Atom &a = mol.atoms[atom];
  static const std::string kEligible[] = {"C", "N", "O", "S", "P", "B"};
  if (std::find(std::begin(kEligible), std::end(kEligible), a.element) ==
      std::end(kEligible)) {
    return -1;
  }
  auto in_ring = [&](int other) {
    return std::find(ring.begin(), ring.end(), other) != ring.end();
  };

  int endo_double = 0;
  int exo_double = -1;
  for (int b : mol.atom_bonds[atom]) {
    const BondOrder order = kekule[b];
    if (order == BondOrder::kTriple) return -1;
    if (order != BondOrder::kDouble) continue;
    const int other = mol.bonds[b].other(atom);
    if (in_ring(other)) {
      ++endo_double;
    } else {
      exo_double = b;
    }
  }
  if (endo_double > 0) return 1;
  if (exo_double >= 0) {
    if (aromatic_bond[exo_double]) return 1;
    const Atom &partner = mol.atoms[mol.bonds[exo_double].other(atom)];
    const bool electronegative = partner.element == "O" ||
                                 partner.element == "N" ||
                                 partner.element == "S";
    if (a.element == "C" && electronegative) return 0;
    return -1;
  }
  if (a.aromatic) return 1;

  const int sigma = static_cast<int>(mol.atom_bonds[atom].size()) + a.implicit_h;
  if (a.formal_charge == 0) {
    if (a.element == "N" && sigma == 3) return 2;
    if ((a.element == "O" || a.element == "S") && sigma == 2) return 2;
  }
  if (a.element == "C" && a.formal_charge == -1 && sigma == 3) return 2;
  return -1;
}

// Promotes Kekule-written 5/6-rings that satisfy 4n+2 to aromatic, iterating
// so fused rings can build on neighbours promoted earlier.
void promote_kekule_rings(Molecule &mol) {
  std::vector<BondOrder> kekule;
  for (const Bond &b : mol.bonds) kekule.push_back(b.order);
  std::vector<bool> aromatic_bond(mol.num_bonds());
  for (std::size_t b = 0; b < mol.num_bonds(); ++b) {
    aromatic_bond[b] = mol.bonds[b].order == BondOrder::kAromatic;
  }
  std::vector<bool> done(mol.rings.size(), false);

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t r = 0; r < mol.rings.size(); ++r) {
      const Ring &ring = mol.rings[r];
      if (done[r] || ring.size() < 5 || ring.size() > 6) continue;
      const bool already = std::all_of(ring.begin(), ring.end(), [&](int a) {
        return mol.atoms[a].aromatic;
      });
      if (already) {
        done[r] = true;
        continue;
      }
      int electrons = 0;
      bool eligible = true;
      for (int a : ring) {
        const int pi = pi_contribution(mol, a, ring, kekule, aromatic_bond);
        if (pi < 0) {
          eligible = false;
          break;
        }
        electrons += pi;
      }
      if (!eligible || electrons % 4 != 2) continue;

      for (int a : ring) mol.atoms[a].aromatic = true;
      for (int b : ring_bonds(mol, ring)) {
        mol.bonds[b].order = BondOrder::kAromatic;
        mol.bonds[b].direction = 0;
        aromatic_bond[b] = true;
      }
      done[r] = true;
      changed = true;
    }
  }
}

void assign_stereo(Molecule &mol) {
  for (std::size_t i = 0; i < mol.num_bonds(); ++i) {
    Bond &db = mol.bonds[i];
    if (db.order != BondOrder::kDouble) continue;
    // +1 / -1: which side of the double bond the reference neighbour sits on.
    auto side = [&](int atom) -> int {
      for (int b : mol.atom_bonds[atom]) {
        if (b == static_cast<int>(i)) continue;
        const Bond &d = mol.bonds[b];
        if (d.direction == 0) continue;
        const bool up = d.direction == '/';
        return d.begin == atom ? (up ? 1 : -1) : (up ? -1 : 1);
      }
      return 0;
    };
    const int s1 = side(db.begin);
    const int s2 = side(db.end);
    if (s1 == 0 && s2 == 0) {
      db.stereo = BondStereo::kNone;
    } else if (s1 == 0 || s2 == 0) {
      db.stereo = BondStereo::kAny;
    } else {
      db.stereo = s1 == s2 ? BondStereo::kZ : BondStereo::kE;
    }
  }
}

}  // namespace

Molecule assign_hybridization(Molecule molecule) {
  for (std::size_t i = 0; i < molecule.num_atoms(); ++i) {
    Atom &a = molecule.atoms[i];
    int doubles = 0;
    int triples = 0;
    for (int b : molecule.atom_bonds[i]) {
      const BondOrder order = molecule.bonds[b].order;
      if (order == BondOrder::kDouble) ++doubles;
      if (order == BondOrder::kTriple) ++triples;
    }
    const int sigma = static_cast<int>(molecule.atom_bonds[i].size()) +
                      a.total_h();
    if (a.aromatic) {
      a.hybridization = Hybridization::kSP2;
    } else if (triples > 0 || doubles >= 2) {
      a.hybridization = Hybridization::kSP;
    } else if (doubles == 1) {
      a.hybridization = Hybridization::kSP2;
    } else if (sigma == 5) {
      a.hybridization = Hybridization::kSP3D;
    } else if (sigma == 6) {
      a.hybridization = Hybridization::kSP3D2;
    } else if (a.element == "H") {
      a.hybridization = Hybridization::kS;
    } else if (sigma <= 4) {
      a.hybridization = Hybridization::kSP3;
    } else {
      a.hybridization = Hybridization::kOther;
    }
  }
  return molecule;
}

Molecule assign_conjugation(Molecule molecule) {
  const std::size_t n = molecule.num_atoms();
  std::vector<bool> has_multiple(n, false);
  std::vector<bool> planar(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Hybridization h = molecule.atoms[i].hybridization;
    planar[i] = h == Hybridization::kSP2 || h == Hybridization::kSP;
    for (int b : molecule.atom_bonds[i]) {
      if (molecule.bonds[b].order != BondOrder::kSingle) has_multiple[i] = true;
    }
  }
  // Aromatic bonds and single bonds linking two unsaturated centres first,
  // then the multiple bonds that touch one of them.
  std::vector<bool> conjugated_single_at(n, false);
  for (Bond &b : molecule.bonds) {
    b.conjugated = false;
    if (b.order == BondOrder::kAromatic) {
      b.conjugated = true;
      conjugated_single_at[b.begin] = true;
      conjugated_single_at[b.end] = true;
    } else if (b.order == BondOrder::kSingle && planar[b.begin] &&
               planar[b.end] && has_multiple[b.begin] && has_multiple[b.end]) {
      b.conjugated = true;
      conjugated_single_at[b.begin] = true;
      conjugated_single_at[b.end] = true;
    }
  }
  for (Bond &b : molecule.bonds) {
    if (b.order == BondOrder::kDouble || b.order == BondOrder::kTriple) {
      b.conjugated = conjugated_single_at[b.begin] || conjugated_single_at[b.end];
    }
  }
  return molecule;
}

namespace detail {

Molecule perceive(Molecule mol, const std::vector<bool> &implicit_aromatic) {
  RingInfo rings = perceive_rings(mol);
  mol.rings = rings.cycles;
  for (std::size_t b = 0; b < mol.num_bonds(); ++b) {
    mol.bonds[b].in_ring = rings.bond_in_ring[b];
  }
  for (std::size_t a = 0; a < mol.num_atoms(); ++a) {
    mol.atoms[a].in_ring = rings.atom_in_ring[a];
    if (mol.atoms[a].aromatic && !mol.atoms[a].in_ring) {
      throw SmilesError(SmilesErrorKind::kAromaticOutsideRing,
                        "atom " + std::to_string(a) + " (" +
                            mol.atoms[a].element + ")");
    }
  }

  // An aromatic bond must sit on a basis cycle made only of aromatic atoms;
  // anything else (e.g. the biaryl link in c1ccccc1c1ccccc1) is single.
  for (std::size_t b = 0; b < mol.num_bonds(); ++b) {
    Bond &bond = mol.bonds[b];
    if (bond.order != BondOrder::kAromatic || !implicit_aromatic[b]) continue;
    bool ok = false;
    for (const Ring &ring : mol.rings) {
      if (!cycle_contains_bond(ring, bond)) continue;
      if (std::all_of(ring.begin(), ring.end(),
                      [&](int a) { return mol.atoms[a].aromatic; })) {
        ok = true;
        break;
      }
    }
    if (!ok) bond.order = BondOrder::kSingle;
  }

  assign_hydrogens(mol);
  promote_kekule_rings(mol);

  for (std::size_t a = 0; a < mol.num_atoms(); ++a) {
    mol.atoms[a].degree = static_cast<int>(mol.atom_bonds[a].size());
    mol.atoms[a].in_aromatic_ring = false;
  }
  for (const Ring &ring : mol.rings) {
    if (std::all_of(ring.begin(), ring.end(),
                    [&](int a) { return mol.atoms[a].aromatic; })) {
      for (int a : ring) mol.atoms[a].in_aromatic_ring = true;
    }
  }

  mol = assign_hybridization(std::move(mol));
  mol = assign_conjugation(std::move(mol));
  assign_stereo(mol);
  return mol;
}

}  // namespace detail
}  // namespace solgraph
