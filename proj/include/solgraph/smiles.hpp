//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace solgraph {

enum class TokenKind {
  kAtomOrganic,
  kAtomBracket,
  kBond,
  kRingClosure,
  kBranchOpen,
  kBranchClose,
  kDot,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;

  bool operator==(const Token &) const = default;
};

enum class Hybridization { kS, kSP, kSP2, kSP3, kSP3D, kSP3D2, kOther };
inline constexpr int kNumHybridizations = 7;

// Tetrahedral parity as written: `@` is counter-clockwise, `@@` clockwise.
enum class Parity { kCCW, kCW };

struct Atom {
  std::string element;
  int formal_charge = 0;
  int radical_electrons = 0;
  bool aromatic = false;
  std::optional<int> explicit_h;  // bracket atoms only
  int implicit_h = 0;
  int degree = 0;
  Hybridization hybridization = Hybridization::kOther;
  bool chiral = false;
  std::optional<Parity> parity;
  bool in_ring = false;
  bool in_aromatic_ring = false;
  std::optional<int> isotope;
  bool bracket = false;

  int total_h() const { return implicit_h; }
  bool operator==(const Atom &) const = default;
};

enum class BondOrder { kSingle, kDouble, kTriple, kAromatic };
enum class BondStereo { kNone, kAny, kZ, kE };

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::kSingle;
  bool conjugated = false;
  bool in_ring = false;
  BondStereo stereo = BondStereo::kNone;
  // '/' or '\\' as read from begin towards end; 0 when not directional.
  char direction = 0;

  int other(int atom) const { return atom == begin ? end : begin; }
  bool operator==(const Bond &) const = default;
};

using Ring = std::vector<int>;  // atom indices in walk order

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<Ring> rings;
  // Incident bond indices per atom, in bond-creation order.
  std::vector<std::vector<int>> atom_bonds;

  std::size_t num_atoms() const { return atoms.size(); }
  std::size_t num_bonds() const { return bonds.size(); }
  bool operator==(const Molecule &) const = default;
};

enum class SmilesErrorKind {
  kEmptyInput,
  kUnexpectedCharacter,
  kUnterminatedBracket,
  kInvalidBracketAtom,
  kInvalidBond,
  kUnclosedRingBond,
  kUnbalancedBranch,
  kValenceExceeded,
  kUnknownElement,
  kDisconnectedInputRejected,
  kAromaticOutsideRing,
};

std::string_view to_string(SmilesErrorKind kind);

class SmilesError : public std::runtime_error {
public:
  SmilesError(SmilesErrorKind kind, std::string detail,
              std::optional<std::size_t> position = std::nullopt);

  SmilesErrorKind kind() const { return kind_; }
  std::optional<std::size_t> position() const { return position_; }

private:
  SmilesErrorKind kind_;
  std::optional<std::size_t> position_;
};

// Splits `smiles` into tokens covering every character exactly once.
std::vector<Token> tokenize(std::string_view smiles);

// Parses a single connected molecule and runs the full perception pipeline.
Molecule parse(std::string_view smiles);

struct RingInfo {
  std::vector<Ring> cycles;       // minimum cycle basis, shortest first
  std::vector<bool> bond_in_ring;
  std::vector<bool> atom_in_ring;
};

// Minimum cycle basis of the bond graph (Horton candidates + GF(2)
// elimination). The basis has E - V + 1 members for a connected graph.
RingInfo perceive_rings(const Molecule &molecule);

// Rule-table hybridization; requires final bond orders and hydrogen counts.
Molecule assign_hybridization(Molecule molecule);

// Conjugation flags; requires hybridization.
Molecule assign_conjugation(Molecule molecule);

std::string_view to_string(Hybridization h);
std::string_view to_string(BondOrder order);
std::string_view to_string(BondStereo stereo);

// Line-oriented dump: one `atom` line per atom, then one `bond` line per bond.
std::string dump(const Molecule &molecule);

}  // namespace solgraph
