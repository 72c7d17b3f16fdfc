//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "perception.hpp"
#include "solgraph/elements.hpp"

namespace solgraph {

std::string_view to_string(SmilesErrorKind kind) {
  switch (kind) {
  case SmilesErrorKind::kEmptyInput:
    return "EmptyInput";
  case SmilesErrorKind::kUnexpectedCharacter:
    return "UnexpectedCharacter";
  case SmilesErrorKind::kUnterminatedBracket:
    return "UnterminatedBracket";
  case SmilesErrorKind::kInvalidBracketAtom:
    return "InvalidBracketAtom";
  case SmilesErrorKind::kInvalidBond:
    return "InvalidBond";
  case SmilesErrorKind::kUnclosedRingBond:
    return "UnclosedRingBond";
  case SmilesErrorKind::kUnbalancedBranch:
    return "UnbalancedBranch";
  case SmilesErrorKind::kValenceExceeded:
    return "ValenceExceeded";
  case SmilesErrorKind::kUnknownElement:
    return "UnknownElement";
  case SmilesErrorKind::kDisconnectedInputRejected:
    return "DisconnectedInputRejected";
  case SmilesErrorKind::kAromaticOutsideRing:
    return "AromaticOutsideRing";
  }
  return "Unknown";
}

namespace {

std::string format_error(SmilesErrorKind kind, const std::string &detail,
                         std::optional<std::size_t> position) {
  std::string out(to_string(kind));
  if (position) out += " at " + std::to_string(*position);
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace

SmilesError::SmilesError(SmilesErrorKind kind, std::string detail,
                         std::optional<std::size_t> position)
    : std::runtime_error(format_error(kind, detail, position)), kind_(kind),
      position_(position) {}

// ---------------------------------------------------------------------------
// Tokenizer

std::vector<Token> tokenize(std::string_view smiles) {
  if (smiles.empty()) {
    throw SmilesError(SmilesErrorKind::kEmptyInput, "empty SMILES");
  }
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = smiles.size();
  auto emit = [&](TokenKind kind, std::size_t len) {
    tokens.push_back({kind, std::string(smiles.substr(i, len)), i});
    i += len;
  };

  while (i < n) {
    const char c = smiles[i];
    switch (c) {
    case '[': {
      std::size_t j = i + 1;
      while (j < n && smiles[j] != ']' && smiles[j] != '[') ++j;
      if (j >= n || smiles[j] != ']') {
        throw SmilesError(SmilesErrorKind::kUnterminatedBracket,
                          "missing ']'", i);
      }
      emit(TokenKind::kAtomBracket, j - i + 1);
      break;
    }
    case 'C':
    case 'B':
      if (i + 1 < n &&
          ((c == 'C' && smiles[i + 1] == 'l') ||
           (c == 'B' && smiles[i + 1] == 'r'))) {
        emit(TokenKind::kAtomOrganic, 2);
      } else {
        emit(TokenKind::kAtomOrganic, 1);
      }
      break;
    case 'N':
    case 'O':
    case 'P':
    case 'S':
    case 'F':
    case 'I':
    case 'b':
    case 'c':
    case 'n':
    case 'o':
    case 'p':
    case 's':
      emit(TokenKind::kAtomOrganic, 1);
      break;
    case '-':
    case '=':
    case '#':
    case ':':
    case '/':
    case '\\':
      emit(TokenKind::kBond, 1);
      break;
    case '%':
      if (i + 2 < n && std::isdigit(static_cast<unsigned char>(smiles[i + 1])) &&
          std::isdigit(static_cast<unsigned char>(smiles[i + 2]))) {
        emit(TokenKind::kRingClosure, 3);
      } else {
        throw SmilesError(SmilesErrorKind::kUnexpectedCharacter,
                          "'%' must be followed by two digits", i);
      }
      break;
    case '(':
      emit(TokenKind::kBranchOpen, 1);
      break;
    case ')':
      emit(TokenKind::kBranchClose, 1);
      break;
    case '.':
      emit(TokenKind::kDot, 1);
      break;
    default:
      if (std::isdigit(static_cast<unsigned char>(c))) {
        emit(TokenKind::kRingClosure, 1);
      } else {
        throw SmilesError(SmilesErrorKind::kUnexpectedCharacter,
                          std::string("'") + c + "'", i);
      }
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

Atom parse_organic(const Token &tok) {
  Atom atom;
  const std::string &t = tok.text;
  if (std::islower(static_cast<unsigned char>(t[0]))) {
    atom.aromatic = true;
    atom.element = std::string(1, static_cast<char>(std::toupper(t[0])));
  } else {
    atom.element = t;
  }
  return atom;
}

bool is_known_symbol_prefix(std::string_view s) {
  return element_index(s).has_value();
}

Atom parse_bracket(const Token &tok) {
  const std::string_view body =
      std::string_view(tok.text).substr(1, tok.text.size() - 2);
  const std::size_t base = tok.position + 1;
  auto fail = [&](std::size_t at, const std::string &why) {
    return SmilesError(SmilesErrorKind::kInvalidBracketAtom, why, base + at);
  };
  auto is_digit = [](char ch) {
    return std::isdigit(static_cast<unsigned char>(ch)) != 0;
  };

  Atom atom;
  atom.bracket = true;
  std::size_t p = 0;

  if (p < body.size() && is_digit(body[p])) {
    int iso = 0;
    while (p < body.size() && is_digit(body[p])) {
      iso = iso * 10 + (body[p] - '0');
      ++p;
    }
    atom.isotope = iso;
  }

  if (p >= body.size()) throw fail(p, "missing element symbol");
  const char first = body[p];
  if (std::isupper(static_cast<unsigned char>(first))) {
    std::string symbol(1, first);
    ++p;
    if (p < body.size() && std::islower(static_cast<unsigned char>(body[p]))) {
      symbol.push_back(body[p]);
      ++p;
    }
    atom.element = symbol;
  } else if (std::islower(static_cast<unsigned char>(first))) {
    static constexpr std::string_view kTwo[] = {"se", "as", "te"};
    bool matched = false;
    for (std::string_view two : kTwo) {
      if (body.substr(p, 2) == two) {
        atom.element = std::string(1, static_cast<char>(std::toupper(two[0]))) +
                       std::string(1, two[1]);
        p += 2;
        matched = true;
        break;
      }
    }
    if (!matched) {
      if (std::string_view("bcnops").find(first) == std::string_view::npos) {
        throw fail(p, "invalid aromatic symbol");
      }
      atom.element = std::string(1, static_cast<char>(std::toupper(first)));
      ++p;
    }
    atom.aromatic = true;
  } else {
    throw fail(p, "missing element symbol");
  }

  if (!is_known_symbol_prefix(atom.element)) {
    throw SmilesError(SmilesErrorKind::kUnknownElement, atom.element,
                      tok.position);
  }

  if (p < body.size() && body[p] == '@') {
    ++p;
    atom.chiral = true;
    atom.parity = Parity::kCCW;
    if (p < body.size() && body[p] == '@') {
      ++p;
      atom.parity = Parity::kCW;
    } else if (p < body.size() &&
               std::isupper(static_cast<unsigned char>(body[p])) &&
               body[p] != 'H') {
      throw fail(p, "only tetrahedral @/@@ is supported");
    }
  }

  if (p < body.size() && body[p] == 'H') {
    ++p;
    int h = 1;
    if (p < body.size() && is_digit(body[p])) {
      h = body[p] - '0';
      ++p;
    }
    atom.explicit_h = h;
  } else {
    atom.explicit_h = 0;
  }

  if (p < body.size() && (body[p] == '+' || body[p] == '-')) {
    const char sign = body[p];
    const int unit = sign == '+' ? 1 : -1;
    ++p;
    int magnitude = 1;
    if (p < body.size() && is_digit(body[p])) {
      magnitude = 0;
      while (p < body.size() && is_digit(body[p])) {
        magnitude = magnitude * 10 + (body[p] - '0');
        ++p;
      }
    } else {
      while (p < body.size() && body[p] == sign) {
        ++magnitude;
        ++p;
      }
    }
    atom.formal_charge = unit * magnitude;
  }

  if (p < body.size() && body[p] == ':') {
    ++p;
    if (p >= body.size() || !is_digit(body[p])) throw fail(p, "bad atom class");
    while (p < body.size() && is_digit(body[p])) ++p;
  }

  if (p != body.size()) throw fail(p, "unexpected bracket content");
  return atom;
}

struct PendingBond {
  char symbol = 0;
  std::size_t position = 0;
};

struct RingOpening {
  int atom;
  char symbol;
  std::size_t position;
};

BondOrder order_for(char symbol) {
  switch (symbol) {
  case '=':
    return BondOrder::kDouble;
  case '#':
    return BondOrder::kTriple;
  case ':':
    return BondOrder::kAromatic;
  default:
    return BondOrder::kSingle;
  }
}

char flip_direction(char symbol) {
  if (symbol == '/') return '\\';
  if (symbol == '\\') return '/';
  return symbol;
}

bool is_directional(char symbol) { return symbol == '/' || symbol == '\\'; }

class Builder {
public:
  Molecule mol;
  std::vector<bool> implicit_bond;

  int add_atom(Atom atom) {
    mol.atoms.push_back(std::move(atom));
    mol.atom_bonds.emplace_back();
    return static_cast<int>(mol.atoms.size()) - 1;
  }

  bool bonded(int a, int b) const {
    for (int bi : mol.atom_bonds[a]) {
      if (mol.bonds[bi].other(a) == b) return true;
    }
    return false;
  }

  // `symbol` is read from `a` towards `b`; 0 means no explicit bond symbol.
  void add_bond(int a, int b, char symbol, std::size_t position) {
    if (a == b || bonded(a, b)) {
      throw SmilesError(SmilesErrorKind::kInvalidBond,
                        "duplicate bond or self-loop", position);
    }
    Bond bond;
    bond.begin = a;
    bond.end = b;
    bool implicit = false;
    if (symbol == 0) {
      implicit = mol.atoms[a].aromatic && mol.atoms[b].aromatic;
      bond.order = implicit ? BondOrder::kAromatic : BondOrder::kSingle;
    } else {
      bond.order = order_for(symbol);
      if (is_directional(symbol)) bond.direction = symbol;
    }
    const int index = static_cast<int>(mol.bonds.size());
    mol.bonds.push_back(bond);
    implicit_bond.push_back(implicit || symbol == ':');
    mol.atom_bonds[a].push_back(index);
    mol.atom_bonds[b].push_back(index);
  }
};

}  // namespace

Molecule parse(std::string_view smiles) {
  const std::vector<Token> tokens = tokenize(smiles);

  Builder builder;
  int prev = -1;
  std::optional<PendingBond> pending;
  std::vector<std::pair<int, std::size_t>> branches;
  std::map<int, RingOpening> open_rings;
  TokenKind last_kind = TokenKind::kDot;

  for (const Token &tok : tokens) {
    switch (tok.kind) {
    case TokenKind::kAtomOrganic:
    case TokenKind::kAtomBracket: {
      Atom atom = tok.kind == TokenKind::kAtomOrganic ? parse_organic(tok)
                                                      : parse_bracket(tok);
      if (!element_index(atom.element)) {
        throw SmilesError(SmilesErrorKind::kUnknownElement, atom.element,
                          tok.position);
      }
      const int idx = builder.add_atom(std::move(atom));
      if (prev >= 0) {
        builder.add_bond(prev, idx, pending ? pending->symbol : 0,
                         tok.position);
      } else if (pending) {
        throw SmilesError(SmilesErrorKind::kInvalidBond,
                          "bond without preceding atom", pending->position);
      }
      pending.reset();
      prev = idx;
      break;
    }
    case TokenKind::kBond:
      if (prev < 0 || pending) {
        throw SmilesError(SmilesErrorKind::kInvalidBond, "misplaced bond",
                          tok.position);
      }
      pending = PendingBond{tok.text[0], tok.position};
      break;
    case TokenKind::kRingClosure: {
      if (prev < 0) {
        throw SmilesError(SmilesErrorKind::kInvalidBond,
                          "ring closure without atom", tok.position);
      }
      const int label = tok.text[0] == '%' ? std::stoi(tok.text.substr(1))
                                           : tok.text[0] - '0';
      const char here = pending ? pending->symbol : 0;
      auto it = open_rings.find(label);
      if (it == open_rings.end()) {
        open_rings.emplace(label, RingOpening{prev, here, tok.position});
      } else {
        const RingOpening opening = it->second;
        open_rings.erase(it);
        // A symbol at the closing digit reads from the closing atom back to
        // the opening atom.
        const char closing = flip_direction(here);
        char symbol = opening.symbol;
        if (symbol == 0) {
          symbol = closing;
        } else if (closing != 0 && closing != symbol) {
          throw SmilesError(SmilesErrorKind::kInvalidBond,
                            "conflicting ring-closure bond symbols",
                            tok.position);
        }
        builder.add_bond(opening.atom, prev, symbol, tok.position);
      }
      pending.reset();
      break;
    }
    case TokenKind::kBranchOpen:
      if (prev < 0 || pending) {
        throw SmilesError(SmilesErrorKind::kUnbalancedBranch,
                          "branch without anchor atom", tok.position);
      }
      branches.emplace_back(prev, tok.position);
      break;
    case TokenKind::kBranchClose:
      if (branches.empty() || last_kind == TokenKind::kBranchOpen) {
        throw SmilesError(SmilesErrorKind::kUnbalancedBranch,
                          "unmatched or empty branch", tok.position);
      }
      if (pending) {
        throw SmilesError(SmilesErrorKind::kInvalidBond, "dangling bond",
                          pending->position);
      }
      prev = branches.back().first;
      branches.pop_back();
      break;
    case TokenKind::kDot:
      throw SmilesError(SmilesErrorKind::kDisconnectedInputRejected,
                        "multi-component SMILES are not accepted",
                        tok.position);
    }
    last_kind = tok.kind;
  }

  if (pending) {
    throw SmilesError(SmilesErrorKind::kInvalidBond, "dangling bond",
                      pending->position);
  }
  if (!branches.empty()) {
    throw SmilesError(SmilesErrorKind::kUnbalancedBranch, "unclosed '('",
                      branches.back().second);
  }
  if (!open_rings.empty()) {
    const auto &[label, opening] = *open_rings.begin();
    throw SmilesError(SmilesErrorKind::kUnclosedRingBond,
                      "ring bond " + std::to_string(label) + " never closed",
                      opening.position);
  }

  return detail::perceive(std::move(builder.mol), builder.implicit_bond);
}

// ---------------------------------------------------------------------------
// Dump

std::string_view to_string(Hybridization h) {
  switch (h) {
  case Hybridization::kS:
    return "S";
  case Hybridization::kSP:
    return "SP";
  case Hybridization::kSP2:
    return "SP2";
  case Hybridization::kSP3:
    return "SP3";
  case Hybridization::kSP3D:
    return "SP3D";
  case Hybridization::kSP3D2:
    return "SP3D2";
  case Hybridization::kOther:
    return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle:
    return "SINGLE";
  case BondOrder::kDouble:
    return "DOUBLE";
  case BondOrder::kTriple:
    return "TRIPLE";
  case BondOrder::kAromatic:
    return "AROMATIC";
  }
  return "SINGLE";
}

std::string_view to_string(BondStereo stereo) {
  switch (stereo) {
  case BondStereo::kNone:
    return "NONE";
  case BondStereo::kAny:
    return "ANY";
  case BondStereo::kZ:
    return "Z";
  case BondStereo::kE:
    return "E";
  }
  return "NONE";
}

std::string dump(const Molecule &molecule) {
  std::ostringstream os;
  for (std::size_t i = 0; i < molecule.atoms.size(); ++i) {
    const Atom &a = molecule.atoms[i];
    os << "atom " << i << ' ' << a.element << " charge=" << a.formal_charge
       << " radicals=" << a.radical_electrons << " aromatic=" << a.aromatic
       << " h=" << a.implicit_h << " degree=" << a.degree
       << " hyb=" << to_string(a.hybridization) << " chiral=" << a.chiral
       << " parity="
       << (a.parity ? (*a.parity == Parity::kCCW ? "CCW" : "CW") : "-")
       << " ring=" << a.in_ring << " aromatic_ring=" << a.in_aromatic_ring
       << '\n';
  }
  for (std::size_t i = 0; i < molecule.bonds.size(); ++i) {
    const Bond &b = molecule.bonds[i];
    os << "bond " << i << ' ' << b.begin << ' ' << b.end << ' '
       << to_string(b.order) << " conjugated=" << b.conjugated
       << " ring=" << b.in_ring << " stereo=" << to_string(b.stereo) << '\n';
  }
  return os.str();
}

}  // namespace solgraph
