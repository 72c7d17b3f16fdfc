//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>

#include "solgraph/smiles.hpp"

namespace solgraph {
namespace {

using EdgeSet = std::vector<std::uint64_t>;

struct Candidate {
  std::vector<int> atoms;
  std::vector<int> edges;  // sorted
  EdgeSet bits;
};

void set_bit(EdgeSet &bits, int i) {
  bits[static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64);
}

bool test_bit(const EdgeSet &bits, int i) {
  return (bits[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1U;
}

int lowest_bit(const EdgeSet &bits) {
  for (std::size_t w = 0; w < bits.size(); ++w) {
    if (bits[w] != 0) {
      return static_cast<int>(w * 64) + __builtin_ctzll(bits[w]);
    }
  }
  return -1;
}

void xor_into(EdgeSet &dst, const EdgeSet &src) {
  for (std::size_t w = 0; w < dst.size(); ++w) dst[w] ^= src[w];
}

}  // namespace

RingInfo perceive_rings(const Molecule &molecule) {
  const int n = static_cast<int>(molecule.num_atoms());
  const int m = static_cast<int>(molecule.num_bonds());
  RingInfo info;
  info.bond_in_ring.assign(m, false);
  info.atom_in_ring.assign(n, false);

  // Connected components, so that the basis size is right even for inputs
  // that did not come through the parser.
  std::vector<int> comp(n, -1);
  int components = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::deque<int> queue{s};
    comp[s] = components;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int b : molecule.atom_bonds[u]) {
        const int v = molecule.bonds[b].other(u);
        if (comp[v] < 0) {
          comp[v] = components;
          queue.push_back(v);
        }
      }
    }
    ++components;
  }
  const int dimension = m - n + components;
  if (dimension <= 0) return info;

  const std::size_t words = (static_cast<std::size_t>(m) + 63) / 64;
  std::vector<Candidate> candidates;
  std::set<std::vector<int>> seen;

  std::vector<int> dist(n), parent_atom(n), parent_bond(n);
  for (int root = 0; root < n; ++root) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(parent_atom.begin(), parent_atom.end(), -1);
    std::fill(parent_bond.begin(), parent_bond.end(), -1);
    std::deque<int> queue{root};
    dist[root] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int b : molecule.atom_bonds[u]) {
        const int v = molecule.bonds[b].other(u);
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          parent_atom[v] = u;
          parent_bond[v] = b;
          queue.push_back(v);
        }
      }
    }

    for (int b = 0; b < m; ++b) {
      const int x = molecule.bonds[b].begin;
      const int y = molecule.bonds[b].end;
      if (dist[x] < 0 || parent_bond[x] == b || parent_bond[y] == b) continue;

      std::vector<int> px{x}, py{y};
      while (px.back() != root) px.push_back(parent_atom[px.back()]);
      while (py.back() != root) py.push_back(parent_atom[py.back()]);
      // Paths must only share the root.
      std::vector<int> sx(px.begin(), px.end() - 1);
      std::vector<int> sy(py.begin(), py.end() - 1);
      std::sort(sx.begin(), sx.end());
      std::sort(sy.begin(), sy.end());
      std::vector<int> common;
      std::set_intersection(sx.begin(), sx.end(), sy.begin(), sy.end(),
                            std::back_inserter(common));
      if (!common.empty()) continue;

      Candidate c;
      c.bits.assign(words, 0);
      c.atoms = px;  // x ... root
      std::reverse(c.atoms.begin(), c.atoms.end());  // root ... x
      for (std::size_t k = 0; k + 1 < py.size(); ++k) c.atoms.push_back(py[k]);
      // atoms: root ... x y ... (excluding root at the end)
      c.edges.push_back(b);
      for (std::size_t k = 0; k + 1 < px.size(); ++k)
        c.edges.push_back(parent_bond[px[k]]);
      for (std::size_t k = 0; k + 1 < py.size(); ++k)
        c.edges.push_back(parent_bond[py[k]]);
      std::sort(c.edges.begin(), c.edges.end());
      if (!seen.insert(c.edges).second) continue;
      for (int e : c.edges) set_bit(c.bits, e);
      candidates.push_back(std::move(c));
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate &a, const Candidate &b) {
                     if (a.edges.size() != b.edges.size())
                       return a.edges.size() < b.edges.size();
                     return a.edges < b.edges;
                   });

  // Greedy GF(2) elimination: keep a candidate iff it is independent of the
  // ones already kept.
  std::vector<std::pair<int, EdgeSet>> pivots;  // (pivot bit, reduced row)
  for (Candidate &c : candidates) {
    if (static_cast<int>(info.cycles.size()) == dimension) break;
    EdgeSet row = c.bits;
    for (const auto &[bit, prow] : pivots) {
      if (test_bit(row, bit)) xor_into(row, prow);
    }
    const int pivot = lowest_bit(row);
    if (pivot < 0) continue;
    for (auto &[bit, prow] : pivots) {
      if (test_bit(prow, pivot)) xor_into(prow, row);
    }
    pivots.emplace_back(pivot, std::move(row));
    for (int e : c.edges) info.bond_in_ring[e] = true;
    for (int a : c.atoms) info.atom_in_ring[a] = true;
    info.cycles.push_back(std::move(c.atoms));
  }
  return info;
}

}  // namespace solgraph
