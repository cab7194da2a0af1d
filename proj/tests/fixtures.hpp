#pragma once

#include <random>

#include "heteronet/digraph.hpp"

namespace fixtures {

// 1 -> 2, 2 -> {3, 4}, {3, 4} -> 1
inline heteronet::Digraph kirk_silber() {
  return heteronet::Digraph::from_edges(4, {{0, 1}, {1, 2}, {1, 3}, {2, 0}, {3, 0}});
}

// Kirk-Silber plus 3 -> 4: two delta-cliques, no splitting vertex.
inline heteronet::Digraph b3b3c4() {
  return heteronet::Digraph::from_edges(4, {{0, 1}, {1, 2}, {1, 3}, {2, 3}, {2, 0}, {3, 0}});
}

inline heteronet::Digraph three_cycle() {
  return heteronet::Digraph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
}

inline heteronet::Digraph random_digraph(std::mt19937_64& rng, std::size_t max_n = 8) {
  std::uniform_int_distribution<std::size_t> size(2, max_n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = size(rng);
  const double density = 0.15 + 0.5 * unit(rng);
  heteronet::Digraph g(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && unit(rng) < density) g.add_edge(a, b);
    }
  }
  return g;
}

}  // namespace fixtures
