#pragma once

// Directed graphs of prescribed connections and the structural predicates
// that decide whether the simplex realization applies.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace heteronet {

/// Raised for malformed graph documents and invalid graph edits.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vertex = std::size_t;
using Edge = std::pair<Vertex, Vertex>;
using Cycle = std::vector<Vertex>;

/// Dense adjacency digraph without self-loops. Vertices are 0-based
/// internally; default labels are "1".."n".
class Digraph {
 public:
  explicit Digraph(std::size_t n);
  Digraph(std::size_t n, std::vector<std::string> labels);

  static Digraph from_edges(std::size_t n, const std::vector<Edge>& edges,
                            std::vector<std::string> labels = {});

  std::size_t size() const noexcept { return n_; }
  bool has_edge(Vertex from, Vertex to) const;
  /// Adds from->to; duplicates collapse. Throws GraphError on a self-loop.
  void add_edge(Vertex from, Vertex to);

  std::string label(Vertex v) const;
  bool has_labels() const noexcept { return !labels_.empty(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<Vertex> find(std::string_view label) const;

  std::vector<Vertex> out_neighbors(Vertex v) const;
  std::vector<Vertex> in_neighbors(Vertex v) const;
  std::size_t out_degree(Vertex v) const;
  std::size_t edge_count() const;
  /// Edges in row-major (source, then target) order.
  std::vector<Edge> edges() const;

  friend bool operator==(const Digraph& a, const Digraph& b);

 private:
  void check_vertex(Vertex v) const;

  std::size_t n_;
  std::vector<std::uint8_t> adj_;
  std::vector<std::string> labels_;
};

struct GateReport {
  bool transitive = false;
  std::vector<Vertex> one_cycles;
  std::vector<Edge> two_cycles;
  std::vector<std::array<Vertex, 3>> delta_cliques;
  bool eligible = false;
};

// ---------------------------------------------------------------------------
// Documents

/// Parses either a JSON graph document (first non-blank character '{') or
/// an edge list. Edge-list lines are `src -> dst`, a bare `label` declares
/// a vertex, `#` starts a comment. Vertex order is order of first mention.
Digraph parse_digraph(std::string_view text);
Digraph parse_edge_list(std::string_view text);
Digraph parse_graph_json(std::string_view text);

std::string to_edge_list(const Digraph& g);
std::string to_graph_json(const Digraph& g);
std::string to_dot(const Digraph& g, std::string_view name = "G");

// ---------------------------------------------------------------------------
// Predicates

/// Strong connectivity; vacuously true for a single vertex.
bool is_transitive(const Digraph& g);

/// Unordered pairs {i, j} (i < j) with edges both ways.
std::vector<Edge> find_two_cycles(const Digraph& g);

/// Triples (i, j, k) with i->j, j->k and i->k, lexicographically ordered.
std::vector<std::array<Vertex, 3>> find_delta_cliques(const Digraph& g);

/// Splitting vertices mapped to their order k >= 2.
std::map<Vertex, std::size_t> splitting_vertices(const Digraph& g);

/// Induced subgraph on `subset`, vertices in the order given. Labels carry
/// over (defaults are materialized so the subgraph keeps the parent's names).
Digraph induced_subgraph(const Digraph& g, const std::vector<Vertex>& subset);

/// Canonical decomposition into simple cycles: for every edge u->v the
/// shortest cycle through it, closing with the lexicographically smallest
/// shortest path v ~> u. Cycles are rotated to start at their smallest
/// vertex, deduplicated and sorted. Throws GraphError if g is not transitive.
std::vector<Cycle> cycle_decomposition(const Digraph& g);

GateReport realization_gate(const Digraph& g);

/// Strongly connected components (Tarjan), each sorted, ordered by their
/// smallest vertex.
std::vector<std::vector<Vertex>> strongly_connected_components(const Digraph& g);

}  // namespace heteronet
