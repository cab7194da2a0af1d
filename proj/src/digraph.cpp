#include "heteronet/digraph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace heteronet {

namespace {

void validate_label(const std::string& label) {
  if (label.empty()) throw GraphError("empty vertex label");
  for (char c : label) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '#' || c == '"') {
      throw GraphError("vertex label '" + label + "' contains a reserved character");
    }
  }
  if (label.find("->") != std::string::npos) {
    throw GraphError("vertex label '" + label + "' contains '->'");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Digraph::Digraph(std::size_t n) : n_(n), adj_(n * n, 0) {
  if (n == 0) throw GraphError("a digraph needs at least one vertex");
}

Digraph::Digraph(std::size_t n, std::vector<std::string> labels) : Digraph(n) {
  if (labels.empty()) return;
  if (labels.size() != n) throw GraphError("label count does not match vertex count");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    validate_label(l);
    if (!seen.insert(l).second) throw GraphError("duplicate vertex label '" + l + "'");
  }
  labels_ = std::move(labels);
}

Digraph Digraph::from_edges(std::size_t n, const std::vector<Edge>& edges,
                            std::vector<std::string> labels) {
  Digraph g(n, std::move(labels));
  for (auto [a, b] : edges) g.add_edge(a, b);
  return g;
}

void Digraph::check_vertex(Vertex v) const {
  if (v >= n_) throw GraphError("vertex index " + std::to_string(v) + " out of range");
}

bool Digraph::has_edge(Vertex from, Vertex to) const {
  check_vertex(from);
  check_vertex(to);
  return adj_[from * n_ + to] != 0;
}

void Digraph::add_edge(Vertex from, Vertex to) {
  check_vertex(from);
  check_vertex(to);
  if (from == to) throw GraphError("1-cycle at vertex " + label(from));
  adj_[from * n_ + to] = 1;
}

std::string Digraph::label(Vertex v) const {
  check_vertex(v);
  return labels_.empty() ? std::to_string(v + 1) : labels_[v];
}

std::optional<Vertex> Digraph::find(std::string_view name) const {
  for (Vertex v = 0; v < n_; ++v) {
    if (label(v) == name) return v;
  }
  return std::nullopt;
}

std::vector<Vertex> Digraph::out_neighbors(Vertex v) const {
  check_vertex(v);
  std::vector<Vertex> out;
  for (Vertex w = 0; w < n_; ++w) {
    if (adj_[v * n_ + w]) out.push_back(w);
  }
  return out;
}

std::vector<Vertex> Digraph::in_neighbors(Vertex v) const {
  check_vertex(v);
  std::vector<Vertex> in;
  for (Vertex w = 0; w < n_; ++w) {
    if (adj_[w * n_ + v]) in.push_back(w);
  }
  return in;
}

std::size_t Digraph::out_degree(Vertex v) const { return out_neighbors(v).size(); }

std::size_t Digraph::edge_count() const {
  return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
}

std::vector<Edge> Digraph::edges() const {
  std::vector<Edge> out;
  for (Vertex i = 0; i < n_; ++i) {
    for (Vertex j = 0; j < n_; ++j) {
      if (adj_[i * n_ + j]) out.emplace_back(i, j);
    }
  }
  return out;
}

bool operator==(const Digraph& a, const Digraph& b) {
  if (a.n_ != b.n_ || a.adj_ != b.adj_) return false;
  for (Vertex v = 0; v < a.n_; ++v) {
    if (a.label(v) != b.label(v)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Documents

Digraph parse_edge_list(std::string_view text) {
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::string>> edges;
  auto declare = [&](std::string_view name) {
    std::string s(name);
    validate_label(s);
    if (std::find(names.begin(), names.end(), s) == names.end()) names.push_back(s);
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto arrow = line.find("->");
    if (arrow == std::string_view::npos) {
      if (line.find_first_of(" \t") != std::string_view::npos) {
        throw GraphError("line " + std::to_string(line_no) + ": expected 'src -> dst'");
      }
      declare(line);
      continue;
    }
    auto src = trim(line.substr(0, arrow));
    auto dst = trim(line.substr(arrow + 2));
    if (src.empty() || dst.empty() || dst.find("->") != std::string_view::npos ||
        src.find_first_of(" \t") != std::string_view::npos ||
        dst.find_first_of(" \t") != std::string_view::npos) {
      throw GraphError("line " + std::to_string(line_no) + ": expected 'src -> dst'");
    }
    if (src == dst) throw GraphError("1-cycle at vertex " + std::string(src));
    declare(src);
    declare(dst);
    edges.emplace_back(std::string(src), std::string(dst));
  }
  if (names.empty()) throw GraphError("graph document declares no vertices");

  Digraph g(names.size(), names);
  for (const auto& [s, d] : edges) g.add_edge(*g.find(s), *g.find(d));
  return g;
}

Digraph parse_graph_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw GraphError(std::string("malformed graph JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("vertices") || !doc["vertices"].is_array()) {
    throw GraphError("graph JSON needs a \"vertices\" array");
  }
  std::vector<std::string> names;
  for (const auto& v : doc["vertices"]) {
    if (!v.is_string()) throw GraphError("vertex labels must be strings");
    names.push_back(v.get<std::string>());
  }
  if (names.empty()) throw GraphError("graph document declares no vertices");
  Digraph g(names.size(), names);

  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw GraphError("\"edges\" must be an array");
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        throw GraphError("each edge must be a [src, dst] pair of labels");
      }
      const auto src = e[0].get<std::string>();
      const auto dst = e[1].get<std::string>();
      const auto a = g.find(src);
      const auto b = g.find(dst);
      if (!a) throw GraphError("dangling label '" + src + "' in edge list");
      if (!b) throw GraphError("dangling label '" + dst + "' in edge list");
      g.add_edge(*a, *b);
    }
  }
  return g;
}

Digraph parse_digraph(std::string_view text) {
  auto t = trim(text);
  if (!t.empty() && t.front() == '{') return parse_graph_json(t);
  return parse_edge_list(text);
}

std::string to_edge_list(const Digraph& g) {
  std::ostringstream os;
  for (Vertex v = 0; v < g.size(); ++v) os << g.label(v) << '\n';
  for (auto [a, b] : g.edges()) os << g.label(a) << " -> " << g.label(b) << '\n';
  return os.str();
}

std::string to_graph_json(const Digraph& g) {
  nlohmann::json doc;
  doc["vertices"] = nlohmann::json::array();
  for (Vertex v = 0; v < g.size(); ++v) doc["vertices"].push_back(g.label(v));
  doc["edges"] = nlohmann::json::array();
  for (auto [a, b] : g.edges()) doc["edges"].push_back({g.label(a), g.label(b)});
  return doc.dump(2) + "\n";
}

std::string to_dot(const Digraph& g, std::string_view name) {
  std::ostringstream os;
  os << "digraph " << name << " {\n";
  for (Vertex v = 0; v < g.size(); ++v) os << "  \"" << g.label(v) << "\";\n";
  for (auto [a, b] : g.edges()) {
    os << "  \"" << g.label(a) << "\" -> \"" << g.label(b) << "\";\n";
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Predicates

namespace {

std::vector<bool> reachable_from(const Digraph& g, Vertex start, bool reverse) {
  std::vector<bool> seen(g.size(), false);
  std::vector<Vertex> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    Vertex v = stack.back();
    stack.pop_back();
    for (Vertex w : reverse ? g.in_neighbors(v) : g.out_neighbors(v)) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

// BFS distances to `target` along edges (i.e. on the reversed graph).
std::vector<std::size_t> distances_to(const Digraph& g, Vertex target) {
  constexpr auto inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.size(), inf);
  std::deque<Vertex> queue{target};
  dist[target] = 0;
  while (!queue.empty()) {
    Vertex v = queue.front();
    queue.pop_front();
    for (Vertex w : g.in_neighbors(v)) {
      if (dist[w] == inf) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

Cycle rotate_to_min(Cycle c) {
  auto it = std::min_element(c.begin(), c.end());
  std::rotate(c.begin(), it, c.end());
  return c;
}

}  // namespace

bool is_transitive(const Digraph& g) {
  const auto fwd = reachable_from(g, 0, false);
  const auto bwd = reachable_from(g, 0, true);
  for (Vertex v = 0; v < g.size(); ++v) {
    if (!fwd[v] || !bwd[v]) return false;
  }
  return true;
}

std::vector<Edge> find_two_cycles(const Digraph& g) {
  std::vector<Edge> out;
  for (Vertex i = 0; i < g.size(); ++i) {
    for (Vertex j = i + 1; j < g.size(); ++j) {
      if (g.has_edge(i, j) && g.has_edge(j, i)) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::array<Vertex, 3>> find_delta_cliques(const Digraph& g) {
  std::vector<std::array<Vertex, 3>> out;
  const auto n = g.size();
  for (Vertex i = 0; i < n; ++i) {
    for (Vertex j = 0; j < n; ++j) {
      if (!g.has_edge(i, j)) continue;
      for (Vertex k = 0; k < n; ++k) {
        if (k != i && g.has_edge(j, k) && g.has_edge(i, k)) out.push_back({i, j, k});
      }
    }
  }
  return out;
}

std::map<Vertex, std::size_t> splitting_vertices(const Digraph& g) {
  std::map<Vertex, std::size_t> out;
  for (Vertex w = 0; w < g.size(); ++w) {
    const auto targets = g.out_neighbors(w);
    if (targets.size() < 2) continue;
    bool only_spokes = true;
    for (Vertex a : targets) {
      if (g.has_edge(a, w)) only_spokes = false;
      for (Vertex b : targets) {
        if (a != b && g.has_edge(a, b)) only_spokes = false;
      }
    }
    if (only_spokes) out[w] = targets.size();
  }
  return out;
}

Digraph induced_subgraph(const Digraph& g, const std::vector<Vertex>& subset) {
  std::vector<std::string> names;
  std::set<Vertex> seen;
  for (Vertex v : subset) {
    if (v >= g.size()) throw GraphError("subset contains unknown vertex " + std::to_string(v));
    if (!seen.insert(v).second) throw GraphError("subset lists a vertex twice");
    names.push_back(g.label(v));
  }
  Digraph sub(subset.size(), std::move(names));
  for (std::size_t a = 0; a < subset.size(); ++a) {
    for (std::size_t b = 0; b < subset.size(); ++b) {
      if (a != b && g.has_edge(subset[a], subset[b])) sub.add_edge(a, b);
    }
  }
  return sub;
}

std::vector<Cycle> cycle_decomposition(const Digraph& g) {
  if (!is_transitive(g)) throw GraphError("graph is not transitive; no covering cycle decomposition");
  std::set<Cycle> cycles;
  for (auto [u, v] : g.edges()) {
    // Greedy descent along BFS layers gives the lexicographically smallest
    // shortest path v ~> u.
    const auto dist = distances_to(g, u);
    Cycle c{u, v};
    Vertex cur = v;
    while (cur != u) {
      for (Vertex w : g.out_neighbors(cur)) {
        if (dist[w] + 1 == dist[cur]) {
          cur = w;
          break;
        }
      }
      if (cur != u) c.push_back(cur);
    }
    cycles.insert(rotate_to_min(std::move(c)));
  }
  return {cycles.begin(), cycles.end()};
}

GateReport realization_gate(const Digraph& g) {
  GateReport r;
  r.transitive = is_transitive(g);
  for (Vertex v = 0; v < g.size(); ++v) {
    if (g.has_edge(v, v)) r.one_cycles.push_back(v);
  }
  r.two_cycles = find_two_cycles(g);
  r.delta_cliques = find_delta_cliques(g);
  r.eligible = r.transitive && r.one_cycles.empty() && r.two_cycles.empty() &&
               r.delta_cliques.empty();
  return r;
}

std::vector<std::vector<Vertex>> strongly_connected_components(const Digraph& g) {
  const auto n = g.size();
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, unset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<Vertex> stack;
  std::vector<std::vector<Vertex>> comps;
  std::size_t counter = 0;

  std::function<void(Vertex)> visit = [&](Vertex v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (Vertex w : g.out_neighbors(v)) {
      if (index[w] == unset) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<Vertex> comp;
      Vertex w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
  };
  for (Vertex v = 0; v < n; ++v) {
    if (index[v] == unset) visit(v);
  }
  std::sort(comps.begin(), comps.end());
  return comps;
}

}  // namespace heteronet
