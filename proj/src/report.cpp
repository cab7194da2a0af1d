#include "heteronet/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace heteronet {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string RunManifest::hash() const {
  Json key;
  key["command"] = command;
  key["params"] = params;
  key["seed"] = seed;
  key["version"] = version;
  key["inputs"] = Json::array();
  for (const auto& [path, h] : inputs) key["inputs"].push_back(h);
  return hex64(fnv1a64(key.dump()));
}

Json RunManifest::to_json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["version"] = version;
  j["seed"] = seed;
  j["params"] = params;
  j["inputs"] = Json::object();
  for (const auto& [path, h] : inputs) j["inputs"][path] = h;
  j["outputs"] = outputs;
  j["run_hash"] = hash();
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.params = j.at("params");
  for (const auto& [path, h] : j.at("inputs").items()) m.inputs[path] = h.get<std::string>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  return m;
}

// ---------------------------------------------------------------------------

namespace {

Json labels_of(const Digraph& g, const std::vector<Vertex>& vs) {
  Json a = Json::array();
  for (Vertex v : vs) a.push_back(g.label(v));
  return a;
}

}  // namespace

Json gate_json(const Digraph& g, const GateReport& gate) {
  Json j;
  j["transitive"] = gate.transitive;
  j["one_cycles"] = labels_of(g, gate.one_cycles);
  j["two_cycles"] = Json::array();
  for (const auto& [a, b] : gate.two_cycles) j["two_cycles"].push_back({g.label(a), g.label(b)});
  j["delta_cliques"] = Json::array();
  for (const auto& c : gate.delta_cliques) {
    j["delta_cliques"].push_back({g.label(c[0]), g.label(c[1]), g.label(c[2])});
  }
  j["eligible"] = gate.eligible;
  return j;
}

Json equilibrium_json(const RealizedSystem& sys, const EquilibriumInfo& e) {
  Json j;
  j["kind"] = to_string(e.kind);
  j["location"] = e.location;
  j["support"] = labels_of(sys.graph(), e.support);
  j["eigenvalues"] = e.eigenvalues;
  j["unstable_dimension"] = e.unstable_dimension();
  if (e.stability) j["omega_stability"] = to_string(*e.stability);
  if (e.owner) j["owner"] = sys.graph().label(*e.owner);
  if (e.kind == EquilibriumKind::SeparatingNode) {
    j["numeric"] = e.numeric;
    j["residual"] = e.residual;
    Json sq = Json::array();
    for (Vertex i : e.support) sq.push_back(e.location[i] * e.location[i]);
    j["squared_support"] = sq;
  }
  return j;
}

Json system_manifest_json(const RealizedSystem& sys, const std::string& graph_source) {
  const auto& g = sys.graph();
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "system";
  j["status"] = sys.verified() ? "verified" : "unverified";
  j["graph_source"] = graph_source;
  j["graph"] = Json::parse(to_graph_json(g));
  j["epsilon"] = sys.params().epsilon;
  j["eta"] = sys.params().eta;
  j["gate"] = gate_json(g, sys.gate());
  const auto ann = absorbing_annulus(sys);
  j["annulus"] = {{"inner", ann.inner}, {"outer", ann.outer}};
  Json split = Json::object();
  for (const auto& [v, order] : splitting_vertices(g)) split[g.label(v)] = order;
  j["splitting_vertices"] = split;

  Json eq = Json::array();
  eq.push_back(equilibrium_json(sys, origin_equilibrium(sys)));
  for (Vertex v = 0; v < sys.dim(); ++v) {
    auto e = equilibrium_json(sys, node_eigenvalues(sys, v));
    e["node"] = g.label(v);
    eq.push_back(std::move(e));
  }
  for (Vertex v = 0; v < sys.dim(); ++v) {
    for (const auto& s : separating_equilibria(sys, v)) eq.push_back(equilibrium_json(sys, s));
  }
  j["equilibria"] = eq;
  Json coupling = Json::array();
  for (Vertex r = 0; r < sys.dim(); ++r) {
    Json row = Json::array();
    for (Vertex c = 0; c < sys.dim(); ++c) row.push_back(sys.coupling(r, c));
    coupling.push_back(row);
  }
  j["coupling"] = coupling;
  return j;
}

RealizedSystem system_from_manifest(const Json& manifest) {
  if (manifest.value("kind", "") != "system") {
    throw std::invalid_argument("not a system manifest");
  }
  if (manifest.value("schema_version", 0) != kSchemaVersion) {
    throw std::invalid_argument("unsupported system manifest schema_version");
  }
  const auto g = parse_graph_json(manifest.at("graph").dump());
  RealizationParams p;
  p.epsilon = manifest.at("epsilon").get<double>();
  p.eta = manifest.at("eta").get<double>();
  const bool unverified = manifest.value("status", "verified") == "unverified";
  return RealizedSystem(g, p, unverified);
}

// ---------------------------------------------------------------------------

Json thresholds_json(const Thresholds& t) {
  return {{"p_min", t.p_min},
          {"escape_max", t.escape_max},
          {"r_excl", t.r_excl},
          {"unresolved_max", t.unresolved_max}};
}

Json sampling_json(const SamplingConfig& c) {
  return {{"delta", c.delta},
          {"step", c.integrator.step},
          {"max_time", c.integrator.max_time},
          {"convergence_tol", c.integrator.convergence_tol},
          {"node_radius", c.integrator.node_radius}};
}

Json estimate_json(const RealizedSystem& sys, const TransitionEstimate& e) {
  const auto& g = sys.graph();
  Json j;
  j["source"] = g.label(e.source);
  j["seed"] = e.seed;
  j["total"] = e.total;
  Json counts = Json::object();
  Json probs = Json::object();
  Json errs = Json::object();
  Json clear = Json::object();
  for (const auto& [k, c] : e.counts) {
    counts[g.label(k)] = c;
    probs[g.label(k)] = e.probability(k);
    errs[g.label(k)] = e.standard_error(k);
  }
  for (const auto& [k, d] : e.clearance) clear[g.label(k)] = d;
  j["counts"] = counts;
  j["probabilities"] = probs;
  j["standard_errors"] = errs;
  j["escape_count"] = e.escape_count;
  j["escape_probability"] = e.escape_probability();
  j["unresolved_count"] = e.unresolved_count;
  j["separating_count"] = e.separating_count;
  j["clearance"] = clear;
  return j;
}

Json classification_json(const RealizedSystem& sys, const NodeClassification& c) {
  const auto& g = sys.graph();
  Json j;
  j["node"] = g.label(c.node);
  j["unstable_dim"] = c.unstable_dim;
  j["almost_complete"] = c.almost_complete;
  j["escape_fraction"] = c.escape_fraction;
  j["equable"] = c.equable;
  Json tf = Json::object();
  for (const auto& [k, p] : c.target_fractions) tf[g.label(k)] = p;
  j["target_fractions"] = tf;
  j["exclusive"] = c.exclusive;
  j["clearance"] = std::isfinite(c.clearance) ? Json(c.clearance) : Json(nullptr);
  j["splitting_order"] = c.splitting_order ? Json(*c.splitting_order) : Json(nullptr);
  if (c.low_sample) j["warning"] = "fewer than 1000 samples; error bars are wide";
  return j;
}

Json chain_json(const RealizedSystem& sys, const SwitchingChain& chain) {
  Json states = Json::array();
  for (Vertex v = 0; v < chain.nodes; ++v) states.push_back(sys.graph().label(v));
  states.push_back("escape");
  return {{"states", states}, {"matrix", chain.matrix}};
}

std::string chain_csv(const RealizedSystem& sys, const SwitchingChain& chain) {
  std::string out = "from";
  for (Vertex v = 0; v < chain.nodes; ++v) out += "," + sys.graph().label(v);
  out += ",escape\n";
  char buf[32];
  for (std::size_t r = 0; r < chain.size(); ++r) {
    out += r < chain.nodes ? sys.graph().label(r) : std::string("escape");
    for (double p : chain.matrix[r]) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace heteronet
