// heteronet: graph -> realized vector field -> trajectories -> switching
// statistics, one subcommand per stage.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "heteronet/analysis.hpp"
#include "heteronet/digraph.hpp"
#include "heteronet/integrate.hpp"
#include "heteronet/realize.hpp"
#include "heteronet/report.hpp"
#include "heteronet/rng.hpp"

namespace fs = std::filesystem;
using namespace heteronet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIneligible = 2;
constexpr int kExitUnresolved = 3;

// Raised for conditions with a dedicated exit code.
struct ExitWith {
  int code;
  std::string message;
};

std::string absolute_path(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

std::string file_hash(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// Files produced by one run, written only after the whole run succeeded.
struct Outputs {
  std::vector<std::pair<fs::path, std::string>> files;
  void add(fs::path p, std::string content) { files.emplace_back(std::move(p), std::move(content)); }
};

Digraph load_graph(const std::string& path) { return parse_digraph(read_file(path)); }

RealizedSystem load_system(const std::string& path) {
  return system_from_manifest(Json::parse(read_file(path)));
}

std::string vertex_list(const Digraph& g, const std::vector<Vertex>& vs) {
  std::string s = "(";
  for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + g.label(vs[i]);
  return s + ")";
}

// ---------------------------------------------------------------------------
// Commands. Each takes its full parameter set as JSON so that --verify can
// replay it from a run manifest, and returns the files it produced.

int cmd_analyze(const Json& p, const std::string& out, Outputs& files, const std::string& hash) {
  const auto g = load_graph(p.at("graph"));
  const auto gate = realization_gate(g);
  const auto split = splitting_vertices(g);

  std::ostringstream text;
  text << "vertices: " << g.size() << "  edges: " << g.edge_count() << "\n";
  text << "transitive: " << (gate.transitive ? "yes" : "no") << "\n";
  text << "2-cycles: " << gate.two_cycles.size() << "  delta-cliques: " << gate.delta_cliques.size()
       << "\n";
  for (const auto& c : gate.delta_cliques) {
    text << "  delta-clique " << vertex_list(g, {c[0], c[1], c[2]}) << "\n";
  }
  for (const auto& [v, order] : split) {
    text << "splitting vertex " << g.label(v) << " of order " << order << "\n";
  }
  Json cycles = Json::array();
  if (gate.transitive) {
    text << "cycles:";
    for (const auto& c : cycle_decomposition(g)) {
      text << " " << vertex_list(g, c);
      Json cj = Json::array();
      for (Vertex v : c) cj.push_back(g.label(v));
      cycles.push_back(cj);
    }
    text << "\n";
  }
  text << "eligible: " << (gate.eligible ? "yes" : "no") << "\n";
  std::cout << text.str();

  if (!out.empty()) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "analysis";
    j["run_hash"] = hash;
    j["graph"] = Json::parse(to_graph_json(g));
    j["gate"] = gate_json(g, gate);
    Json sj = Json::object();
    for (const auto& [v, order] : split) sj[g.label(v)] = order;
    j["splitting_vertices"] = sj;
    j["cycles"] = cycles;
    files.add(out, dump(j));
    if (p.value("dot", false)) files.add(out + ".dot", to_dot(g));
  }
  return gate.eligible ? kExitOk : kExitIneligible;
}

int cmd_realize(const Json& p, const std::string& out, Outputs& files, const std::string& hash) {
  const auto g = load_graph(p.at("graph"));
  RealizationParams rp{p.at("epsilon"), p.at("eta")};
  rp.validate();
  const bool force = p.at("force");
  if (!force && !realization_gate(g).eligible) {
    throw ExitWith{kExitIneligible,
                   "graph fails the realization gate (use --force for an unverified system)"};
  }
  RealizedSystem sys(g, rp, force);
  auto j = system_manifest_json(sys, p.at("graph"));
  j["run_hash"] = hash;
  files.add(out, dump(j));
  std::cout << "realized " << g.size() << " nodes, " << (sys.verified() ? "verified" : "unverified")
            << "\n";
  return kExitOk;
}

int cmd_simulate(const Json& p, const std::string& out, Outputs& files, const std::string& hash) {
  const auto sys = load_system(p.at("system"));
  const std::uint64_t seed = p.at("seed");
  IntegratorConfig cfg;
  cfg.step = p.at("step");
  cfg.max_time = p.at("time");
  cfg.validate();
  const std::size_t every = p.at("every");
  if (every == 0) throw std::invalid_argument("--every must be positive");

  State x0;
  if (p.contains("x0")) {
    x0 = p.at("x0").get<State>();
    if (x0.size() != sys.dim()) throw std::invalid_argument("--x0 needs one value per node");
  } else {
    const std::size_t node = p.at("node");
    if (node < 1 || node > sys.dim()) throw std::invalid_argument("--node out of range");
    x0 = sample_unstable_sphere(sys, node - 1, p.at("perturb"), 1, derive_seed(seed, 1)).front();
  }

  StatePredicate section;
  if (p.contains("section")) section = parse_section_predicate(p.at("section").get<std::string>(), sys.dim());

  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> sec_times;
  std::vector<State> sec_states;
  bool inside = false;
  std::size_t count = 0;
  auto record = [&](double t, std::span<const double> x) {
    if (count++ % every == 0) {
      times.push_back(t);
      states.emplace_back(x.begin(), x.end());
    }
    if (section) {
      const bool now = section(x);
      if (now && !inside) {
        sec_times.push_back(t);
        sec_states.emplace_back(x.begin(), x.end());
      }
      inside = now;
    }
  };

  Terminal terminal;
  const bool sde = p.contains("alpha");
  if (sde) {
    NoiseConfig noise{p.at("alpha"), derive_seed(seed, 2)};
    terminal = integrate_sde_observe(sys, x0, cfg, noise, record);
  } else {
    const auto traj = integrate_ode(sys, x0, cfg);
    for (std::size_t r = 0; r < traj.states.size(); ++r) record(traj.times[r], traj.states[r]);
    terminal = traj.terminal;
  }

  std::ostringstream csv;
  write_states_csv(csv, sys.dim(), times, states);
  files.add(out, csv.str());

  Json side;
  side["schema_version"] = kSchemaVersion;
  side["kind"] = "trajectory";
  side["run_hash"] = hash;
  side["integrator"] = sde ? "heun" : "rk4";
  side["initial_state"] = x0;
  side["terminal"] = to_string(terminal.kind);
  if (terminal.node) side["terminal_node"] = sys.graph().label(*terminal.node);
  side["steps_observed"] = count;
  side["rows_written"] = times.size();
  if (section) {
    side["section"] = p.at("section");
    side["section_crossings"] = sec_times.size();
    std::ostringstream sec;
    write_states_csv(sec, sys.dim(), sec_times, sec_states);
    files.add(out + ".section.csv", sec.str());
  }
  files.add(out + ".terminal.json", dump(side));
  std::cout << "terminal: " << to_string(terminal.kind) << ", " << times.size() << " rows";
  if (section) std::cout << ", " << sec_times.size() << " section crossings";
  std::cout << "\n";
  return kExitOk;
}

int cmd_markov(const Json& p, const std::string& out, Outputs& files, const std::string& hash) {
  const auto sys = load_system(p.at("system"));
  const auto& g = sys.graph();
  const std::uint64_t seed = p.at("seed");
  const std::size_t m = p.at("samples");
  SamplingConfig cfg;
  cfg.delta = p.at("delta");
  cfg.integrator.step = p.at("step");
  cfg.integrator.max_time = p.at("max_time");
  cfg.integrator.convergence_tol = p.at("convergence_tol");
  cfg.integrator.node_radius = p.at("node_radius");
  Thresholds th;
  th.p_min = p.at("p_min");
  th.escape_max = p.at("escape_max");
  th.r_excl = p.at("r_excl");
  th.unresolved_max = p.at("unresolved_max");
  th.validate();
  cfg.validate();
  if (m == 0) throw std::invalid_argument("--samples must be positive");

  const auto estimates = estimate_all(sys, m, cfg, seed);
  SwitchingChain chain;
  try {
    chain = build_switching_chain(estimates, th);
  } catch (const AnalysisError& e) {
    std::ostringstream msg;
    msg << e.what();
    for (const auto& est : estimates) {
      msg << "\n  " << g.label(est.source) << ": unresolved " << est.unresolved_count << " (separating "
          << est.separating_count << "), escape " << est.escape_count << " of " << est.total;
    }
    throw ExitWith{kExitUnresolved, msg.str()};
  }

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "classification";
  j["run_hash"] = hash;
  j["system"] = {{"status", sys.verified() ? "verified" : "unverified"},
                 {"epsilon", sys.params().epsilon},
                 {"eta", sys.params().eta},
                 {"graph", Json::parse(to_graph_json(g))}};
  j["seed"] = seed;
  j["samples"] = m;
  j["sampling"] = sampling_json(cfg);
  j["thresholds"] = thresholds_json(th);
  j["equability_rule"] =
      "every out-neighbour in the graph receives a sphere-measure share of at least p_min";
  j["estimates"] = Json::array();
  j["classification"] = Json::array();
  for (Vertex v = 0; v < sys.dim(); ++v) {
    j["estimates"].push_back(estimate_json(sys, estimates[v]));
    j["classification"].push_back(classification_json(sys, classify_node(sys, v, estimates[v], th)));
  }
  j["chain"] = chain_json(sys, chain);
  try {
    const auto core = equable_core(sys, estimates, th);
    Json edges = Json::array();
    for (const auto& [a, b] : core.edges()) edges.push_back({g.label(a), g.label(b)});
    j["sigma_star"] = {{"edges", edges}, {"equals_input", core == g}};
  } catch (const AnalysisError& e) {
    j["sigma_star"] = {{"error", e.what()}};
  }
  if (m < 1000) {
    j["warning"] = "fewer than 1000 samples per node; error bars are wide";
    std::cerr << "warning: fewer than 1000 samples per node; error bars are wide\n";
  }
  files.add(out, dump(j));
  files.add(out + ".chain.csv", chain_csv(sys, chain));

  for (Vertex v = 0; v < sys.dim(); ++v) {
    const auto c = classify_node(sys, v, estimates[v], th);
    std::cout << g.label(v) << ":";
    for (const auto& [k, share] : c.target_fractions) std::cout << " ->" << g.label(k) << " " << share;
    std::cout << "  almost-complete " << (c.almost_complete ? "yes" : "no") << ", equable "
              << (c.equable ? "yes" : "no") << ", exclusive " << (c.exclusive ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

int cmd_report(const Json& p, const std::string& out, Outputs& files, const std::string&) {
  const auto doc = Json::parse(read_file(p.at("input")));
  std::ostringstream text;
  const std::string kind = doc.value("kind", "");
  if (kind == "system") {
    text << "system (" << doc.at("status").get<std::string>() << "), epsilon "
         << doc.at("epsilon").get<double>() << ", eta " << doc.at("eta").get<double>() << "\n";
    text << "annulus: [" << doc["annulus"]["inner"].get<double>() << ", "
         << doc["annulus"]["outer"].get<double>() << "]\n";
    for (const auto& e : doc.at("equilibria")) {
      text << "  " << e.at("kind").get<std::string>();
      if (e.contains("node")) text << " " << e["node"].get<std::string>();
      if (e.contains("owner")) text << " in Omega_" << e["owner"].get<std::string>();
      text << "  eigenvalues " << e.at("eigenvalues").dump();
      if (e.contains("squared_support")) text << "  squares " << e["squared_support"].dump();
      text << "\n";
    }
  } else if (kind == "classification") {
    text << "classification, " << doc.at("samples").get<std::size_t>() << " samples per node, seed "
         << doc.at("seed").get<std::uint64_t>() << "\n";
    for (const auto& c : doc.at("classification")) {
      text << "  " << c.at("node").get<std::string>() << " dim " << c.at("unstable_dim").get<int>()
           << " shares " << c.at("target_fractions").dump() << " almost-complete "
           << c.at("almost_complete").get<bool>() << " equable " << c.at("equable").get<bool>()
           << " exclusive " << c.at("exclusive").get<bool>() << "\n";
    }
    text << "Sigma*: " << doc.at("sigma_star").dump() << "\n";
  } else {
    throw std::invalid_argument("report expects a system manifest or classification report");
  }
  std::cout << text.str();
  if (!out.empty()) files.add(out, text.str());
  return kExitOk;
}

using Command = int (*)(const Json&, const std::string&, Outputs&, const std::string&);

Command command_by_name(const std::string& name) {
  if (name == "analyze") return cmd_analyze;
  if (name == "realize") return cmd_realize;
  if (name == "simulate") return cmd_simulate;
  if (name == "markov") return cmd_markov;
  if (name == "report") return cmd_report;
  throw std::invalid_argument("unknown command '" + name + "'");
}

// Input files recorded in a parameter set.
std::map<std::string, std::string> input_hashes(const Json& params) {
  std::map<std::string, std::string> in;
  for (const char* key : {"graph", "system", "input"}) {
    if (params.contains(key)) {
      const std::string path = params.at(key);
      in[path] = file_hash(path);
    }
  }
  return in;
}

// Runs a command and, on success, writes its files plus the run manifest.
int execute(const std::string& name, const Json& params, std::uint64_t seed, const std::string& out) {
  RunManifest run;
  run.command = name;
  run.params = params;
  run.seed = seed;
  run.inputs = input_hashes(params);
  Outputs files;
  const int code = command_by_name(name)(params, out, files, run.hash());
  if (files.files.empty()) return code;
  for (const auto& [path, content] : files.files) run.outputs.push_back(absolute_path(path.string()));
  for (const auto& [path, content] : files.files) atomic_write(path, content);
  atomic_write(out + ".run.json", dump(run.to_json()));
  return code;
}

int verify(const std::string& manifest_path) {
  const auto doc = Json::parse(read_file(manifest_path));
  const auto run = RunManifest::from_json(doc);
  if (run.version != kToolVersion) {
    std::cerr << "manifest written by version " << run.version << ", this is " << kToolVersion << "\n";
    return kExitError;
  }
  for (const auto& [path, h] : run.inputs) {
    if (file_hash(path) != h) {
      std::cerr << "input changed since the run: " << path << "\n";
      return kExitError;
    }
  }
  if (run.outputs.empty()) throw std::invalid_argument("manifest lists no outputs");
  const std::string primary = run.outputs.front();
  Outputs files;
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  try {
    command_by_name(run.command)(run.params, primary, files, run.hash());
  } catch (...) {
    std::cout.rdbuf(old);
    throw;
  }
  std::cout.rdbuf(old);

  bool same = files.files.size() == run.outputs.size();
  for (const auto& [path, content] : files.files) {
    const std::string p = absolute_path(path.string());
    if (!fs::exists(p) || read_file(p) != content) {
      std::cout << "MISMATCH " << p << "\n";
      same = false;
    } else {
      std::cout << "identical " << p << "\n";
    }
  }
  std::cout << (same ? "verified" : "verification failed") << " (run " << run.hash() << ")\n";
  return same ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Realize digraphs as heteroclinic networks and analyse their switching dynamics",
               "heteronet"};
  app.require_subcommand(0, 1);
  std::string verify_path;
  app.add_option("--verify", verify_path, "Re-run a run manifest and byte-compare its outputs");

  std::string out;
  std::uint64_t seed = 1;

  // analyze
  auto* an = app.add_subcommand("analyze", "Gate report, splitting vertices and cycles of a graph");
  std::string an_graph;
  bool an_dot = false;
  std::string an_out;
  an->add_option("graph", an_graph, "Graph file (edge list or JSON)")->required();
  an->add_option("-o,--out", an_out, "Write the structural summary as JSON");
  an->add_flag("--dot", an_dot, "Also write <out>.dot");

  // realize
  auto* re = app.add_subcommand("realize", "Write the system manifest for a graph");
  std::string re_graph;
  double epsilon = 0.02, eta = 0.05;
  bool force = false;
  re->add_option("graph", re_graph, "Graph file")->required();
  re->add_option("--epsilon", epsilon, "Expanding eigenvalue along connections")->capture_default_str();
  re->add_option("--eta", eta, "Contracting strength off connections")->capture_default_str();
  re->add_flag("--force", force, "Realize graphs that fail the gate (marked unverified)");
  re->add_option("-o,--out", out, "Output manifest")->required();

  // simulate
  auto* si = app.add_subcommand("simulate", "Integrate one trajectory of a realized system");
  std::string si_system, si_x0, si_section;
  std::size_t si_node = 0, si_every = 1;
  double perturb = 1e-3, alpha = -1.0, step = 0.01, horizon = 1000.0;
  si->add_option("system", si_system, "System manifest")->required();
  auto* x0_opt = si->add_option("--x0", si_x0, "Initial state, comma separated");
  auto* node_opt = si->add_option("--node", si_node, "Start near node j (1-based)");
  x0_opt->excludes(node_opt);
  si->add_option("--perturb", perturb, "Distance from the node along its unstable sphere")
      ->capture_default_str();
  si->add_option("--sde", alpha, "Noise amplitude; switches to stochastic Heun");
  si->add_option("--step", step, "Time step")->capture_default_str();
  si->add_option("--time", horizon, "Final time")->capture_default_str();
  si->add_option("--every", si_every, "Write every k-th state")->capture_default_str();
  si->add_option("--section", si_section, "Section predicate, e.g. \"x1^2<0.1\"");
  si->add_option("--seed", seed, "Master seed")->capture_default_str();
  si->add_option("-o,--out", out, "Trajectory CSV")->required();

  // markov
  auto* mk = app.add_subcommand("markov", "Estimate the switching chain and classify nodes");
  std::string mk_system;
  std::size_t samples = 10000;
  double delta = 1e-3, mk_step = 0.01, max_time = 5000.0, tol = 1e-9, radius = 0.05;
  Thresholds th;
  mk->add_option("system", mk_system, "System manifest")->required();
  mk->add_option("-m,--samples", samples, "Samples per node")->capture_default_str();
  mk->add_option("--delta", delta, "Radius of the unstable sphere")->capture_default_str();
  mk->add_option("--step", mk_step, "RK4 step")->capture_default_str();
  mk->add_option("--max-time", max_time, "Integration limit per sample")->capture_default_str();
  mk->add_option("--tol", tol, "Convergence tolerance on |f|")->capture_default_str();
  mk->add_option("--node-radius", radius, "Node ball radius")->capture_default_str();
  mk->add_option("--p-min", th.p_min, "Smallest positive share")->capture_default_str();
  mk->add_option("--escape-max", th.escape_max, "Almost-complete threshold")->capture_default_str();
  mk->add_option("--r-excl", th.r_excl, "Exclusivity clearance")->capture_default_str();
  mk->add_option("--unresolved-max", th.unresolved_max, "Refuse the chain above this share")
      ->capture_default_str();
  mk->add_option("--seed", seed, "Master seed")->capture_default_str();
  mk->add_option("-o,--out", out, "Classification report JSON")->required();

  // report
  auto* rp = app.add_subcommand("report", "Summarize a system manifest or classification report");
  std::string rp_input, rp_out;
  rp->add_option("input", rp_input, "JSON document")->required();
  rp->add_option("-o,--out", rp_out, "Also write the summary here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (!verify_path.empty()) return verify(verify_path);
    Json params;
    if (an->parsed()) {
      params = {{"graph", absolute_path(an_graph)}, {"dot", an_dot}};
      return execute("analyze", params, 0, an_out);
    }
    if (re->parsed()) {
      params = {{"graph", absolute_path(re_graph)}, {"epsilon", epsilon}, {"eta", eta}, {"force", force}};
      return execute("realize", params, 0, out);
    }
    if (si->parsed()) {
      params = {{"system", absolute_path(si_system)}, {"seed", seed}, {"step", step},
                {"time", horizon}, {"every", si_every}};
      if (!si_x0.empty()) {
        State x0;
        std::stringstream ss(si_x0);
        std::string tok;
        while (std::getline(ss, tok, ',')) x0.push_back(std::stod(tok));
        params["x0"] = x0;
      } else if (si_node > 0) {
        params["node"] = si_node;
        params["perturb"] = perturb;
      } else {
        throw std::invalid_argument("simulate needs --x0 or --node");
      }
      if (alpha >= 0.0) params["alpha"] = alpha;
      if (!si_section.empty()) params["section"] = si_section;
      return execute("simulate", params, seed, out);
    }
    if (mk->parsed()) {
      params = {{"system", absolute_path(mk_system)},
                {"seed", seed},
                {"samples", samples},
                {"delta", delta},
                {"step", mk_step},
                {"max_time", max_time},
                {"convergence_tol", tol},
                {"node_radius", radius},
                {"p_min", th.p_min},
                {"escape_max", th.escape_max},
                {"r_excl", th.r_excl},
                {"unresolved_max", th.unresolved_max}};
      return execute("markov", params, seed, out);
    }
    if (rp->parsed()) {
      params = {{"input", absolute_path(rp_input)}};
      return execute("report", params, 0, rp_out);
    }
    std::cout << app.help();
    return kExitError;
  } catch (const ExitWith& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
