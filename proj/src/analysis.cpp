#include "heteronet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "heteronet/parallel.hpp"
#include "heteronet/rng.hpp"

namespace heteronet {

void Thresholds::validate() const {
  auto share = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!share(p_min) || !share(escape_max) || !share(unresolved_max)) {
    throw std::invalid_argument("thresholds must lie in [0, 1]");
  }
  if (!(r_excl > 0.0)) throw std::invalid_argument("r_excl must be positive");
}

void SamplingConfig::validate() const {
  if (!(delta > 0.0) || !(delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  integrator.validate();
  if (!(delta < integrator.node_radius)) {
    throw std::invalid_argument("delta must be smaller than node_radius");
  }
}

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Node:
      return "node";
    case OutcomeKind::Escape:
      return "escape";
    case OutcomeKind::Unresolved:
      return "unresolved";
  }
  return "unknown";
}

namespace {

// Convergence is tested between chunks of this many RK4 steps.
constexpr std::size_t kChunk = 16;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

bool is_separating_point(const RealizedSystem& sys, std::span<const double> x) {
  std::vector<Vertex> support;
  for (Vertex i = 0; i < x.size(); ++i) {
    if (std::fabs(x[i]) > 1e-3) support.push_back(i);
  }
  if (support.size() < 2) return false;
  for (Vertex j = 0; j < sys.dim(); ++j) {
    const bool inside = std::all_of(support.begin(), support.end(),
                                    [&](Vertex i) { return sys.graph().has_edge(j, i); });
    if (inside) return true;
  }
  return false;
}

struct SampleResult {
  OmegaOutcome outcome;
  std::vector<double> min_d2;  // per coordinate, squared distance to +-e_i
};

// Runs every start to its outcome on `backend`, refilling lanes as samples
// finish. Results do not depend on the lane a sample lands in.
std::vector<SampleResult> run_samples(const RealizedSystem& sys, const std::vector<State>& starts,
                                      const IntegratorConfig& cfg, kernels::Backend backend) {
  const auto& kern = kernels::batch_kernels(backend);
  const std::size_t n = sys.dim();
  const std::size_t lanes = kern.width == 1 ? 1 : 2 * kern.width;
  const std::size_t max_chunks = (cfg.max_steps() + kChunk - 1) / kChunk;
  const double bound = 10.0 * absorbing_annulus(sys).outer;
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> x(n * lanes, 0.0);
  std::vector<double> md(n * lanes, inf);
  std::vector<double> scratch(kernels::scratch_size(n, lanes));
  std::vector<std::size_t> slot(lanes, SIZE_MAX);
  std::vector<std::size_t> chunks(lanes, 0);
  std::vector<SampleResult> out(starts.size());
  State xs(n), fs(n);
  std::size_t next = 0;
  std::size_t busy = 0;

  auto load = [&](std::size_t l) {
    if (next < starts.size()) {
      for (std::size_t i = 0; i < n; ++i) {
        x[i * lanes + l] = starts[next][i];
        md[i * lanes + l] = inf;
      }
      slot[l] = next++;
      chunks[l] = 0;
      ++busy;
    } else {
      for (std::size_t i = 0; i < n; ++i) x[i * lanes + l] = 0.0;
      slot[l] = SIZE_MAX;
    }
  };
  auto finish = [&](std::size_t l, OmegaOutcome o) {
    o.time = static_cast<double>(chunks[l] * kChunk) * cfg.step;
    auto& r = out[slot[l]];
    r.outcome = o;
    r.min_d2.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.min_d2[i] = md[i * lanes + l];
    --busy;
    load(l);
  };

  for (std::size_t l = 0; l < lanes; ++l) load(l);
  while (busy > 0) {
    kern.rk4(sys.model(), x.data(), lanes, cfg.step, kChunk, md.data(), scratch.data());
    for (std::size_t l = 0; l < lanes; ++l) {
      if (slot[l] == SIZE_MAX) continue;
      ++chunks[l];
      for (std::size_t i = 0; i < n; ++i) xs[i] = x[i * lanes + l];
      if (!std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); }) ||
          norm(xs) > bound) {
        finish(l, {OutcomeKind::Escape, std::nullopt, false, 0.0});
        continue;
      }
      kernels::field(sys.model(), xs, fs);
      if (norm(fs) < cfg.convergence_tol) {
        const auto near = nearest_node(xs);
        if (near.distance < cfg.node_radius) {
          finish(l, {OutcomeKind::Node, near.node, false, 0.0});
        } else if (is_separating_point(sys, xs)) {
          finish(l, {OutcomeKind::Unresolved, std::nullopt, true, 0.0});
        } else {
          finish(l, {OutcomeKind::Escape, std::nullopt, false, 0.0});
        }
        continue;
      }
      if (chunks[l] >= max_chunks) finish(l, {OutcomeKind::Unresolved, std::nullopt, false, 0.0});
    }
  }
  return out;
}

}  // namespace

OmegaOutcome omega_node(const RealizedSystem& sys, std::span<const double> x0,
                        const IntegratorConfig& cfg) {
  cfg.validate();
  if (x0.size() != sys.dim()) throw std::invalid_argument("initial state has wrong dimension");
  State start(x0.begin(), x0.end());
  State f(sys.dim());
  kernels::field(sys.model(), start, f);
  if (norm(f) < cfg.convergence_tol) {
    const auto near = nearest_node(start);
    if (near.distance < cfg.node_radius) return {OutcomeKind::Node, near.node, false, 0.0};
    if (is_separating_point(sys, start)) return {OutcomeKind::Unresolved, std::nullopt, true, 0.0};
    return {OutcomeKind::Escape, std::nullopt, false, 0.0};
  }
  return run_samples(sys, {start}, cfg, kernels::Backend::Scalar).front().outcome;
}

Itinerary extract_itinerary(const Trajectory& traj, double node_radius) {
  Itinerary it;
  std::optional<Vertex> inside;
  for (std::size_t r = 0; r < traj.states.size(); ++r) {
    const auto near = nearest_node(traj.states[r]);
    if (near.distance < node_radius) {
      if (inside != near.node && (it.entries.empty() || it.entries.back().node != near.node)) {
        it.entries.push_back({near.node, traj.times[r]});
      }
      inside = near.node;
    } else {
      inside.reset();
    }
  }
  switch (traj.terminal.kind) {
    case TerminalKind::ConvergedToNode:
      it.terminal = OutcomeKind::Node;
      it.terminal_node = traj.terminal.node;
      break;
    case TerminalKind::ConvergedToEquilibrium:
    case TerminalKind::LeftDomain:
      it.terminal = OutcomeKind::Escape;
      break;
    case TerminalKind::MaxTime:
      it.terminal = OutcomeKind::Unresolved;
      break;
  }
  return it;
}

// ---------------------------------------------------------------------------

std::vector<State> sample_unstable_sphere(const RealizedSystem& sys, Vertex j, double delta,
                                          std::size_t m, std::uint64_t seed) {
  if (j >= sys.dim()) throw std::out_of_range("vertex out of range");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (m == 0) throw std::invalid_argument("sample count must be positive");
  const auto omega = out_subspaces(sys, j).omega;
  if (omega.empty()) {
    throw AnalysisError("node " + sys.graph().label(j) + " has no unstable directions");
  }
  std::vector<State> out;
  out.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    State x = axis_point(sys, j);
    if (omega.size() == 1) {
      x[omega.front()] = (s % 2 == 0) ? delta : -delta;
    } else {
      GaussianSource g(derive_seed(seed, j, s));
      std::vector<double> u(omega.size());
      double len = 0.0;
      do {
        len = 0.0;
        for (auto& v : u) {
          v = g.normal();
          len += v * v;
        }
      } while (len == 0.0);
      len = std::sqrt(len);
      for (std::size_t a = 0; a < omega.size(); ++a) x[omega[a]] = delta * u[a] / len;
    }
    out.push_back(std::move(x));
  }
  return out;
}

double TransitionEstimate::probability(Vertex k) const {
  if (total == 0) return 0.0;
  const auto it = counts.find(k);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

double TransitionEstimate::escape_probability() const {
  return total == 0 ? 0.0 : static_cast<double>(escape_count) / static_cast<double>(total);
}

double TransitionEstimate::unresolved_fraction() const {
  return total == 0 ? 0.0 : static_cast<double>(unresolved_count) / static_cast<double>(total);
}

double TransitionEstimate::standard_error(Vertex k) const {
  if (total == 0) return 0.0;
  const double p = probability(k);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(total));
}

TransitionEstimate estimate_transitions(const RealizedSystem& sys, Vertex j, std::size_t m,
                                        const SamplingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto samples = sample_unstable_sphere(sys, j, cfg.delta, m, seed);

  // Identical starting points (the two-point sphere) are integrated once.
  std::map<State, std::size_t> index;
  std::vector<State> unique;
  std::vector<std::size_t> which(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto [it, fresh] = index.emplace(samples[s], unique.size());
    if (fresh) unique.push_back(samples[s]);
    which[s] = it->second;
  }

  const auto backend = kernels::active_backend();
  std::vector<SampleResult> results(unique.size());
  parallel_blocks(unique.size(), 64, [&](std::size_t begin, std::size_t end) {
    const std::vector<State> part(unique.begin() + static_cast<std::ptrdiff_t>(begin),
                                  unique.begin() + static_cast<std::ptrdiff_t>(end));
    auto res = run_samples(sys, part, cfg.integrator, backend);
    std::move(res.begin(), res.end(), results.begin() + static_cast<std::ptrdiff_t>(begin));
  });

  TransitionEstimate est;
  est.source = j;
  est.total = m;
  est.seed = seed;
  est.delta = cfg.delta;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& r = results[which[s]];
    switch (r.outcome.kind) {
      case OutcomeKind::Node: {
        const Vertex k = *r.outcome.node;
        ++est.counts[k];
        double clear = std::numeric_limits<double>::infinity();
        for (Vertex i = 0; i < sys.dim(); ++i) {
          if (i == j || i == k) continue;
          clear = std::min(clear, std::sqrt(std::max(0.0, r.min_d2[i])));
        }
        auto [it, fresh] = est.clearance.emplace(k, clear);
        if (!fresh) it->second = std::min(it->second, clear);
        break;
      }
      case OutcomeKind::Escape:
        ++est.escape_count;
        break;
      case OutcomeKind::Unresolved:
        ++est.unresolved_count;
        if (r.outcome.separating) ++est.separating_count;
        break;
    }
  }
  return est;
}

std::vector<TransitionEstimate> estimate_all(const RealizedSystem& sys, std::size_t m,
                                             const SamplingConfig& cfg, std::uint64_t seed) {
  std::vector<TransitionEstimate> out;
  for (Vertex j = 0; j < sys.dim(); ++j) {
    out.push_back(estimate_transitions(sys, j, m, cfg, derive_seed(seed, 0x7e57, j)));
  }
  return out;
}

// ---------------------------------------------------------------------------

SwitchingChain build_switching_chain(const std::vector<TransitionEstimate>& estimates,
                                     const Thresholds& thresholds) {
  thresholds.validate();
  const std::size_t n = estimates.size();
  std::string refused;
  for (Vertex j = 0; j < n; ++j) {
    const auto& e = estimates[j];
    if (e.source != j) throw std::invalid_argument("estimates must be ordered by source node");
    if (e.total == 0 || e.unresolved_fraction() > thresholds.unresolved_max) {
      refused += (refused.empty() ? "" : "; ") + std::string("node ") + std::to_string(j + 1) +
                 " unresolved " + std::to_string(e.unresolved_count) + "/" +
                 std::to_string(e.total);
    }
  }
  if (!refused.empty()) {
    throw AnalysisError("unresolved share above " + std::to_string(thresholds.unresolved_max) +
                        ": " + refused);
  }

  SwitchingChain chain;
  chain.nodes = n;
  chain.matrix.assign(n + 1, std::vector<double>(n + 1, 0.0));
  for (Vertex j = 0; j < n; ++j) {
    const auto& e = estimates[j];
    const double resolved = static_cast<double>(e.total - e.unresolved_count);
    for (const auto& [k, c] : e.counts) {
      if (k >= n) throw std::invalid_argument("estimate target out of range");
      chain.matrix[j][k] = static_cast<double>(c) / resolved;
    }
    chain.matrix[j][n] = static_cast<double>(e.escape_count) / resolved;
  }
  chain.matrix[n][n] = 1.0;
  return chain;
}

SwitchingChain build_switching_chain(const RealizedSystem& sys, const SamplingConfig& cfg,
                                     std::size_t m, std::uint64_t seed,
                                     const Thresholds& thresholds) {
  return build_switching_chain(estimate_all(sys, m, cfg, seed), thresholds);
}

std::vector<std::size_t> simulate_chain(const SwitchingChain& chain, std::size_t start,
                                        std::size_t steps, std::uint64_t seed) {
  if (start >= chain.size()) throw std::out_of_range("start state out of range");
  std::vector<std::size_t> out;
  if (steps == 0) return out;
  GaussianSource rng(seed);
  std::size_t s = start;
  out.push_back(s);
  while (out.size() < steps) {
    if (s == chain.escape_state()) {
      out.push_back(s);
      continue;
    }
    const double u = rng.uniform();
    const auto& row = chain.matrix[s];
    double acc = 0.0;
    std::size_t pick = chain.size();
    std::size_t last = chain.size();
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] <= 0.0) continue;
      last = k;
      acc += row[k];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    if (last == chain.size()) throw AnalysisError("chain row has no mass");
    s = pick == chain.size() ? last : pick;  // rounding at the top of the row
    out.push_back(s);
  }
  return out;
}

Digraph equable_core(const RealizedSystem& sys, const std::vector<TransitionEstimate>& estimates,
                     const Thresholds& thresholds) {
  thresholds.validate();
  const std::size_t n = sys.dim();
  if (estimates.size() != n) throw std::invalid_argument("one estimate per node required");

  std::vector<std::string> labels;
  for (Vertex v = 0; v < n; ++v) labels.push_back(sys.graph().label(v));
  Digraph kept(n, labels);
  std::vector<bool> leaks(n, false);
  for (Vertex j = 0; j < n; ++j) {
    for (const auto& [k, c] : estimates[j].counts) {
      if (k != j && estimates[j].probability(k) >= thresholds.p_min) kept.add_edge(j, k);
    }
    leaks[j] = estimates[j].escape_probability() >= thresholds.p_min;
  }

  std::vector<Vertex> members;
  for (const auto& comp : strongly_connected_components(kept)) {
    if (comp.size() < 2) continue;
    const std::set<Vertex> in(comp.begin(), comp.end());
    bool closed = true;
    for (Vertex v : comp) {
      if (leaks[v]) closed = false;
      for (Vertex w : kept.out_neighbors(v)) {
        if (!in.count(w)) closed = false;
      }
    }
    if (closed) members.insert(members.end(), comp.begin(), comp.end());
  }
  if (members.empty()) throw AnalysisError("no recurrent class survives the p_min filter");

  const std::set<Vertex> keep(members.begin(), members.end());
  Digraph core(n, labels);
  for (const auto& [a, b] : kept.edges()) {
    if (keep.count(a) && keep.count(b)) core.add_edge(a, b);
  }
  return core;
}

// ---------------------------------------------------------------------------

NodeClassification classify_node(const RealizedSystem& sys, Vertex j,
                                 const TransitionEstimate& estimate,
                                 const Thresholds& thresholds) {
  thresholds.validate();
  if (estimate.source != j) throw std::invalid_argument("estimate belongs to another node");
  NodeClassification c;
  c.node = j;
  c.unstable_dim = sys.graph().out_degree(j);
  c.low_sample = estimate.total < 1000;
  c.escape_fraction = estimate.escape_probability() + estimate.unresolved_fraction();
  c.almost_complete = c.escape_fraction <= thresholds.escape_max;

  c.equable = true;
  for (Vertex k : sys.graph().out_neighbors(j)) {
    const double p = estimate.probability(k);
    c.target_fractions[k] = p;
    if (p < thresholds.p_min) c.equable = false;
  }
  for (const auto& [k, n] : estimate.counts) c.target_fractions[k] = estimate.probability(k);

  c.clearance = std::numeric_limits<double>::infinity();
  for (const auto& [k, d] : estimate.clearance) c.clearance = std::min(c.clearance, d);
  c.exclusive = c.clearance > thresholds.r_excl;

  const auto split = splitting_vertices(sys.graph());
  if (const auto it = split.find(j); it != split.end()) c.splitting_order = it->second;
  return c;
}

// ---------------------------------------------------------------------------

namespace {

// First node other than `source` whose node_radius ball the flow enters;
// nullopt if none is reached within max_time.
std::optional<Vertex> first_node(const RealizedSystem& sys, State x, Vertex source,
                                 const IntegratorConfig& cfg) {
  const auto& kern = kernels::batch_kernels(kernels::Backend::Scalar);
  std::vector<double> scratch(kernels::scratch_size(sys.dim(), 1));
  const std::size_t steps = cfg.max_steps();
  for (std::size_t s = 0; s < steps; ++s) {
    kern.rk4(sys.model(), x.data(), 1, cfg.step, 1, nullptr, scratch.data());
    const auto near = nearest_node(x);
    if (near.node != source && near.distance < cfg.node_radius) return near.node;
  }
  return std::nullopt;
}

State direction_at(const RealizedSystem& sys, Vertex a, Vertex b, double theta) {
  State u(sys.dim(), 0.0);
  u[a] = std::cos(theta);
  u[b] = std::sin(theta);
  return u;
}

State start_at(const RealizedSystem& sys, Vertex j, const State& u, double delta) {
  State x = axis_point(sys, j);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += delta * u[i];
  return x;
}

}  // namespace

SeparatrixResult separatrix_refine(const RealizedSystem& sys, Vertex j, Vertex target_a,
                                   Vertex target_b, const SamplingConfig& cfg) {
  cfg.validate();
  const auto& g = sys.graph();
  if (j >= sys.dim() || target_a >= sys.dim() || target_b >= sys.dim()) {
    throw std::out_of_range("vertex out of range");
  }
  if (!g.has_edge(j, target_a) || !g.has_edge(j, target_b) || target_a == target_b) {
    throw AnalysisError("targets must be two distinct out-neighbours of the source");
  }
  const auto& ic = cfg.integrator;
  auto basin = [&](double theta) {
    return first_node(sys, start_at(sys, j, direction_at(sys, target_a, target_b, theta), cfg.delta),
                      j, ic);
  };

  double lo = 0.0;
  double hi = std::numbers::pi / 2.0;
  const auto end_a = basin(lo);
  const auto end_b = basin(hi);
  if (!end_a || !end_b || *end_a == *end_b) {
    throw AnalysisError("bisection endpoints do not reach two different nodes");
  }
  double mid = 0.5 * (lo + hi);
  while (hi - lo > 1e-10) {
    mid = 0.5 * (lo + hi);
    const auto r = basin(mid);
    if (!r) break;  // stuck on the boundary itself
    (*r == *end_a ? lo : hi) = mid;
  }
  if (hi - lo <= 1e-10) mid = 0.5 * (lo + hi);

  SeparatrixResult res;
  res.angle = mid;
  res.angle_width = hi - lo;
  res.direction = direction_at(sys, target_a, target_b, mid);

  // Slowest point of the boundary trajectory away from every node.
  State x = start_at(sys, j, res.direction, cfg.delta);
  State f(sys.dim());
  State best = x;
  double best_speed = std::numeric_limits<double>::infinity();
  const std::size_t steps = ic.max_steps();
  for (std::size_t s = 0; s < steps; ++s) {
    kernels::rk4_step(sys.model(), x, ic.step);
    if (nearest_node(x).distance < ic.node_radius) {
      if (best_speed < std::numeric_limits<double>::infinity()) break;
      continue;
    }
    kernels::field(sys.model(), x, f);
    const double speed = norm(f);
    if (speed < best_speed) {
      best_speed = speed;
      best = x;
    }
  }

  std::vector<Vertex> support;
  for (Vertex i = 0; i < best.size(); ++i) {
    if (std::fabs(best[i]) > 1e-3) {
      support.push_back(i);
    } else {
      best[i] = 0.0;
    }
  }
  newton_polish(sys, best, support);
  res.limit_point = best;

  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& eq : separating_equilibria(sys, j)) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < best.size(); ++i) {
      const double diff = std::fabs(best[i]) - std::fabs(eq.location[i]);
      d2 += diff * diff;
    }
    if (std::sqrt(d2) < best_d) {
      best_d = std::sqrt(d2);
      res.equilibrium = eq;
    }
  }
  res.match_distance = best_d;
  if (!(best_d <= 1e-6)) {
    throw AnalysisError("boundary trajectory does not approach a separating equilibrium");
  }
  return res;
}

}  // namespace heteronet
