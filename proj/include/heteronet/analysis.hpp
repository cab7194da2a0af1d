#pragma once

// Statistics of the switching process between nodes: where trajectories
// leaving a node along its unstable manifold end up, the Markov chain these
// frequencies define, and the per-node properties they certify.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heteronet/integrate.hpp"
#include "heteronet/realize.hpp"

namespace heteronet {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Thresholds {
  double p_min = 0.01;          ///< smallest share counted as positive measure
  double escape_max = 0.005;    ///< escape + unresolved share for almost completeness
  double r_excl = 0.1;          ///< clearance from third nodes for exclusivity
  double unresolved_max = 0.01; ///< chain assembly refuses above this

  void validate() const;
};

/// Integration settings for the Monte-Carlo pushforward.
struct SamplingConfig {
  double delta = 1e-3;
  IntegratorConfig integrator{0.01, 5000.0, 1e-9, 0.05};

  void validate() const;
};

// ---------------------------------------------------------------------------
// Single-trajectory outcomes

enum class OutcomeKind { Node, Escape, Unresolved };
std::string to_string(OutcomeKind k);

struct OmegaOutcome {
  OutcomeKind kind = OutcomeKind::Unresolved;
  std::optional<Vertex> node;
  /// Stalled at an equilibrium inside the starting node's Omega (basin
  /// boundary). Such runs are reported as unresolved.
  bool separating = false;
  double time = 0.0;
};

/// Integrates the ODE from x0 until it settles. Equilibria +-e_k are merged
/// into node k. Settling anywhere else counts as escape, except at a
/// separating equilibrium (unresolved, flagged); leaving |x| <= 10 R1 is
/// escape; running out of time is unresolved.
OmegaOutcome omega_node(const RealizedSystem& sys, std::span<const double> x0,
                        const IntegratorConfig& cfg);

struct Itinerary {
  struct Entry {
    Vertex node;
    double time;
  };
  std::vector<Entry> entries;
  OutcomeKind terminal = OutcomeKind::Unresolved;
  std::optional<Vertex> terminal_node;
};

/// Successive node_radius balls visited by a trajectory.
Itinerary extract_itinerary(const Trajectory& traj, double node_radius);

// ---------------------------------------------------------------------------
// Monte-Carlo transition estimates

/// m points xi_j + delta u with u uniform on the unit sphere of the O_j
/// coordinates. For |O_j| = 1 the two points +-delta e_k alternate.
std::vector<State> sample_unstable_sphere(const RealizedSystem& sys, Vertex j, double delta,
                                          std::size_t m, std::uint64_t seed);

struct TransitionEstimate {
  Vertex source = 0;
  std::map<Vertex, std::size_t> counts;
  std::size_t escape_count = 0;
  std::size_t unresolved_count = 0;
  std::size_t separating_count = 0;  ///< subset of unresolved_count
  std::size_t total = 0;
  /// Smallest distance to any node other than the source and k, over all
  /// samples ending at k.
  std::map<Vertex, double> clearance;
  std::uint64_t seed = 0;
  double delta = 0.0;

  double probability(Vertex k) const;
  double escape_probability() const;
  double unresolved_fraction() const;
  /// Binomial standard error sqrt(p(1-p)/total) for target k.
  double standard_error(Vertex k) const;
};

/// Pushes the sphere measure at xi_j forward through omega_node. Samples run
/// in SIMD batches across worker threads; counts depend only on the seed.
TransitionEstimate estimate_transitions(const RealizedSystem& sys, Vertex j, std::size_t m,
                                        const SamplingConfig& cfg, std::uint64_t seed);

/// One estimate per node, seeds derived from `seed`.
std::vector<TransitionEstimate> estimate_all(const RealizedSystem& sys, std::size_t m,
                                             const SamplingConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Switching chain

struct SwitchingChain {
  /// States 0..n-1 are the nodes; state n is escape.
  std::size_t nodes = 0;
  std::vector<std::vector<double>> matrix;

  std::size_t escape_state() const { return nodes; }
  std::size_t size() const { return nodes + 1; }
};

/// Rows are the estimates renormalized over resolved samples. Throws
/// AnalysisError naming every node whose unresolved share exceeds
/// thresholds.unresolved_max.
SwitchingChain build_switching_chain(const std::vector<TransitionEstimate>& estimates,
                                     const Thresholds& thresholds);
SwitchingChain build_switching_chain(const RealizedSystem& sys, const SamplingConfig& cfg,
                                     std::size_t m, std::uint64_t seed,
                                     const Thresholds& thresholds = {});

/// `steps` states starting with `start`; escape is absorbing.
std::vector<std::size_t> simulate_chain(const SwitchingChain& chain, std::size_t start,
                                        std::size_t steps, std::uint64_t seed);

/// Keeps edges j->k with share >= p_min and returns the union of the closed
/// strongly connected classes with at least two nodes (a class is open if
/// any member escapes with share >= p_min). Throws if nothing is left.
Digraph equable_core(const RealizedSystem& sys, const std::vector<TransitionEstimate>& estimates,
                     const Thresholds& thresholds);

// ---------------------------------------------------------------------------
// Classification

struct NodeClassification {
  Vertex node = 0;
  std::size_t unstable_dim = 0;
  bool almost_complete = false;
  double escape_fraction = 0.0;  ///< escape plus unresolved
  bool equable = false;
  /// Share of every graph out-neighbour, plus any other target reached.
  std::map<Vertex, double> target_fractions;
  bool exclusive = false;
  double clearance = 0.0;
  std::optional<std::size_t> splitting_order;
  bool low_sample = false;
};

/// Equable requires every out-neighbour in the graph to receive at least
/// p_min; a prescribed connection the sampled measure never uses makes the
/// node non-equable.
NodeClassification classify_node(const RealizedSystem& sys, Vertex j,
                                 const TransitionEstimate& estimate,
                                 const Thresholds& thresholds);

// ---------------------------------------------------------------------------
// Separatrix between two targets

struct SeparatrixResult {
  /// Boundary direction u on the unit sphere of O_j.
  State direction;
  /// Angle from e_a towards e_b.
  double angle = 0.0;
  double angle_width = 0.0;
  State limit_point;
  EquilibriumInfo equilibrium;
  double match_distance = 0.0;
};

/// Bisects along the great circle from e_a to e_b in the unstable sphere at
/// xi_j to angular width 1e-10, follows the boundary trajectory to its
/// slowest point, polishes it and matches it against
/// separating_equilibria(sys, j) up to sign within 1e-6.
SeparatrixResult separatrix_refine(const RealizedSystem& sys, Vertex j, Vertex target_a,
                                   Vertex target_b, const SamplingConfig& cfg);

}  // namespace heteronet
