#pragma once

// Fixed-step trajectory generation for realized systems: classical RK4 for
// the deterministic flow and the stochastic Heun scheme for
// dx = f(x) dt + alpha dW.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "heteronet/realize.hpp"

namespace heteronet {

struct IntegratorConfig {
  double step = 0.01;
  double max_time = 1000.0;
  double convergence_tol = 1e-9;
  double node_radius = 0.05;

  void validate() const;
  std::size_t max_steps() const;
};

struct NoiseConfig {
  double alpha = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class TerminalKind { ConvergedToNode, ConvergedToEquilibrium, MaxTime, LeftDomain };

struct Terminal {
  TerminalKind kind = TerminalKind::MaxTime;
  /// Node index (positive representative) for ConvergedToNode.
  std::optional<Vertex> node;
};

std::string to_string(TerminalKind k);

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  Terminal terminal;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct NodeDistance {
  Vertex node = 0;
  double distance = 0.0;
};
/// Nearest of the axis equilibria +-e_k.
NodeDistance nearest_node(std::span<const double> x);

/// RK4 with step cfg.step. Stops when |f(x)| < convergence_tol (classified
/// by proximity to +-e_k within node_radius), at max_time, or once
/// |x| > 10 R1.
Trajectory integrate_ode(const RealizedSystem& sys, std::span<const double> x0,
                         const IntegratorConfig& cfg);

using StepObserver = std::function<void(double t, std::span<const double> x)>;

/// Stochastic Heun with one shared N(0, h I) increment per step. Runs to
/// max_time or until |x| > 10 R1; the observer sees every state including
/// the initial one.
Terminal integrate_sde_observe(const RealizedSystem& sys, std::span<const double> x0,
                               const IntegratorConfig& cfg, const NoiseConfig& noise,
                               const StepObserver& observer);

Trajectory integrate_sde(const RealizedSystem& sys, std::span<const double> x0,
                         const IntegratorConfig& cfg, const NoiseConfig& noise);

/// Several independent SDE runs advanced together through the batched
/// kernels. Lane l is bit-identical to integrate_sde_observe with noise[l].
using LaneObserver = std::function<void(std::size_t lane, double t, std::span<const double> x)>;
std::vector<Terminal> integrate_sde_lanes(const RealizedSystem& sys,
                                          const std::vector<State>& x0,
                                          const IntegratorConfig& cfg,
                                          const std::vector<NoiseConfig>& noise,
                                          const LaneObserver& observer);

using StatePredicate = std::function<bool(std::span<const double>)>;

/// States at which `pred` switches from false to true (a true initial state
/// counts as an entry).
std::vector<State> section_crossings(const Trajectory& traj, const StatePredicate& pred);
/// Indices into traj.states of the same entry events.
std::vector<std::size_t> section_crossing_indices(const Trajectory& traj,
                                                  const StatePredicate& pred);

/// Parses conjunctions of coordinate conditions such as "x1^2<0.1" or
/// "x1^2<0.1 && x3>0"; coordinates are 1-based.
StatePredicate parse_section_predicate(std::string_view text, std::size_t dim);

/// CSV with header t,x1,...,xn and one row per state.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_states_csv(std::ostream& os, std::size_t dim, const std::vector<double>& times,
                      const std::vector<State>& states);

}  // namespace heteronet
