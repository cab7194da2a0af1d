#pragma once

// Polynomial vector fields realizing a digraph as a robust heteroclinic
// network between equilibria on the coordinate axes:
//
//   dx_j/dt = x_j F_j(x),
//   F_j(x)  = 1 + sum_i [(eps + eta) A_ij - eta (1 - delta_ij) - 1] x_i^2,
//
// together with the Lyapunov-type quantities that certify its structure.

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "heteronet/digraph.hpp"
#include "heteronet/kernels.hpp"

namespace heteronet {

using State = std::vector<double>;

class RealizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RealizationParams {
  double epsilon = 0.02;
  double eta = 0.05;

  /// Throws RealizationError unless 0 < epsilon < 1 and eta > 0.
  void validate() const;
};

/// Immutable realized system. Construction refuses graphs that fail the
/// realization gate unless `force` is set, in which case every guarantee
/// that depends on the gate is reported as unverified.
class RealizedSystem {
 public:
  RealizedSystem(Digraph graph, RealizationParams params, bool force = false);

  const Digraph& graph() const noexcept { return graph_; }
  const RealizationParams& params() const noexcept { return params_; }
  const GateReport& gate() const noexcept { return gate_; }
  bool verified() const noexcept { return gate_.eligible; }
  std::size_t dim() const noexcept { return graph_.size(); }

  /// Coefficient of x_i^2 in F_j.
  double coupling(Vertex j, Vertex i) const { return model_.coupling[j * dim() + i]; }
  const kernels::FieldModel& model() const noexcept { return model_; }

 private:
  Digraph graph_;
  RealizationParams params_;
  GateReport gate_;
  kernels::FieldModel model_;
};

enum class EquilibriumKind { AxisNode, SeparatingNode, Origin };
enum class OmegaStability { Minimum, Saddle, Repeller };

struct EquilibriumInfo {
  State location;
  EquilibriumKind kind = EquilibriumKind::AxisNode;
  std::vector<Vertex> support;
  /// Real parts of the Jacobian eigenvalues. For axis nodes they are listed
  /// per coordinate direction (entry k belongs to e_k); otherwise ascending.
  std::vector<double> eigenvalues;
  std::optional<OmegaStability> stability;
  /// Separating nodes: the vertex j whose Omega_j contains the point.
  std::optional<Vertex> owner;
  /// Found by the general support solve rather than the closed form.
  bool numeric = false;
  double residual = 0.0;

  std::size_t unstable_dimension() const;
};

std::string to_string(EquilibriumKind k);
std::string to_string(OmegaStability s);

// ---------------------------------------------------------------------------
// Field evaluation

State vector_field(const RealizedSystem& sys, std::span<const double> x);
Eigen::MatrixXd jacobian(const RealizedSystem& sys, std::span<const double> x);

/// e_j scaled by `sign`.
State axis_point(const RealizedSystem& sys, Vertex j, double sign = 1.0);

// ---------------------------------------------------------------------------
// Node structure

/// Analytic linearization at xi_j: -2 radially, epsilon along each outgoing
/// direction, -eta along every other direction.
EquilibriumInfo node_eigenvalues(const RealizedSystem& sys, Vertex j);
EquilibriumInfo origin_equilibrium(const RealizedSystem& sys);

struct OutSubspaces {
  std::vector<Vertex> omega;  ///< O_j: coordinates spanning Omega_j
  std::vector<Vertex> q;      ///< O_j plus j, ascending
};
OutSubspaces out_subspaces(const RealizedSystem& sys, Vertex j);

// ---------------------------------------------------------------------------
// Lyapunov quantities

struct RadiusRate {
  double rate = 0.0;   ///< d|x|^2/dt
  double lower = 0.0;  ///< 2R(1 - R - eta R)
  double upper = 0.0;  ///< 2R(1 - R + eps R)
};
RadiusRate radius_rate_bounds(const RealizedSystem& sys, std::span<const double> x);

struct Annulus {
  double inner = 0.0;  ///< R0 = 1/(1 + eta)
  double outer = 0.0;  ///< R1 = 1/(1 - eps)
};
Annulus absorbing_annulus(const RealizedSystem& sys);

struct PhiRate {
  double phi = 0.0;
  double dphi_dt = 0.0;
};
/// Angle tan(phi) = x_j^2 / sum_{i in O_j} x_i^2 on Q_j and its closed-form
/// time derivative. phi = pi/2 on the x_j axis.
PhiRate phi_angle_rate(const RealizedSystem& sys, Vertex j, std::span<const double> x);

/// Potential whose negative gradient is the flow restricted to Omega_j.
double potential_V(const RealizedSystem& sys, Vertex j, std::span<const double> x);
/// Full-length gradient; entries outside O_j are zero.
State grad_V(const RealizedSystem& sys, Vertex j, std::span<const double> x);
/// Hessian of V_j over the O_j coordinates (ordered as out_subspaces().omega).
Eigen::MatrixXd hessian_V(const RealizedSystem& sys, Vertex j, std::span<const double> x);

/// Equilibria inside Omega_j with at least two nonzero coordinates, one per
/// support set, in the positive orthant. Uses the equal-coordinate closed
/// form when the graph induced on O_j has no edges; otherwise solves the
/// per-support linear system in the squared coordinates (flagged numeric).
/// Each point is Newton-polished to residual below 1e-12.
std::vector<EquilibriumInfo> separating_equilibria(const RealizedSystem& sys, Vertex j);

/// Newton iteration for f(x) = 0 on the coordinates in `support`, others
/// held at zero. Returns the final residual (max norm of f).
double newton_polish(const RealizedSystem& sys, State& x, const std::vector<Vertex>& support,
                     int max_iterations = 50);

using VectorField = std::function<State(std::span<const double>)>;

/// f(sigma x) == sigma f(x) with exact floating-point equality.
bool equivariance_check(const VectorField& f, std::span<const double> x,
                        std::span<const double> signs);
bool equivariance_check(const RealizedSystem& sys, std::span<const double> x,
                        std::span<const double> signs);

}  // namespace heteronet
