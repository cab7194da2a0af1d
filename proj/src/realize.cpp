#include "heteronet/realize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace heteronet {

namespace {

void check_dim(const RealizedSystem& sys, std::size_t got) {
  if (got != sys.dim()) {
    throw RealizationError("state has dimension " + std::to_string(got) + ", system has " +
                           std::to_string(sys.dim()));
  }
}

void check_vertex(const RealizedSystem& sys, Vertex j) {
  if (j >= sys.dim()) throw RealizationError("vertex " + std::to_string(j) + " out of range");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::fabs(a));
  return m;
}

// Largest |x_k| over coordinates outside `allowed` (sorted).
double mass_outside(std::span<const double> x, const std::vector<Vertex>& allowed) {
  double m = 0.0;
  for (Vertex k = 0; k < x.size(); ++k) {
    if (!std::binary_search(allowed.begin(), allowed.end(), k)) m = std::max(m, std::fabs(x[k]));
  }
  return m;
}

constexpr double kSupportTol = 1e-12;

}  // namespace

void RealizationParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw RealizationError("epsilon must lie in (0, 1), got " + std::to_string(epsilon));
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw RealizationError("eta must be positive, got " + std::to_string(eta));
  }
}

RealizedSystem::RealizedSystem(Digraph graph, RealizationParams params, bool force)
    : graph_(std::move(graph)), params_(params) {
  params_.validate();
  gate_ = realization_gate(graph_);
  if (!gate_.eligible && !force) {
    throw RealizationError(
        "graph fails the realization gate (needs transitive, no 2-cycles, no delta-cliques); "
        "use force to realize it without guarantees");
  }
  const std::size_t n = graph_.size();
  const double eps = params_.epsilon;
  const double eta = params_.eta;
  model_.dim = n;
  model_.coupling.assign(n * n, 0.0);
  for (Vertex j = 0; j < n; ++j) {
    for (Vertex i = 0; i < n; ++i) {
      const double a = graph_.has_edge(i, j) ? 1.0 : 0.0;
      const double off = i == j ? 0.0 : 1.0;
      model_.coupling[j * n + i] = (eps + eta) * a - eta * off - 1.0;
    }
  }
}

std::size_t EquilibriumInfo::unstable_dimension() const {
  return static_cast<std::size_t>(
      std::count_if(eigenvalues.begin(), eigenvalues.end(), [](double v) { return v > 0.0; }));
}

std::string to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::AxisNode:
      return "axis-node";
    case EquilibriumKind::SeparatingNode:
      return "separating-node";
    case EquilibriumKind::Origin:
      return "origin";
  }
  return "unknown";
}

std::string to_string(OmegaStability s) {
  switch (s) {
    case OmegaStability::Minimum:
      return "minimum";
    case OmegaStability::Saddle:
      return "saddle";
    case OmegaStability::Repeller:
      return "repeller";
  }
  return "unknown";
}

State vector_field(const RealizedSystem& sys, std::span<const double> x) {
  check_dim(sys, x.size());
  State out(sys.dim());
  kernels::field(sys.model(), x, out);
  return out;
}

Eigen::MatrixXd jacobian(const RealizedSystem& sys, std::span<const double> x) {
  check_dim(sys, x.size());
  const std::size_t n = sys.dim();
  Eigen::MatrixXd jac(n, n);
  for (Vertex j = 0; j < n; ++j) {
    double f = 1.0;
    for (Vertex i = 0; i < n; ++i) f += sys.coupling(j, i) * x[i] * x[i];
    for (Vertex i = 0; i < n; ++i) {
      jac(j, i) = 2.0 * sys.coupling(j, i) * x[j] * x[i] + (i == j ? f : 0.0);
    }
  }
  return jac;
}

State axis_point(const RealizedSystem& sys, Vertex j, double sign) {
  check_vertex(sys, j);
  State x(sys.dim(), 0.0);
  x[j] = sign;
  return x;
}

EquilibriumInfo node_eigenvalues(const RealizedSystem& sys, Vertex j) {
  check_vertex(sys, j);
  EquilibriumInfo info;
  info.kind = EquilibriumKind::AxisNode;
  info.location = axis_point(sys, j);
  info.support = {j};
  info.eigenvalues.resize(sys.dim());
  for (Vertex k = 0; k < sys.dim(); ++k) {
    if (k == j) {
      info.eigenvalues[k] = -2.0;
    } else {
      info.eigenvalues[k] = sys.graph().has_edge(j, k) ? sys.params().epsilon : -sys.params().eta;
    }
  }
  info.residual = max_abs(vector_field(sys, info.location));
  return info;
}

EquilibriumInfo origin_equilibrium(const RealizedSystem& sys) {
  EquilibriumInfo info;
  info.kind = EquilibriumKind::Origin;
  info.location.assign(sys.dim(), 0.0);
  info.eigenvalues.assign(sys.dim(), 1.0);
  info.stability = OmegaStability::Repeller;
  return info;
}

OutSubspaces out_subspaces(const RealizedSystem& sys, Vertex j) {
  check_vertex(sys, j);
  OutSubspaces s;
  s.omega = sys.graph().out_neighbors(j);
  s.q = s.omega;
  s.q.push_back(j);
  std::sort(s.q.begin(), s.q.end());
  return s;
}

RadiusRate radius_rate_bounds(const RealizedSystem& sys, std::span<const double> x) {
  const auto f = vector_field(sys, x);
  RadiusRate out;
  double r = 0.0;
  double dot = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    r += x[k] * x[k];
    dot += x[k] * f[k];
  }
  out.rate = 2.0 * dot;
  out.lower = 2.0 * r * (1.0 - r - sys.params().eta * r);
  out.upper = 2.0 * r * (1.0 - r + sys.params().epsilon * r);
  return out;
}

Annulus absorbing_annulus(const RealizedSystem& sys) {
  return {1.0 / (1.0 + sys.params().eta), 1.0 / (1.0 - sys.params().epsilon)};
}

PhiRate phi_angle_rate(const RealizedSystem& sys, Vertex j, std::span<const double> x) {
  check_dim(sys, x.size());
  const auto sub = out_subspaces(sys, j);
  if (max_abs(x) == 0.0) throw RealizationError("phi is undefined at the origin");
  if (mass_outside(x, sub.q) > kSupportTol) {
    throw RealizationError("state is not in Q_" + sys.graph().label(j));
  }
  const double eps = sys.params().epsilon;
  const double eta = sys.params().eta;
  const double xj2 = x[j] * x[j];
  double s = 0.0;
  double weighted = 0.0;
  for (Vertex i : sub.omega) {
    const double xi2 = x[i] * x[i];
    s += xi2;
    weighted += xi2 * (eta * xi2 + eps * xj2);
  }
  PhiRate out;
  out.phi = std::atan2(xj2, s);
  const double denom = s * s + xj2 * xj2;
  out.dphi_dt = -2.0 * xj2 * weighted / denom;
  return out;
}

double potential_V(const RealizedSystem& sys, Vertex j, std::span<const double> x) {
  check_dim(sys, x.size());
  const auto omega = out_subspaces(sys, j).omega;
  if (mass_outside(x, omega) > kSupportTol) {
    throw RealizationError("state is not in Omega_" + sys.graph().label(j));
  }
  double r = 0.0;
  for (Vertex k : omega) r += x[k] * x[k];
  double cross = 0.0;
  for (Vertex k : omega) {
    double others = 0.0;
    for (Vertex l : omega) {
      if (l != k) others += x[l] * x[l];
    }
    cross += x[k] * x[k] * others;
  }
  return -0.5 * r + 0.25 * r * r + 0.25 * sys.params().eta * cross;
}

State grad_V(const RealizedSystem& sys, Vertex j, std::span<const double> x) {
  check_dim(sys, x.size());
  const auto omega = out_subspaces(sys, j).omega;
  if (mass_outside(x, omega) > kSupportTol) {
    throw RealizationError("state is not in Omega_" + sys.graph().label(j));
  }
  double r = 0.0;
  for (Vertex k : omega) r += x[k] * x[k];
  State g(sys.dim(), 0.0);
  for (Vertex i : omega) {
    const double others = r - x[i] * x[i];
    g[i] = -x[i] * (1.0 - r) + sys.params().eta * x[i] * others;
  }
  return g;
}

Eigen::MatrixXd hessian_V(const RealizedSystem& sys, Vertex j, std::span<const double> x) {
  check_dim(sys, x.size());
  const auto omega = out_subspaces(sys, j).omega;
  const double eta = sys.params().eta;
  double r = 0.0;
  for (Vertex k : omega) r += x[k] * x[k];
  const auto m = static_cast<Eigen::Index>(omega.size());
  Eigen::MatrixXd h(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double xa = x[omega[a]];
    for (Eigen::Index b = 0; b < m; ++b) {
      const double xb = x[omega[b]];
      if (a == b) {
        h(a, b) = -(1.0 - r) + 2.0 * xa * xa + eta * (r - xa * xa);
      } else {
        h(a, b) = 2.0 * (1.0 + eta) * xa * xb;
      }
    }
  }
  return h;
}

double newton_polish(const RealizedSystem& sys, State& x, const std::vector<Vertex>& support,
                     int max_iterations) {
  const auto m = static_cast<Eigen::Index>(support.size());
  double residual = max_abs(vector_field(sys, x));
  for (int it = 0; it < max_iterations && residual > 0.0; ++it) {
    const auto f = vector_field(sys, x);
    const auto jac = jacobian(sys, x);
    Eigen::MatrixXd js(m, m);
    Eigen::VectorXd fs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      fs(a) = f[support[a]];
      for (Eigen::Index b = 0; b < m; ++b) js(a, b) = jac(support[a], support[b]);
    }
    const Eigen::VectorXd step = js.fullPivLu().solve(fs);
    State trial = x;
    for (Eigen::Index a = 0; a < m; ++a) trial[support[a]] -= step(a);
    const double next = max_abs(vector_field(sys, trial));
    if (!(next < residual)) break;
    x = std::move(trial);
    residual = next;
  }
  return residual;
}

namespace {

std::vector<double> sorted_real_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  std::vector<double> out;
  for (Eigen::Index k = 0; k < m.rows(); ++k) out.push_back(solver.eigenvalues()(k).real());
  std::sort(out.begin(), out.end());
  return out;
}

OmegaStability classify_signs(const std::vector<double>& values, bool potential) {
  const bool all_pos = std::all_of(values.begin(), values.end(), [](double v) { return v > 0; });
  const bool all_neg = std::all_of(values.begin(), values.end(), [](double v) { return v < 0; });
  // Potential Hessian: positive definite means a minimum of V. Flow
  // Jacobian: all contracting means the point attracts within Omega_j.
  if (potential ? all_pos : all_neg) return OmegaStability::Minimum;
  if (potential ? all_neg : all_pos) return OmegaStability::Repeller;
  return OmegaStability::Saddle;
}

}  // namespace

std::vector<EquilibriumInfo> separating_equilibria(const RealizedSystem& sys, Vertex j) {
  const auto omega = out_subspaces(sys, j).omega;
  const std::size_t k = omega.size();
  if (k < 2) return {};
  if (k >= 31) throw RealizationError("out-degree too large for support enumeration");

  bool edgeless = true;
  for (Vertex a : omega) {
    for (Vertex b : omega) {
      if (a != b && sys.graph().has_edge(a, b)) edgeless = false;
    }
  }
  const double eta = sys.params().eta;

  std::vector<std::vector<Vertex>> supports;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    if (std::popcount(mask) < 2) continue;
    std::vector<Vertex> t;
    for (std::size_t b = 0; b < k; ++b) {
      if (mask & (1u << b)) t.push_back(omega[b]);
    }
    supports.push_back(std::move(t));
  }
  std::sort(supports.begin(), supports.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });

  std::vector<EquilibriumInfo> out;
  for (const auto& t : supports) {
    State x(sys.dim(), 0.0);
    if (edgeless) {
      const double size = static_cast<double>(t.size());
      const double c = 1.0 / (size + eta * (size - 1.0));
      for (Vertex i : t) x[i] = std::sqrt(c);
    } else {
      // F_i vanishes on the support: a linear system in the squares.
      const auto m = static_cast<Eigen::Index>(t.size());
      Eigen::MatrixXd a(m, m);
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) a(r, c) = sys.coupling(t[r], t[c]);
      }
      const auto lu = a.fullPivLu();
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sq = lu.solve(Eigen::VectorXd::Constant(m, -1.0));
      if ((sq.array() <= 0.0).any()) continue;
      for (Eigen::Index r = 0; r < m; ++r) x[t[r]] = std::sqrt(sq(r));
    }
    EquilibriumInfo info;
    info.kind = EquilibriumKind::SeparatingNode;
    info.owner = j;
    info.support = t;
    info.numeric = !edgeless;
    info.residual = newton_polish(sys, x, t);
    info.location = x;
    info.eigenvalues = sorted_real_eigenvalues(jacobian(sys, x));
    if (edgeless) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian_V(sys, j, x));
      const auto ev = es.eigenvalues();
      info.stability = classify_signs({ev.data(), ev.data() + ev.size()}, true);
    } else {
      const auto jac = jacobian(sys, x);
      Eigen::MatrixXd block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) block(a, b) = jac(omega[a], omega[b]);
      }
      info.stability = classify_signs(sorted_real_eigenvalues(block), false);
    }
    out.push_back(std::move(info));
  }
  return out;
}

bool equivariance_check(const VectorField& f, std::span<const double> x,
                        std::span<const double> signs) {
  if (signs.size() != x.size()) throw RealizationError("sign vector has wrong dimension");
  State sx(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) sx[k] = signs[k] * x[k];
  const auto lhs = f(sx);
  const auto rhs = f(x);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (lhs[k] != signs[k] * rhs[k]) return false;
  }
  return true;
}

bool equivariance_check(const RealizedSystem& sys, std::span<const double> x,
                        std::span<const double> signs) {
  return equivariance_check([&sys](std::span<const double> y) { return vector_field(sys, y); }, x,
                            signs);
}

}  // namespace heteronet
