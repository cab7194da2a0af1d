#include "heteronet/integrate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "heteronet/rng.hpp"

namespace heteronet {

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step must be positive");
  if (!(max_time >= step)) throw std::invalid_argument("max_time must be at least one step");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be positive");
  if (!(node_radius > convergence_tol)) {
    throw std::invalid_argument("node_radius must exceed convergence_tol");
  }
}

std::size_t IntegratorConfig::max_steps() const {
  return static_cast<std::size_t>(std::floor(max_time / step + 1e-9));
}

void NoiseConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("noise amplitude must be non-negative");
  }
}

std::string to_string(TerminalKind k) {
  switch (k) {
    case TerminalKind::ConvergedToNode:
      return "converged-to-node";
    case TerminalKind::ConvergedToEquilibrium:
      return "converged-to-equilibrium";
    case TerminalKind::MaxTime:
      return "max-time";
    case TerminalKind::LeftDomain:
      return "left-domain";
  }
  return "unknown";
}

NodeDistance nearest_node(std::span<const double> x) {
  double r = 0.0;
  for (double v : x) r += v * v;
  NodeDistance best{0, std::numeric_limits<double>::infinity()};
  for (Vertex k = 0; k < x.size(); ++k) {
    const double d2 = std::max(0.0, r - 2.0 * std::fabs(x[k]) + 1.0);
    if (d2 < best.distance) best = {k, d2};
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double domain_bound(const RealizedSystem& sys) { return 10.0 * absorbing_annulus(sys).outer; }

void check_start(const RealizedSystem& sys, std::span<const double> x0) {
  if (x0.size() != sys.dim()) throw std::invalid_argument("initial state has wrong dimension");
  if (!all_finite(x0)) throw IntegrationError("initial state is not finite", 0);
}

}  // namespace

Trajectory integrate_ode(const RealizedSystem& sys, std::span<const double> x0,
                         const IntegratorConfig& cfg) {
  cfg.validate();
  check_start(sys, x0);
  const auto& kern = kernels::batch_kernels(kernels::Backend::Scalar);
  std::vector<double> scratch(kernels::scratch_size(sys.dim(), 1));
  const double bound = domain_bound(sys);
  const std::size_t steps = cfg.max_steps();

  Trajectory traj;
  State x(x0.begin(), x0.end());
  State f(sys.dim());
  for (std::size_t s = 0;; ++s) {
    traj.times.push_back(static_cast<double>(s) * cfg.step);
    traj.states.push_back(x);

    kernels::field(sys.model(), x, f);
    if (norm2(f) < cfg.convergence_tol) {
      const auto near = nearest_node(x);
      if (near.distance < cfg.node_radius) {
        traj.terminal = {TerminalKind::ConvergedToNode, near.node};
      } else {
        traj.terminal = {TerminalKind::ConvergedToEquilibrium, std::nullopt};
      }
      break;
    }
    if (norm2(x) > bound) {
      traj.terminal = {TerminalKind::LeftDomain, std::nullopt};
      break;
    }
    if (s == steps) {
      traj.terminal = {TerminalKind::MaxTime, std::nullopt};
      break;
    }
    kern.rk4(sys.model(), x.data(), 1, cfg.step, 1, nullptr, scratch.data());
    if (!all_finite(x)) throw IntegrationError("non-finite state at step " + std::to_string(s + 1), s + 1);
  }
  return traj;
}

std::vector<Terminal> integrate_sde_lanes(const RealizedSystem& sys,
                                          const std::vector<State>& x0,
                                          const IntegratorConfig& cfg,
                                          const std::vector<NoiseConfig>& noise,
                                          const LaneObserver& observer) {
  cfg.validate();
  if (x0.size() != noise.size()) throw std::invalid_argument("one noise config per lane");
  for (const auto& n : noise) n.validate();
  for (const auto& x : x0) check_start(sys, x);

  const std::size_t n = sys.dim();
  const std::size_t used = x0.size();
  // A single run stays on the scalar path; otherwise pad to the SIMD width.
  const auto& kern = kernels::batch_kernels(used == 1 ? kernels::Backend::Scalar
                                                      : kernels::active_backend());
  const std::size_t lanes = (used + kern.width - 1) / kern.width * kern.width;

  std::vector<double> x(n * lanes, 0.0);
  std::vector<double> dw(n * lanes, 0.0);
  std::vector<double> scratch(kernels::scratch_size(n, lanes));
  for (std::size_t l = 0; l < used; ++l) {
    for (std::size_t i = 0; i < n; ++i) x[i * lanes + l] = x0[l][i];
  }
  std::vector<GaussianSource> rngs;
  rngs.reserve(used);
  for (const auto& nz : noise) rngs.emplace_back(nz.seed);

  std::vector<Terminal> terminal(used);
  std::vector<bool> active(used, true);
  std::size_t remaining = used;
  const double bound = domain_bound(sys);
  const double sqrt_h = std::sqrt(cfg.step);
  const std::size_t steps = cfg.max_steps();
  State lane_state(n);

  auto visit = [&](std::size_t s) {
    const double t = static_cast<double>(s) * cfg.step;
    for (std::size_t l = 0; l < used; ++l) {
      if (!active[l]) continue;
      for (std::size_t i = 0; i < n; ++i) lane_state[i] = x[i * lanes + l];
      if (!all_finite(lane_state)) {
        throw IntegrationError("non-finite state at step " + std::to_string(s), s);
      }
      if (observer) observer(l, t, lane_state);
      if (norm2(lane_state) > bound) {
        terminal[l] = {TerminalKind::LeftDomain, std::nullopt};
        active[l] = false;
        --remaining;
      }
    }
  };

  visit(0);
  for (std::size_t s = 1; s <= steps && remaining > 0; ++s) {
    for (std::size_t l = 0; l < used; ++l) {
      if (!active[l]) continue;
      const double scale = noise[l].alpha * sqrt_h;
      for (std::size_t i = 0; i < n; ++i) dw[i * lanes + l] = scale * rngs[l].normal();
    }
    kern.heun(sys.model(), x.data(), dw.data(), lanes, cfg.step, scratch.data());
    visit(s);
  }
  for (std::size_t l = 0; l < used; ++l) {
    if (active[l]) terminal[l] = {TerminalKind::MaxTime, std::nullopt};
  }
  return terminal;
}

Terminal integrate_sde_observe(const RealizedSystem& sys, std::span<const double> x0,
                               const IntegratorConfig& cfg, const NoiseConfig& noise,
                               const StepObserver& observer) {
  const std::vector<State> start{State(x0.begin(), x0.end())};
  return integrate_sde_lanes(sys, start, cfg, {noise},
                             [&](std::size_t, double t, std::span<const double> x) {
                               if (observer) observer(t, x);
                             })
      .front();
}

Trajectory integrate_sde(const RealizedSystem& sys, std::span<const double> x0,
                         const IntegratorConfig& cfg, const NoiseConfig& noise) {
  Trajectory traj;
  traj.terminal = integrate_sde_observe(sys, x0, cfg, noise, [&](double t, std::span<const double> x) {
    traj.times.push_back(t);
    traj.states.emplace_back(x.begin(), x.end());
  });
  return traj;
}

std::vector<std::size_t> section_crossing_indices(const Trajectory& traj,
                                                  const StatePredicate& pred) {
  std::vector<std::size_t> out;
  bool inside = false;
  for (std::size_t r = 0; r < traj.states.size(); ++r) {
    const bool now = pred(traj.states[r]);
    if (now && !inside) out.push_back(r);
    inside = now;
  }
  return out;
}

std::vector<State> section_crossings(const Trajectory& traj, const StatePredicate& pred) {
  std::vector<State> out;
  for (auto r : section_crossing_indices(traj, pred)) out.push_back(traj.states[r]);
  return out;
}

StatePredicate parse_section_predicate(std::string_view text, std::size_t dim) {
  struct Clause {
    std::size_t coord;
    bool squared;
    bool less;
    double value;
  };
  std::vector<Clause> clauses;
  auto fail = [&]() {
    return std::invalid_argument("cannot parse section predicate '" + std::string(text) +
                                 "' (expected e.g. x1^2<0.1)");
  };

  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] != 'x') throw fail();
    ++pos;
    std::size_t digits = 0;
    std::size_t coord = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      coord = coord * 10 + static_cast<std::size_t>(s[pos] - '0');
      ++pos;
      ++digits;
    }
    if (digits == 0 || coord == 0 || coord > dim) throw fail();
    bool squared = false;
    if (s.compare(pos, 2, "^2") == 0) {
      squared = true;
      pos += 2;
    }
    if (pos >= s.size() || (s[pos] != '<' && s[pos] != '>')) throw fail();
    const bool less = s[pos] == '<';
    ++pos;
    const auto end = s.find("&&", pos);
    const std::string num = s.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(num, &used);
    } catch (const std::exception&) {
      throw fail();
    }
    if (used != num.size()) throw fail();
    clauses.push_back({coord - 1, squared, less, value});
    pos = end == std::string::npos ? s.size() : end + 2;
    if (end != std::string::npos && pos >= s.size()) throw fail();
  }
  if (clauses.empty()) throw fail();

  return [clauses](std::span<const double> x) {
    for (const auto& c : clauses) {
      const double v = c.squared ? x[c.coord] * x[c.coord] : x[c.coord];
      if (c.less ? !(v < c.value) : !(v > c.value)) return false;
    }
    return true;
  };
}

namespace {

void put_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_states_csv(std::ostream& os, std::size_t n, const std::vector<double>& times,
                      const std::vector<State>& states) {
  os << 't';
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  os << '\n';
  for (std::size_t r = 0; r < states.size(); ++r) {
    put_number(os, times[r]);
    for (double v : states[r]) {
      os << ',';
      put_number(os, v);
    }
    os << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  write_states_csv(os, n, traj.times, traj.states);
}

}  // namespace heteronet
