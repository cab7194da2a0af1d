// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is nonzero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "../fixtures.hpp"
#include "heteronet/analysis.hpp"
#include "heteronet/digraph.hpp"
#include "heteronet/integrate.hpp"
#include "heteronet/realize.hpp"
#include "heteronet/report.hpp"
#include "heteronet/rng.hpp"

using namespace heteronet;
namespace fs = std::filesystem;

namespace {

constexpr double kEps = 0.02;
constexpr double kEta = 0.05;

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double time_limit_s,
               const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > time_limit_s) {
    v.pass = false;
    v.detail += " [time limit " + std::to_string(time_limit_s) + " s exceeded]";
  }
  if (!v.pass) ++failures;
  std::printf("%s  %2d  %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RealizedSystem kirk_silber(double eta = kEta) {
  return RealizedSystem(fixtures::kirk_silber(), {kEps, eta});
}

State ks_by_hand(const State& x) {
  const double a = x[0] * x[0], b = x[1] * x[1], c = x[2] * x[2], d = x[3] * x[3];
  const double r = a + b + c + d;
  return {x[0] * (1 - r + kEps * (c + d) - kEta * b), x[1] * (1 - r + kEps * a - kEta * (c + d)),
          x[2] * (1 - r + kEps * b - kEta * (a + d)), x[3] * (1 - r + kEps * b - kEta * (a + c))};
}

State uniform_state(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng), u(rng)};
}

// Random direction within `coords`, scaled to |x|^2 = r2.
State on_shell(std::mt19937_64& rng, const std::vector<Vertex>& coords, double r2) {
  std::normal_distribution<double> g;
  State x(4, 0.0);
  double len = 0.0;
  for (Vertex i : coords) {
    x[i] = g(rng);
    len += x[i] * x[i];
  }
  const double s = std::sqrt(r2 / len);
  for (Vertex i : coords) x[i] *= s;
  return x;
}

int run(const std::string& args) {
  const int status = std::system((std::string(HETERONET_BIN) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  std::printf("heteronet acceptance suite (kernel backend: %s)\n",
              std::string(kernels::backend_name(kernels::active_backend())).c_str());

  criterion(1, "Kirk-Silber realization fidelity", 1.0, [] {
    const auto sys = kirk_silber();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const auto x = uniform_state(rng, 1.5);
      const auto f = vector_field(sys, x);
      const auto g = ks_by_hand(x);
      for (int i = 0; i < 4; ++i) worst = std::max(worst, std::fabs(f[i] - g[i]));
    }
    double at_nodes = 0.0;
    for (Vertex j = 0; j < 4; ++j) {
      for (double s : {1.0, -1.0}) {
        for (double v : vector_field(sys, axis_point(sys, j, s))) at_nodes = std::max(at_nodes, std::fabs(v));
      }
    }
    return Verdict{worst <= 1e-14 && at_nodes <= 1e-12,
                   "max |f - explicit| = " + fmt("%.2e", worst) + ", max |f(+-xi)| = " + fmt("%.2e", at_nodes)};
  });

  criterion(2, "Eigenvalue table and Jacobian", 1.0, [] {
    const auto sys = kirk_silber();
    auto ev = node_eigenvalues(sys, 1).eigenvalues;
    std::sort(ev.begin(), ev.end());
    bool ok = ev == std::vector<double>{-2.0, -kEta, kEps, kEps};
    double eig_err = 0.0;
    for (Vertex j = 0; j < 4; ++j) {
      auto analytic = node_eigenvalues(sys, j).eigenvalues;
      std::sort(analytic.begin(), analytic.end());
      Eigen::EigenSolver<Eigen::MatrixXd> es(jacobian(sys, axis_point(sys, j)));
      std::vector<double> numeric;
      for (int k = 0; k < 4; ++k) numeric.push_back(es.eigenvalues()(k).real());
      std::sort(numeric.begin(), numeric.end());
      for (int k = 0; k < 4; ++k) eig_err = std::max(eig_err, std::fabs(numeric[k] - analytic[k]));
    }
    std::mt19937_64 rng(102);
    double fd_err = 0.0;
    const double h = 1e-6;
    for (int t = 0; t < 100; ++t) {
      const auto x = uniform_state(rng, 1.0);
      const auto jac = jacobian(sys, x);
      for (int c = 0; c < 4; ++c) {
        State p = x, m = x;
        p[c] += h;
        m[c] -= h;
        const auto fp = vector_field(sys, p);
        const auto fm = vector_field(sys, m);
        for (int r = 0; r < 4; ++r) fd_err = std::max(fd_err, std::fabs(jac(r, c) - (fp[r] - fm[r]) / (2 * h)));
      }
    }
    ok = ok && eig_err <= 1e-8 && fd_err <= 1e-6;
    return Verdict{ok, std::string("xi2 spectrum {-2, eps, eps, -eta} ") + (ev.size() == 4 ? "ok" : "bad") +
                           ", numeric eig err " + fmt("%.2e", eig_err) + ", FD err " + fmt("%.2e", fd_err)};
  });

  criterion(3, "Absorbing annulus", 5.0, [] {
    const auto sys = kirk_silber();
    const auto a = absorbing_annulus(sys);
    bool ok = a.inner == 1.0 / (1.0 + kEta) && a.outer == 1.0 / (1.0 - kEps);
    std::mt19937_64 rng(103);
    int violations = 0;
    for (int t = 0; t < 10000; ++t) {
      const auto r = radius_rate_bounds(sys, uniform_state(rng, 1.2));
      if (r.rate < r.lower || r.rate > r.upper) ++violations;
    }
    int wrong_sign = 0;
    const std::vector<Vertex> all{0, 1, 2, 3};
    for (int t = 0; t < 1000; ++t) {
      if (!(radius_rate_bounds(sys, on_shell(rng, all, 0.9 * a.inner)).rate > 0)) ++wrong_sign;
      if (!(radius_rate_bounds(sys, on_shell(rng, all, 1.1 * a.outer)).rate < 0)) ++wrong_sign;
    }
    ok = ok && violations == 0 && wrong_sign == 0;
    return Verdict{ok, "R0 = " + fmt("%.15g", a.inner) + ", R1 = " + fmt("%.15g", a.outer) + ", " +
                           std::to_string(violations) + " bound violations, " + std::to_string(wrong_sign) +
                           " wrong signs"};
  });

  criterion(4, "Gradient flow on Omega_2", 5.0, [] {
    const auto sys = kirk_silber();
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    double flow_err = 0.0, fd_err = 0.0;
    const double h = 1e-6;
    for (int t = 0; t < 10000; ++t) {
      const State x{0.0, 0.0, u(rng), u(rng)};
      const auto f = vector_field(sys, x);
      const auto g = grad_V(sys, 1, x);
      for (Vertex i = 0; i < 4; ++i) flow_err = std::max(flow_err, std::fabs(f[i] + g[i]));
      for (Vertex i : {2u, 3u}) {
        State p = x, m = x;
        p[i] += h;
        m[i] -= h;
        fd_err = std::max(fd_err, std::fabs(g[i] - (potential_V(sys, 1, p) - potential_V(sys, 1, m)) / (2 * h)));
      }
    }
    return Verdict{flow_err <= 1e-12 && fd_err <= 1e-6,
                   "max |f + grad V| = " + fmt("%.2e", flow_err) + ", FD gradient err " + fmt("%.2e", fd_err)};
  });

  criterion(5, "Phi monotonicity", 30.0, [] {
    const auto sys = kirk_silber();
    const auto a = absorbing_annulus(sys);
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> shell(a.inner, a.outer);
    const std::vector<Vertex> q{1, 2, 3};
    int positive = 0, not_strict = 0;
    for (int t = 0; t < 10000; ++t) {
      const auto x = on_shell(rng, q, shell(rng));
      const double d = phi_angle_rate(sys, 1, x).dphi_dt;
      if (d > 0) ++positive;
      if (!(d < 0)) ++not_strict;  // random points lie off the axes
    }
    double worst_rise = -1.0;
    IntegratorConfig cfg;
    cfg.step = 0.01;
    cfg.max_time = 50.0;
    for (int t = 0; t < 100; ++t) {
      const auto traj = integrate_ode(sys, on_shell(rng, q, shell(rng)), cfg);
      for (std::size_t s = 1; s < traj.states.size(); ++s) {
        worst_rise = std::max(worst_rise, phi_angle_rate(sys, 1, traj.states[s]).phi -
                                              phi_angle_rate(sys, 1, traj.states[s - 1]).phi);
      }
    }
    return Verdict{positive == 0 && not_strict == 0 && worst_rise <= 1e-6,
                   std::to_string(positive) + " positive rates, " + std::to_string(not_strict) +
                       " non-strict; largest per-step rise along 100 orbits " + fmt("%.2e", worst_rise)};
  });

  criterion(6, "Separating node", 10.0, [] {
    bool ok = true;
    std::string detail;
    for (double eta : {0.05, 0.5}) {
      const auto sys = kirk_silber(eta);
      const double want = 1.0 / (2.0 + eta);
      const auto r = separatrix_refine(sys, 1, 2, 3, SamplingConfig{});
      const double refined = std::fabs(r.limit_point[2] * r.limit_point[2] - want);
      const auto seps = separating_equilibria(sys, 1);
      double closed = 1.0, residual = 1.0;
      if (seps.size() == 1) {
        closed = std::max(std::fabs(std::pow(seps[0].location[2], 2) - want),
                          std::fabs(std::pow(seps[0].location[3], 2) - want));
        residual = seps[0].residual;
      }
      ok = ok && refined <= 1e-6 && residual <= 1e-12 && closed <= 1e-14;
      detail += "eta=" + fmt("%g", eta) + ": refined err " + fmt("%.1e", refined) + ", residual " +
                fmt("%.1e", residual) + ", closed-form err " + fmt("%.1e", closed) + "; ";
    }
    return Verdict{ok, detail};
  });

  criterion(7, "Markov estimates for Kirk-Silber", 120.0, [] {
    const auto sys = kirk_silber();
    const Thresholds th;
    const auto est = estimate_all(sys, 10000, SamplingConfig{}, 2024);
    const double p3 = est[1].probability(2), p4 = est[1].probability(3);
    const double lost = est[1].escape_probability() + est[1].unresolved_fraction();
    bool ok = std::fabs(p3 - 0.5) <= 0.015 && std::fabs(p4 - 0.5) <= 0.015 && lost <= 0.005;
    ok = ok && est[0].probability(1) == 1.0;
    for (const auto& e : est) ok = ok && e.escape_probability() + e.unresolved_fraction() <= th.escape_max;
    const auto core = equable_core(sys, est, th);
    ok = ok && core == sys.graph();
    return Verdict{ok, "P(2->3) = " + fmt("%.4f", p3) + ", P(2->4) = " + fmt("%.4f", p4) + ", lost " +
                           fmt("%.4f", lost) + ", P(1->2) = " + fmt("%.4f", est[0].probability(1)) +
                           ", Sigma* " + (core == sys.graph() ? "= input graph" : "differs")};
  });

  criterion(8, "Non-equable fixture", 120.0, [] {
    RealizedSystem sys(fixtures::b3b3c4(), {kEps, kEta}, true);
    const Thresholds th;
    const auto e2 = estimate_transitions(sys, 1, 10000, SamplingConfig{}, 77);
    const auto e3 = estimate_transitions(sys, 2, 10000, SamplingConfig{}, 78);
    const double to3 = e2.probability(2), to4 = e2.probability(3);
    const bool eq2 = classify_node(sys, 1, e2, th).equable;
    const bool eq3 = classify_node(sys, 2, e3, th).equable;
    return Verdict{to3 <= 0.005 && to4 >= 0.99 && !eq2 && !eq3,
                   "xi2 shares: xi3 " + fmt("%.4f", to3) + ", xi4 " + fmt("%.4f", to4) + "; xi2 equable " +
                       (eq2 ? "yes" : "no") + ", xi3 equable " + (eq3 ? "yes" : "no")};
  });

  criterion(9, "Graph-lemma property suite", 30.0, [] {
    std::mt19937_64 rng(109);
    int counterexamples = 0, uncovered = 0, strong = 0;
    for (int t = 0; t < 1000; ++t) {
      const auto g = fixtures::random_digraph(rng, 8);
      const auto split = splitting_vertices(g);
      for (Vertex w = 0; w < g.size(); ++w) {
        std::vector<Vertex> subset{w};
        for (Vertex v : g.out_neighbors(w)) subset.push_back(v);
        const auto sub = induced_subgraph(g, subset);
        const bool lemma = subset.size() >= 3 && find_delta_cliques(sub).empty() && find_two_cycles(sub).empty();
        if (lemma != (split.count(w) == 1)) ++counterexamples;
      }
      if (!is_transitive(g)) continue;
      ++strong;
      std::set<Edge> covered;
      for (const auto& c : cycle_decomposition(g)) {
        for (std::size_t i = 0; i < c.size(); ++i) covered.insert({c[i], c[(i + 1) % c.size()]});
      }
      for (const auto& e : g.edges()) {
        if (!covered.count(e)) ++uncovered;
      }
    }
    return Verdict{counterexamples == 0 && uncovered == 0,
                   std::to_string(counterexamples) + " counterexamples; " + std::to_string(uncovered) +
                       " uncovered edges over " + std::to_string(strong) + " strongly connected graphs"};
  });

  criterion(10, "Noise spreads switching away from the one-dimensional connections", 600.0, [] {
    const auto sys = kirk_silber();
    IntegratorConfig cfg;
    cfg.step = 0.2;
    cfg.max_time = 1e6;
    const std::vector<double> alphas{1e-7, 1e-5, 1e-3};
    const int seeds = 5;
    // fraction[a][s]: among states with x1^2 < 0.1, the share with
    // min(x3^2, x4^2) > 0.05.
    std::vector<std::vector<double>> fraction(alphas.size(), std::vector<double>(seeds));
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      std::vector<State> starts(seeds, State{0.0, 1.0, 0.0, 0.0});
      std::vector<NoiseConfig> noise;
      for (int s = 0; s < seeds; ++s) noise.push_back({alphas[a], derive_seed(6, a, s)});
      std::vector<double> visits(seeds, 0.0), spread(seeds, 0.0);
      integrate_sde_lanes(sys, starts, cfg, noise, [&](std::size_t l, double, std::span<const double> x) {
        if (x[0] * x[0] < 0.1) {
          visits[l] += 1;
          if (std::min(x[2] * x[2], x[3] * x[3]) > 0.05) spread[l] += 1;
        }
      });
      for (int s = 0; s < seeds; ++s) fraction[a][s] = visits[s] > 0 ? spread[s] / visits[s] : 0.0;
    }
    int monotone = 0;
    std::string detail;
    for (int s = 0; s < seeds; ++s) {
      if (fraction[0][s] <= fraction[1][s] && fraction[1][s] <= fraction[2][s]) ++monotone;
      detail += "[" + fmt("%.4f", fraction[0][s]) + " " + fmt("%.4f", fraction[1][s]) + " " +
                fmt("%.4f", fraction[2][s]) + "] ";
    }
    return Verdict{monotone * 2 > seeds, std::to_string(monotone) + "/5 seeds monotone " + detail};
  });

  criterion(11, "Determinism and equivariance", 10.0, [] {
    const fs::path dir = fs::temp_directory_path() / "heteronet_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const std::string& n) { return (dir / n).string(); };
    const std::string graphs = HETERONET_GRAPHS;
    int differing = 0, failed = 0;
    auto twice = [&](const std::string& args, const std::string& a, const std::string& b,
                     const std::vector<std::string>& suffixes) {
      if (run(args + " -o " + p(a)) != 0 || run(args + " -o " + p(b)) != 0) {
        ++failed;
        return;
      }
      for (const auto& s : suffixes) {
        if (s == ".run.json") {
          // Manifests name their own output paths; everything else must agree.
          auto ja = Json::parse(slurp(p(a) + s)), jb = Json::parse(slurp(p(b) + s));
          ja.erase("outputs");
          jb.erase("outputs");
          if (ja != jb) ++differing;
        } else if (slurp(p(a) + s) != slurp(p(b) + s)) {
          ++differing;
        }
      }
      if (run("--verify " + p(a) + ".run.json") != 0) ++failed;
    };
    twice("realize " + graphs + "/kirk_silber.json", "s1.json", "s2.json", {"", ".run.json"});
    twice("simulate " + p("s1.json") + " --node 2 --sde 1e-4 --step 0.2 --time 500 --seed 4 --section \"x1^2<0.1\"",
          "t1.csv", "t2.csv", {"", ".section.csv", ".terminal.json", ".run.json"});
    twice("markov " + p("s1.json") + " -m 64 --seed 4", "m1.json", "m2.json", {"", ".chain.csv", ".run.json"});
    fs::remove_all(dir);

    const auto sys = kirk_silber();
    std::mt19937_64 rng(111);
    int broken = 0;
    for (int t = 0; t < 10; ++t) {
      const auto x = uniform_state(rng, 1.0);
      for (int mask = 0; mask < 16; ++mask) {
        State s(4);
        for (int i = 0; i < 4; ++i) s[i] = (mask >> i & 1) ? -1.0 : 1.0;
        if (!equivariance_check(sys, x, s)) ++broken;
      }
    }
    return Verdict{differing == 0 && failed == 0 && broken == 0,
                   std::to_string(differing) + " differing outputs, " + std::to_string(failed) +
                       " failed runs/verifications, " + std::to_string(broken) + " of 160 sign checks broken"};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
