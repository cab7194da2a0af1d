#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "heteronet/integrate.hpp"
#include "heteronet/rng.hpp"

using namespace heteronet;

namespace {

RealizedSystem ks() { return RealizedSystem(fixtures::kirk_silber(), {}); }

State end_state(const RealizedSystem& sys, State x, double h, double t) {
  IntegratorConfig cfg;
  cfg.step = h;
  cfg.max_time = t;
  return integrate_ode(sys, x, cfg).states.back();
}

double dist(const State& a, const State& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Stochastic Heun written directly on top of vector_field.
State heun_oracle(const RealizedSystem& sys, State x, double h, std::size_t steps, double alpha,
                  std::uint64_t seed) {
  GaussianSource g(seed);
  const double scale = alpha * std::sqrt(h);
  for (std::size_t s = 0; s < steps; ++s) {
    State dw(x.size());
    for (auto& v : dw) v = scale * g.normal();
    const auto f0 = vector_field(sys, x);
    State y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] + h * f0[i]) + dw[i];
    const auto f1 = vector_field(sys, y);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] + 0.5 * h * (f0[i] + f1[i])) + dw[i];
  }
  return x;
}

}  // namespace

TEST(Integrate, ConfigValidation) {
  IntegratorConfig cfg;
  cfg.step = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.node_radius = 1e-12;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW((NoiseConfig{-1.0, 0}.validate()), std::invalid_argument);
  EXPECT_EQ((IntegratorConfig{0.2, 1.0, 1e-9, 0.05}.max_steps()), 5u);
}

TEST(Integrate, Rk4IsFourthOrder) {
  const auto sys = ks();
  const State x0{0.3, 0.5, 0.4, 0.2};
  const double t = 2.0;
  const auto ref = end_state(sys, x0, 1e-4, t);
  const double e1 = dist(end_state(sys, x0, 0.1, t), ref);
  const double e2 = dist(end_state(sys, x0, 0.05, t), ref);
  const double e3 = dist(end_state(sys, x0, 0.025, t), ref);
  EXPECT_GE(std::log2(e1 / e2), 3.5);
  EXPECT_GE(std::log2(e2 / e3), 3.5);
}

TEST(Integrate, CoordinateHyperplanesStayExactlyInvariant) {
  const auto sys = ks();
  IntegratorConfig cfg;
  cfg.max_time = 200.0;
  const auto traj = integrate_ode(sys, State{0.0, 0.6, 0.3, 0.2}, cfg);
  for (const auto& x : traj.states) EXPECT_EQ(x[0], 0.0);
  const auto noisy = integrate_sde(sys, State{0.0, 0.6, 0.3, 0.0}, {0.1, 50.0, 1e-9, 0.05}, {0.0, 3});
  for (const auto& x : noisy.states) EXPECT_EQ(x[3], 0.0);
}

TEST(Integrate, PhiNonIncreasingAlongTrajectories) {
  const auto sys = ks();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  IntegratorConfig cfg;
  cfg.max_time = 100.0;
  for (int t = 0; t < 10; ++t) {
    const auto traj = integrate_ode(sys, State{0.0, u(rng), u(rng), u(rng)}, cfg);
    double prev = phi_angle_rate(sys, 1, traj.states.front()).phi;
    for (const auto& x : traj.states) {
      const double phi = phi_angle_rate(sys, 1, x).phi;
      EXPECT_LE(phi, prev + 1e-12);
      prev = phi;
    }
  }
}

TEST(Integrate, TerminalClassification) {
  const auto sys = ks();
  IntegratorConfig cfg;
  cfg.max_time = 3000.0;
  auto traj = integrate_ode(sys, State{0.0, 1.0, 1e-3 * std::cos(0.3), 1e-3 * std::sin(0.3)}, cfg);
  EXPECT_EQ(traj.terminal.kind, TerminalKind::ConvergedToNode);
  EXPECT_EQ(traj.terminal.node, Vertex{2});
  traj = integrate_ode(sys, State{0.0, 0.0, 0.0, 0.0}, cfg);
  EXPECT_EQ(traj.terminal.kind, TerminalKind::ConvergedToEquilibrium);
  traj = integrate_ode(sys, State{0.0, 0.0, 0.0, 30.0}, cfg);
  EXPECT_EQ(traj.terminal.kind, TerminalKind::LeftDomain);
  cfg.max_time = 1.0;
  traj = integrate_ode(sys, State{0.1, 0.1, 0.1, 0.1}, cfg);
  EXPECT_EQ(traj.terminal.kind, TerminalKind::MaxTime);
  EXPECT_EQ(traj.states.size(), 101u);
  EXPECT_THROW(integrate_ode(sys, State{NAN, 0, 0, 0}, cfg), IntegrationError);
  EXPECT_THROW(integrate_ode(sys, State{0, 0, 0}, cfg), std::invalid_argument);
}

TEST(Integrate, NearestNode) {
  const auto near = nearest_node(State{0.0, -0.99, 0.01, 0.0});
  EXPECT_EQ(near.node, 1u);
  EXPECT_NEAR(near.distance, std::sqrt(0.01 * 0.01 + 0.01 * 0.01), 1e-12);
}

TEST(Integrate, HeunMatchesOracle) {
  const auto sys = ks();
  const State x0{0.2, 0.7, 0.1, 0.3};
  for (double alpha : {0.0, 1e-3}) {
    const auto traj = integrate_sde(sys, x0, {0.2, 40.0, 1e-9, 0.05}, {alpha, 17});
    const auto ref = heun_oracle(sys, x0, 0.2, 200, alpha, 17);
    ASSERT_EQ(traj.states.size(), 201u);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(traj.states.back()[i], ref[i]);
  }
}

TEST(Integrate, SeededRunsRepeatAndSeedsDiffer) {
  const auto sys = ks();
  const State x0{0.0, 1.0, 1e-3, 0.0};
  const IntegratorConfig cfg{0.2, 200.0, 1e-9, 0.05};
  const auto a = integrate_sde(sys, x0, cfg, {1e-4, 5});
  const auto b = integrate_sde(sys, x0, cfg, {1e-4, 5});
  const auto c = integrate_sde(sys, x0, cfg, {1e-4, 6});
  EXPECT_EQ(a.states, b.states);
  EXPECT_NE(a.states, c.states);
}

TEST(Integrate, LanesMatchSingleRunsOnEveryBackend) {
  const auto sys = ks();
  const IntegratorConfig cfg{0.2, 100.0, 1e-9, 0.05};
  std::vector<State> starts;
  std::vector<NoiseConfig> noise;
  for (int l = 0; l < 5; ++l) {
    starts.push_back(State{0.0, 1.0, 1e-3 * l, 1e-3});
    noise.push_back({1e-4 * (l + 1), derive_seed(9, 1, l)});
  }
  for (const char* backend : {"scalar", "avx2", "avx512"}) {
    ::setenv("HETERONET_KERNEL", backend, 1);
    std::vector<State> last(5);
    integrate_sde_lanes(sys, starts, cfg, noise, [&](std::size_t l, double, std::span<const double> x) {
      last[l].assign(x.begin(), x.end());
    });
    for (int l = 0; l < 5; ++l) {
      EXPECT_EQ(last[l], integrate_sde(sys, starts[l], cfg, noise[l]).states.back()) << backend;
    }
  }
  ::unsetenv("HETERONET_KERNEL");
}

TEST(Integrate, SectionPredicates) {
  const auto p = parse_section_predicate("x1^2 < 0.1 && x3>0", 4);
  EXPECT_TRUE(p(State{0.3, 0, 0.1, 0}));
  EXPECT_FALSE(p(State{0.4, 0, 0.1, 0}));
  EXPECT_FALSE(p(State{0.3, 0, -0.1, 0}));
  EXPECT_THROW(parse_section_predicate("x5<1", 4), std::invalid_argument);
  EXPECT_THROW(parse_section_predicate("y1<1", 4), std::invalid_argument);
  EXPECT_THROW(parse_section_predicate("x1<1 &&", 4), std::invalid_argument);
  EXPECT_THROW(parse_section_predicate("x1<abc", 4), std::invalid_argument);

  Trajectory traj;
  for (int r = 0; r < 6; ++r) {
    traj.times.push_back(r);
    traj.states.push_back(State{r % 3 == 0 ? 0.0 : 1.0});
  }
  const auto q = parse_section_predicate("x1<0.5", 1);
  EXPECT_EQ(section_crossing_indices(traj, q), (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(section_crossings(traj, q).size(), 2u);
}

TEST(Integrate, CsvLayout) {
  Trajectory traj;
  traj.times = {0.0, 0.5};
  traj.states = {State{1.0, 0.1}, State{0.25, 1.0 / 3.0}};
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  EXPECT_EQ(os.str(), "t,x1,x2\n0,1,0.10000000000000001\n0.5,0.25,0.33333333333333331\n");
  std::ostringstream empty;
  write_states_csv(empty, 3, {}, {});
  EXPECT_EQ(empty.str(), "t,x1,x2,x3\n");
}
