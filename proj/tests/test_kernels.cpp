#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>

#include "heteronet/kernels.hpp"

using namespace heteronet::kernels;

namespace {

FieldModel random_model(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.2, 0.1);
  FieldModel m{n, std::vector<double>(n * n)};
  for (auto& c : m.coupling) c = u(rng);
  return m;
}

std::vector<double> random_states(std::mt19937_64& rng, std::size_t len) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(len);
  for (auto& v : x) v = u(rng);
  return x;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<Backend> simd_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Avx2, Backend::Avx512}) {
    if (backend_available(b)) out.push_back(b);
  }
  return out;
}

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(backend_available(Backend::Scalar));
  EXPECT_EQ(batch_kernels(Backend::Scalar).width, 1u);
  EXPECT_EQ(backend_name(Backend::Avx512), "avx512");
}

TEST(Kernels, EnvironmentSelectsBackend) {
  ::setenv("HETERONET_KERNEL", "scalar", 1);
  EXPECT_EQ(active_backend(), Backend::Scalar);
  ::setenv("HETERONET_KERNEL", "no-such-backend", 1);
  EXPECT_EQ(active_backend(), best_backend());
  ::unsetenv("HETERONET_KERNEL");
  EXPECT_EQ(active_backend(), best_backend());
}

TEST(Kernels, FieldMatchesDirectFormula) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 3u, 4u, 7u}) {
    const auto m = random_model(rng, n);
    const auto x = random_states(rng, n);
    std::vector<double> f(n);
    field(m, x, f);
    for (std::size_t j = 0; j < n; ++j) {
      double F = 1.0;
      for (std::size_t i = 0; i < n; ++i) F += m.coupling[j * n + i] * x[i] * x[i];
      EXPECT_NEAR(f[j], x[j] * F, 1e-15);
    }
  }
}

TEST(Kernels, LanesAreIndependent) {
  std::mt19937_64 rng(2);
  const std::size_t n = 5, lanes = 8;
  const auto m = random_model(rng, n);
  auto batch = random_states(rng, n * lanes);
  std::vector<std::vector<double>> single(lanes, std::vector<double>(n));
  for (std::size_t l = 0; l < lanes; ++l)
    for (std::size_t i = 0; i < n; ++i) single[l][i] = batch[i * lanes + l];

  const auto& k = batch_kernels(Backend::Scalar);
  std::vector<double> scratch(scratch_size(n, lanes));
  k.rk4(m, batch.data(), lanes, 0.01, 5, nullptr, scratch.data());
  for (std::size_t l = 0; l < lanes; ++l) {
    for (int s = 0; s < 5; ++s) rk4_step(m, single[l], 0.01);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(batch[i * lanes + l], single[l][i]);
  }
}

TEST(Kernels, SimdFieldBitIdenticalToScalar) {
  std::mt19937_64 rng(3);
  for (Backend b : simd_backends()) {
    const auto& simd = batch_kernels(b);
    const auto& ref = batch_kernels(Backend::Scalar);
    for (std::size_t n : {1u, 2u, 4u, 6u, 9u}) {
      const std::size_t lanes = simd.width * 3;
      const auto m = random_model(rng, n);
      const auto x = random_states(rng, n * lanes);
      std::vector<double> a(n * lanes), c(n * lanes), scratch(scratch_size(n, lanes));
      ref.field(m, x.data(), a.data(), lanes, scratch.data());
      simd.field(m, x.data(), c.data(), lanes, scratch.data());
      EXPECT_TRUE(same_bits(a, c)) << backend_name(b) << " n=" << n;
    }
  }
}

TEST(Kernels, SimdRk4AndMinimaBitIdenticalToScalar) {
  std::mt19937_64 rng(4);
  const double inf = std::numeric_limits<double>::infinity();
  for (Backend b : simd_backends()) {
    const auto& simd = batch_kernels(b);
    const auto& ref = batch_kernels(Backend::Scalar);
    for (std::size_t n : {2u, 4u, 5u}) {
      const std::size_t lanes = simd.width * 2;
      const auto m = random_model(rng, n);
      auto xa = random_states(rng, n * lanes);
      auto xb = xa;
      std::vector<double> da(n * lanes, inf), db(n * lanes, inf), scratch(scratch_size(n, lanes));
      ref.rk4(m, xa.data(), lanes, 0.02, 37, da.data(), scratch.data());
      simd.rk4(m, xb.data(), lanes, 0.02, 37, db.data(), scratch.data());
      EXPECT_TRUE(same_bits(xa, xb)) << backend_name(b);
      EXPECT_TRUE(same_bits(da, db)) << backend_name(b);
    }
  }
}

TEST(Kernels, SimdHeunBitIdenticalToScalar) {
  std::mt19937_64 rng(5);
  for (Backend b : simd_backends()) {
    const auto& simd = batch_kernels(b);
    const auto& ref = batch_kernels(Backend::Scalar);
    const std::size_t n = 4, lanes = simd.width;
    const auto m = random_model(rng, n);
    auto xa = random_states(rng, n * lanes);
    auto xb = xa;
    std::vector<double> scratch(scratch_size(n, lanes));
    for (int s = 0; s < 100; ++s) {
      auto dw = random_states(rng, n * lanes);
      for (auto& v : dw) v *= 1e-3;
      ref.heun(m, xa.data(), dw.data(), lanes, 0.2, scratch.data());
      simd.heun(m, xb.data(), dw.data(), lanes, 0.2, scratch.data());
    }
    EXPECT_TRUE(same_bits(xa, xb)) << backend_name(b);
  }
}

TEST(Kernels, MinimumDistanceTracksNearestAxisPoint) {
  // Start on e_1 and stay there (F_1 = 1 + c_11 = 0 for c_11 = -1).
  FieldModel m{2, {-1.0, -0.5, -0.5, -1.0}};
  std::vector<double> x{1.0, 0.0};
  std::vector<double> d(2, std::numeric_limits<double>::infinity());
  std::vector<double> scratch(scratch_size(2, 1));
  batch_kernels(Backend::Scalar).rk4(m, x.data(), 1, 0.01, 3, d.data(), scratch.data());
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 2.0);
}
