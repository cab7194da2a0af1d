#include <immintrin.h>

#include "heteronet/kernels.hpp"

namespace {

struct Avx2Lanes {
  using R = __m256d;
  static constexpr std::size_t W = 4;
  static R load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, R v) { _mm256_storeu_pd(p, v); }
  static R set1(double v) { return _mm256_set1_pd(v); }
  static R add(R a, R b) { return _mm256_add_pd(a, b); }
  static R sub(R a, R b) { return _mm256_sub_pd(a, b); }
  static R mul(R a, R b) { return _mm256_mul_pd(a, b); }
  static R abs(R a) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), a); }
  static R min(R a, R b) { return _mm256_min_pd(a, b); }
};

}  // namespace

#include "kernels_simd.inl"

namespace heteronet::kernels::detail {
const BatchKernels avx2_table{Backend::Avx2, Avx2Lanes::W, &simd_field<Avx2Lanes>,
                              &simd_rk4<Avx2Lanes>, &simd_heun<Avx2Lanes>};
}  // namespace heteronet::kernels::detail
