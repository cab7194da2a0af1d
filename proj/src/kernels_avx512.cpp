#include <immintrin.h>

#include "heteronet/kernels.hpp"

namespace {

struct Avx512Lanes {
  using R = __m512d;
  static constexpr std::size_t W = 8;
  static R load(const double* p) { return _mm512_loadu_pd(p); }
  static void store(double* p, R v) { _mm512_storeu_pd(p, v); }
  static R set1(double v) { return _mm512_set1_pd(v); }
  static R add(R a, R b) { return _mm512_add_pd(a, b); }
  static R sub(R a, R b) { return _mm512_sub_pd(a, b); }
  static R mul(R a, R b) { return _mm512_mul_pd(a, b); }
  static R abs(R a) { return _mm512_abs_pd(a); }
  static R min(R a, R b) { return _mm512_min_pd(a, b); }
};

}  // namespace

#include "kernels_simd.inl"

namespace heteronet::kernels::detail {
const BatchKernels avx512_table{Backend::Avx512, Avx512Lanes::W, &simd_field<Avx512Lanes>,
                                &simd_rk4<Avx512Lanes>, &simd_heun<Avx512Lanes>};
}  // namespace heteronet::kernels::detail
