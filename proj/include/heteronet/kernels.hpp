#pragma once

// Inner loops of the realized vector field f_j(x) = x_j * F_j(x) with
// F_j(x) = 1 + sum_i c_ji x_i^2.
//
// Every kernel exists as a portable scalar reference and, where the CPU
// allows it, as an AVX2 or AVX-512 variant chosen at runtime. Batched
// kernels work on structure-of-arrays state: component i of lane l lives at
// x[i * lanes + l]. All variants perform the same IEEE operations in the
// same order (the build disables FMA contraction), so results agree bit for
// bit across backends.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace heteronet::kernels {

struct FieldModel {
  std::size_t dim = 0;
  /// coupling[j * dim + i] is the coefficient of x_i^2 in F_j.
  std::vector<double> coupling;
};

enum class Backend { Scalar, Avx2, Avx512 };

/// Scratch doubles required by the batched kernels for `lanes` lanes.
constexpr std::size_t scratch_size(std::size_t dim, std::size_t lanes) {
  return 6 * dim * lanes;
}

struct BatchKernels {
  Backend backend;
  /// Lane counts passed to the kernels must be multiples of this.
  std::size_t width;

  void (*field)(const FieldModel& m, const double* x, double* out, std::size_t lanes,
                double* scratch);

  /// `steps` classical RK4 steps of size h, in place. If `min_d2` is not
  /// null it holds dim*lanes running minima of |x|^2 - 2|x_k| + 1, the
  /// squared distance from x to the nearer of +-e_k, updated after each step.
  void (*rk4)(const FieldModel& m, double* x, std::size_t lanes, double h, std::size_t steps,
              double* min_d2, double* scratch);

  /// One stochastic Heun step with pre-scaled noise increments dw:
  ///   y  = x + h f(x) + dw
  ///   x' = x + (h/2)(f(x) + f(y)) + dw
  void (*heun)(const FieldModel& m, double* x, const double* dw, std::size_t lanes, double h,
               double* scratch);
};

bool backend_available(Backend b);
const BatchKernels& batch_kernels(Backend b);

/// Widest backend the running CPU supports.
Backend best_backend();

/// best_backend(), unless HETERONET_KERNEL=scalar|avx2|avx512 selects an
/// available one.
Backend active_backend();

std::string_view backend_name(Backend b);

// Single-state conveniences on the scalar reference path (lanes = 1).

void field(const FieldModel& m, std::span<const double> x, std::span<double> out);
void rk4_step(const FieldModel& m, std::span<double> x, double h);
void heun_step(const FieldModel& m, std::span<double> x, std::span<const double> dw, double h);

namespace detail {
// Per-backend tables, defined in their own translation units.
extern const BatchKernels scalar_table;
#if defined(HETERONET_WITH_AVX2)
extern const BatchKernels avx2_table;
#endif
#if defined(HETERONET_WITH_AVX512)
extern const BatchKernels avx512_table;
#endif
}  // namespace detail

}  // namespace heteronet::kernels
