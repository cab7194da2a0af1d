#include <cmath>

#include "heteronet/kernels.hpp"

namespace heteronet::kernels {

namespace {

void field_lanes(const FieldModel& m, const double* x, double* out, std::size_t lanes,
                 double* sq) {
  const std::size_t n = m.dim;
  const double* c = m.coupling.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < lanes; ++l) sq[i * lanes + l] = x[i * lanes + l] * x[i * lanes + l];
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < lanes; ++l) {
      double acc = 1.0;
      for (std::size_t i = 0; i < n; ++i) acc = acc + c[j * n + i] * sq[i * lanes + l];
      out[j * lanes + l] = x[j * lanes + l] * acc;
    }
  }
}

void scalar_field(const FieldModel& m, const double* x, double* out, std::size_t lanes,
                  double* scratch) {
  field_lanes(m, x, out, lanes, scratch);
}

void scalar_rk4(const FieldModel& m, double* x, std::size_t lanes, double h, std::size_t steps,
                double* min_d2, double* scratch) {
  const std::size_t len = m.dim * lanes;
  double* k1 = scratch;
  double* k2 = k1 + len;
  double* k3 = k2 + len;
  double* k4 = k3 + len;
  double* y = k4 + len;
  double* sq = y + len;
  const double hh = 0.5 * h;
  const double h6 = h / 6.0;

  for (std::size_t s = 0; s < steps; ++s) {
    field_lanes(m, x, k1, lanes, sq);
    for (std::size_t q = 0; q < len; ++q) y[q] = x[q] + hh * k1[q];
    field_lanes(m, y, k2, lanes, sq);
    for (std::size_t q = 0; q < len; ++q) y[q] = x[q] + hh * k2[q];
    field_lanes(m, y, k3, lanes, sq);
    for (std::size_t q = 0; q < len; ++q) y[q] = x[q] + h * k3[q];
    field_lanes(m, y, k4, lanes, sq);
    for (std::size_t q = 0; q < len; ++q) {
      x[q] = x[q] + h6 * (((k1[q] + 2.0 * k2[q]) + 2.0 * k3[q]) + k4[q]);
    }
    if (min_d2 != nullptr) {
      for (std::size_t l = 0; l < lanes; ++l) {
        double r = 0.0;
        for (std::size_t i = 0; i < m.dim; ++i) r = r + x[i * lanes + l] * x[i * lanes + l];
        for (std::size_t i = 0; i < m.dim; ++i) {
          const double d2 = (r - 2.0 * std::fabs(x[i * lanes + l])) + 1.0;
          double& slot = min_d2[i * lanes + l];
          slot = d2 < slot ? d2 : slot;
        }
      }
    }
  }
}

void scalar_heun(const FieldModel& m, double* x, const double* dw, std::size_t lanes, double h,
                 double* scratch) {
  const std::size_t len = m.dim * lanes;
  double* f0 = scratch;
  double* f1 = f0 + len;
  double* y = f1 + len;
  double* sq = y + len;
  const double hh = 0.5 * h;
  field_lanes(m, x, f0, lanes, sq);
  for (std::size_t q = 0; q < len; ++q) y[q] = (x[q] + h * f0[q]) + dw[q];
  field_lanes(m, y, f1, lanes, sq);
  for (std::size_t q = 0; q < len; ++q) x[q] = (x[q] + hh * (f0[q] + f1[q])) + dw[q];
}

}  // namespace

namespace detail {
const BatchKernels scalar_table{Backend::Scalar, 1, &scalar_field, &scalar_rk4, &scalar_heun};
}  // namespace detail

void field(const FieldModel& m, std::span<const double> x, std::span<double> out) {
  std::vector<double> sq(m.dim);
  field_lanes(m, x.data(), out.data(), 1, sq.data());
}

void rk4_step(const FieldModel& m, std::span<double> x, double h) {
  std::vector<double> scratch(scratch_size(m.dim, 1));
  scalar_rk4(m, x.data(), 1, h, 1, nullptr, scratch.data());
}

void heun_step(const FieldModel& m, std::span<double> x, std::span<const double> dw, double h) {
  std::vector<double> scratch(scratch_size(m.dim, 1));
  scalar_heun(m, x.data(), dw.data(), 1, h, scratch.data());
}

}  // namespace heteronet::kernels
