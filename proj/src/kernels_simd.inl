// Batched kernels written once against a lane-vector abstraction `V`.
// Included by the per-ISA translation units; each supplies a traits struct
// with W, load, store, set1, add, mul, abs and min. The operation order
// mirrors kernels_scalar.cpp exactly.

namespace {

template <class V>
void simd_field_block(const heteronet::kernels::FieldModel& m, const double* x, double* out,
                      std::size_t lanes, double* sq) {
  const std::size_t n = m.dim;
  const double* c = m.coupling.data();
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = V::load(x + i * lanes);
    V::store(sq + i * lanes, V::mul(xi, xi));
  }
  const auto one = V::set1(1.0);
  for (std::size_t j = 0; j < n; ++j) {
    auto acc = one;
    for (std::size_t i = 0; i < n; ++i) {
      acc = V::add(acc, V::mul(V::set1(c[j * n + i]), V::load(sq + i * lanes)));
    }
    V::store(out + j * lanes, V::mul(V::load(x + j * lanes), acc));
  }
}

// Pointers passed to the *_block helpers are offset to a lane block; the
// row stride stays `lanes`.
template <class V>
void simd_field(const heteronet::kernels::FieldModel& m, const double* x, double* out,
                std::size_t lanes, double* scratch) {
  for (std::size_t b = 0; b < lanes; b += V::W) {
    simd_field_block<V>(m, x + b, out + b, lanes, scratch + b);
  }
}

template <class V>
void simd_rk4(const heteronet::kernels::FieldModel& m, double* x, std::size_t lanes, double h,
              std::size_t steps, double* min_d2, double* scratch) {
  const std::size_t n = m.dim;
  const std::size_t len = n * lanes;
  double* k1 = scratch;
  double* k2 = k1 + len;
  double* k3 = k2 + len;
  double* k4 = k3 + len;
  double* y = k4 + len;
  double* sq = y + len;
  const auto vh = V::set1(h);
  const auto vhh = V::set1(0.5 * h);
  const auto vh6 = V::set1(h / 6.0);
  const auto two = V::set1(2.0);
  const auto one = V::set1(1.0);

  for (std::size_t b = 0; b < lanes; b += V::W) {
    double* xb = x + b;
    for (std::size_t s = 0; s < steps; ++s) {
      simd_field_block<V>(m, xb, k1 + b, lanes, sq + b);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t q = i * lanes + b;
        V::store(y + q, V::add(V::load(x + q), V::mul(vhh, V::load(k1 + q))));
      }
      simd_field_block<V>(m, y + b, k2 + b, lanes, sq + b);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t q = i * lanes + b;
        V::store(y + q, V::add(V::load(x + q), V::mul(vhh, V::load(k2 + q))));
      }
      simd_field_block<V>(m, y + b, k3 + b, lanes, sq + b);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t q = i * lanes + b;
        V::store(y + q, V::add(V::load(x + q), V::mul(vh, V::load(k3 + q))));
      }
      simd_field_block<V>(m, y + b, k4 + b, lanes, sq + b);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t q = i * lanes + b;
        auto sum = V::add(V::load(k1 + q), V::mul(two, V::load(k2 + q)));
        sum = V::add(sum, V::mul(two, V::load(k3 + q)));
        sum = V::add(sum, V::load(k4 + q));
        V::store(x + q, V::add(V::load(x + q), V::mul(vh6, sum)));
      }
      if (min_d2 != nullptr) {
        auto r = V::set1(0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const auto xi = V::load(x + i * lanes + b);
          r = V::add(r, V::mul(xi, xi));
        }
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t q = i * lanes + b;
          const auto d2 = V::add(V::sub(r, V::mul(two, V::abs(V::load(x + q)))), one);
          V::store(min_d2 + q, V::min(d2, V::load(min_d2 + q)));
        }
      }
    }
  }
}

template <class V>
void simd_heun(const heteronet::kernels::FieldModel& m, double* x, const double* dw,
               std::size_t lanes, double h, double* scratch) {
  const std::size_t n = m.dim;
  const std::size_t len = n * lanes;
  double* f0 = scratch;
  double* f1 = f0 + len;
  double* y = f1 + len;
  double* sq = y + len;
  const auto vh = V::set1(h);
  const auto vhh = V::set1(0.5 * h);
  for (std::size_t b = 0; b < lanes; b += V::W) {
    simd_field_block<V>(m, x + b, f0 + b, lanes, sq + b);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t q = i * lanes + b;
      V::store(y + q, V::add(V::add(V::load(x + q), V::mul(vh, V::load(f0 + q))), V::load(dw + q)));
    }
    simd_field_block<V>(m, y + b, f1 + b, lanes, sq + b);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t q = i * lanes + b;
      const auto avg = V::mul(vhh, V::add(V::load(f0 + q), V::load(f1 + q)));
      V::store(x + q, V::add(V::add(V::load(x + q), avg), V::load(dw + q)));
    }
  }
}

}  // namespace
