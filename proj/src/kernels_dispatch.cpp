#include <cstdlib>
#include <stdexcept>
#include <string>

#include "heteronet/kernels.hpp"

namespace heteronet::kernels {

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(HETERONET_WITH_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Avx512:
#if defined(HETERONET_WITH_AVX512)
      return __builtin_cpu_supports("avx512f");
#else
      return false;
#endif
  }
  return false;
}

const BatchKernels& batch_kernels(Backend b) {
  if (!backend_available(b)) {
    throw std::runtime_error("kernel backend " + std::string(backend_name(b)) +
                             " is not available on this machine");
  }
  switch (b) {
#if defined(HETERONET_WITH_AVX2)
    case Backend::Avx2:
      return detail::avx2_table;
#endif
#if defined(HETERONET_WITH_AVX512)
    case Backend::Avx512:
      return detail::avx512_table;
#endif
    default:
      return detail::scalar_table;
  }
}

Backend best_backend() {
  if (backend_available(Backend::Avx512)) return Backend::Avx512;
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  return Backend::Scalar;
}

Backend active_backend() {
  if (const char* env = std::getenv("HETERONET_KERNEL")) {
    const std::string want(env);
    for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Avx512}) {
      if (want == backend_name(b) && backend_available(b)) return b;
    }
  }
  return best_backend();
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
    case Backend::Avx512:
      return "avx512";
  }
  return "unknown";
}

}  // namespace heteronet::kernels
