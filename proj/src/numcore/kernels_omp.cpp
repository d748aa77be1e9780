#include "baptp/numcore/kernels.hpp"

#include <cmath>

#include "baptp/numcore/rng.hpp"

// Production kernels. Parallelism is per output element only; every
// reduction runs in ascending-k order inside a single thread, so results
// are bitwise identical for any thread count and match `serialref`.

namespace baptp::numcore::kernels {

namespace {
// Tensors below this size are not worth a fork/join.
constexpr std::ptrdiff_t kParallelCutoff = 16 * 1024;
}  // namespace

template <typename T>
void matmul(const T* a, const T* b, T* out, std::size_t r, std::size_t k,
            std::size_t c, bool acc) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(r * c);
#pragma omp parallel for schedule(static) if (total >= kParallelCutoff)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / c;
    const std::size_t j = static_cast<std::size_t>(idx) % c;
    T sum = T(0);
    const T* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      sum += arow[kk] * b[kk * c + j];
    }
    out[idx] = acc ? out[idx] + sum : sum;
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* out, std::size_t r, std::size_t k,
               std::size_t c, bool acc) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(r * c);
#pragma omp parallel for schedule(static) if (total >= kParallelCutoff)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / c;
    const std::size_t j = static_cast<std::size_t>(idx) % c;
    T sum = T(0);
    const T* arow = a + i * k;
    const T* brow = b + j * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      sum += arow[kk] * brow[kk];
    }
    out[idx] = acc ? out[idx] + sum : sum;
  }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* out, std::size_t r, std::size_t k,
               std::size_t c, bool acc) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(r * c);
#pragma omp parallel for schedule(static) if (total >= kParallelCutoff)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / c;
    const std::size_t j = static_cast<std::size_t>(idx) % c;
    T sum = T(0);
    for (std::size_t kk = 0; kk < k; ++kk) {
      sum += a[kk * r + i] * b[kk * c + j];
    }
    out[idx] = acc ? out[idx] + sum : sum;
  }
}

#define BAPTP_MAP_KERNEL(name, expr)                                     \
  template <typename T>                                                  \
  void name(const T* x, T* out, std::size_t n) {                         \
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n);         \
  _Pragma("omp parallel for schedule(static) if (total >= kParallelCutoff)") \
    for (std::ptrdiff_t i = 0; i < total; ++i) {                         \
      out[i] = expr;                                                     \
    }                                                                    \
  }

BAPTP_MAP_KERNEL(map_tanh, std::tanh(x[i]))
BAPTP_MAP_KERNEL(map_sigmoid, T(1) / (T(1) + std::exp(-x[i])))
BAPTP_MAP_KERNEL(map_sqrt, std::sqrt(x[i]))
#undef BAPTP_MAP_KERNEL

template <typename T>
void map_scale(const T* x, T alpha, T* out, std::size_t n) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (total >= kParallelCutoff)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    out[i] = alpha * x[i];
  }
}

#define BAPTP_BINARY_KERNEL(name, expr)                                  \
  template <typename T>                                                  \
  void name(const T* a, const T* b, T* out, std::size_t n) {             \
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n);         \
  _Pragma("omp parallel for schedule(static) if (total >= kParallelCutoff)") \
    for (std::ptrdiff_t i = 0; i < total; ++i) {                         \
      out[i] = expr;                                                     \
    }                                                                    \
  }

BAPTP_BINARY_KERNEL(binary_add, a[i] + b[i])
BAPTP_BINARY_KERNEL(binary_sub, a[i] - b[i])
BAPTP_BINARY_KERNEL(binary_mul, a[i] * b[i])
BAPTP_BINARY_KERNEL(binary_max, a[i] >= b[i] ? a[i] : b[i])
#undef BAPTP_BINARY_KERNEL

template <typename T>
void softmax(const T* x, T* out, std::size_t outer, std::size_t len,
             std::size_t inner) {
  const std::ptrdiff_t slices = static_cast<std::ptrdiff_t>(outer * inner);
#pragma omp parallel for schedule(static) if (slices* static_cast<std::ptrdiff_t>(len) >= kParallelCutoff)
  for (std::ptrdiff_t s = 0; s < slices; ++s) {
    const std::size_t o = static_cast<std::size_t>(s) / inner;
    const std::size_t in = static_cast<std::size_t>(s) % inner;
    const T* xs = x + o * len * inner + in;
    T* os = out + o * len * inner + in;
    T mx = xs[0];
    for (std::size_t i = 1; i < len; ++i) {
      if (xs[i * inner] > mx) mx = xs[i * inner];
    }
    T denom = T(0);
    for (std::size_t i = 0; i < len; ++i) {
      const T e = std::exp(xs[i * inner] - mx);
      os[i * inner] = e;
      denom += e;
    }
    for (std::size_t i = 0; i < len; ++i) {
      os[i * inner] /= denom;
    }
  }
}

template <typename T>
T reduce_sum(const T* x, std::size_t n) {
  // Sequential by contract: the reduction order is part of the
  // determinism guarantee.
  T sum = T(0);
  for (std::size_t i = 0; i < n; ++i) sum += x[i];
  return sum;
}

template <typename T>
void dropout(const T* x, T* out, std::size_t n, double p, std::uint64_t seed,
             std::uint64_t stream) {
  const T inv_keep = T(1.0 / (1.0 - p));
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (total >= kParallelCutoff)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    const bool keep = CounterRng::uniform01_at(seed, stream,
                                               static_cast<std::uint64_t>(i)) >= p;
    out[i] = keep ? x[i] * inv_keep : T(0);
  }
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (total >= kParallelCutoff)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    y[i] += alpha * x[i];
  }
}

template <typename T>
bool all_finite(const T* x, std::size_t n) {
  bool ok = true;
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) reduction(&& : ok) if (total >= kParallelCutoff)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    ok = ok && std::isfinite(static_cast<double>(x[i]));
  }
  return ok;
}

#define BAPTP_INSTANTIATE(T)                                                  \
  template void matmul<T>(const T*, const T*, T*, std::size_t, std::size_t,  \
                          std::size_t, bool);                                 \
  template void matmul_nt<T>(const T*, const T*, T*, std::size_t,            \
                             std::size_t, std::size_t, bool);                 \
  template void matmul_tn<T>(const T*, const T*, T*, std::size_t,            \
                             std::size_t, std::size_t, bool);                 \
  template void map_tanh<T>(const T*, T*, std::size_t);                      \
  template void map_sigmoid<T>(const T*, T*, std::size_t);                   \
  template void map_sqrt<T>(const T*, T*, std::size_t);                      \
  template void map_scale<T>(const T*, T, T*, std::size_t);                  \
  template void binary_add<T>(const T*, const T*, T*, std::size_t);          \
  template void binary_sub<T>(const T*, const T*, T*, std::size_t);          \
  template void binary_mul<T>(const T*, const T*, T*, std::size_t);          \
  template void binary_max<T>(const T*, const T*, T*, std::size_t);          \
  template void softmax<T>(const T*, T*, std::size_t, std::size_t,           \
                           std::size_t);                                     \
  template T reduce_sum<T>(const T*, std::size_t);                           \
  template void dropout<T>(const T*, T*, std::size_t, double, std::uint64_t, \
                           std::uint64_t);                                   \
  template void axpy<T>(T, const T*, T*, std::size_t);                       \
  template bool all_finite<T>(const T*, std::size_t);

BAPTP_INSTANTIATE(float)
BAPTP_INSTANTIATE(double)
#undef BAPTP_INSTANTIATE

}  // namespace baptp::numcore::kernels
