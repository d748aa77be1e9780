#include "baptp/numcore/kernels.hpp"

#include <cmath>

#include "baptp/numcore/rng.hpp"

// Plain single-threaded reference kernels. Kept deliberately naive; the
// unit tests assert bitwise agreement with the OpenMP versions and the
// kernel benchmark times the two side by side.

namespace baptp::numcore::serialref {

template <typename T>
void matmul(const T* a, const T* b, T* out, std::size_t r, std::size_t k,
            std::size_t c, bool acc) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      T sum = T(0);
      for (std::size_t kk = 0; kk < k; ++kk) {
        sum += a[i * k + kk] * b[kk * c + j];
      }
      T& o = out[i * c + j];
      o = acc ? o + sum : sum;
    }
  }
}

template <typename T>
void matmul_nt(const T* a, const T* b, T* out, std::size_t r, std::size_t k,
               std::size_t c, bool acc) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      T sum = T(0);
      for (std::size_t kk = 0; kk < k; ++kk) {
        sum += a[i * k + kk] * b[j * k + kk];
      }
      T& o = out[i * c + j];
      o = acc ? o + sum : sum;
    }
  }
}

template <typename T>
void matmul_tn(const T* a, const T* b, T* out, std::size_t r, std::size_t k,
               std::size_t c, bool acc) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      T sum = T(0);
      for (std::size_t kk = 0; kk < k; ++kk) {
        sum += a[kk * r + i] * b[kk * c + j];
      }
      T& o = out[i * c + j];
      o = acc ? o + sum : sum;
    }
  }
}

template <typename T>
void map_tanh(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

template <typename T>
void map_sigmoid(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void map_sqrt(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(x[i]);
}

template <typename T>
void map_scale(const T* x, T alpha, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
void binary_add(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void binary_sub(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void binary_mul(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void binary_max(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] >= b[i] ? a[i] : b[i];
}

template <typename T>
void softmax(const T* x, T* out, std::size_t outer, std::size_t len,
             std::size_t inner) {
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
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
}

template <typename T>
T reduce_sum(const T* x, std::size_t n) {
  T sum = T(0);
  for (std::size_t i = 0; i < n; ++i) sum += x[i];
  return sum;
}

template <typename T>
void dropout(const T* x, T* out, std::size_t n, double p, std::uint64_t seed,
             std::uint64_t stream) {
  const T inv_keep = T(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < n; ++i) {
    const bool keep = CounterRng::uniform01_at(seed, stream, i) >= p;
    out[i] = keep ? x[i] * inv_keep : T(0);
  }
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
bool all_finite(const T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(x[i]))) return false;
  }
  return true;
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

}  // namespace baptp::numcore::serialref
