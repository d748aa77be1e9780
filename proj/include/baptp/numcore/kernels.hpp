#pragma once

#include <cstddef>
#include <cstdint>

namespace baptp::numcore {

// Dense kernels behind the autodiff tape. The production versions in
// namespace `kernels` carry OpenMP pragmas on their element loops; the
// versions in `serialref` are plain loops kept as a reference for tests
// and the kernel benchmark. Both orders per-element work identically
// (ascending k for reductions), so their results are bitwise equal.
//
// All matrix arguments are row-major. `acc` selects accumulate (+=) over
// overwrite (=) for the output.

#define BAPTP_KERNEL_DECLS                                                     \
  template <typename T>                                                        \
  void matmul(const T* a, const T* b, T* out, std::size_t r, std::size_t k,    \
              std::size_t c, bool acc);                                        \
  /* out[r,c] = a[r,k] * b[c,k]^T */                                           \
  template <typename T>                                                        \
  void matmul_nt(const T* a, const T* b, T* out, std::size_t r, std::size_t k, \
                 std::size_t c, bool acc);                                     \
  /* out[r,c] = a[k,r]^T * b[k,c] */                                           \
  template <typename T>                                                        \
  void matmul_tn(const T* a, const T* b, T* out, std::size_t r, std::size_t k, \
                 std::size_t c, bool acc);                                     \
  template <typename T>                                                        \
  void map_tanh(const T* x, T* out, std::size_t n);                            \
  template <typename T>                                                        \
  void map_sigmoid(const T* x, T* out, std::size_t n);                         \
  template <typename T>                                                        \
  void map_sqrt(const T* x, T* out, std::size_t n);                            \
  template <typename T>                                                        \
  void map_scale(const T* x, T alpha, T* out, std::size_t n);                  \
  template <typename T>                                                        \
  void binary_add(const T* a, const T* b, T* out, std::size_t n);              \
  template <typename T>                                                        \
  void binary_sub(const T* a, const T* b, T* out, std::size_t n);              \
  template <typename T>                                                        \
  void binary_mul(const T* a, const T* b, T* out, std::size_t n);              \
  template <typename T>                                                        \
  void binary_max(const T* a, const T* b, T* out, std::size_t n);              \
  /* softmax along the middle extent of x viewed as [outer, len, inner] */     \
  template <typename T>                                                        \
  void softmax(const T* x, T* out, std::size_t outer, std::size_t len,         \
               std::size_t inner);                                             \
  template <typename T>                                                        \
  T reduce_sum(const T* x, std::size_t n);                                     \
  /* keep-with-probability (1-p), survivors scaled by 1/(1-p); the mask is a   \
     pure function of (seed, stream, element index) */                         \
  template <typename T>                                                        \
  void dropout(const T* x, T* out, std::size_t n, double p,                    \
               std::uint64_t seed, std::uint64_t stream);                      \
  /* y += alpha * x */                                                         \
  template <typename T>                                                        \
  void axpy(T alpha, const T* x, T* y, std::size_t n);                         \
  template <typename T>                                                        \
  bool all_finite(const T* x, std::size_t n);

namespace kernels {
BAPTP_KERNEL_DECLS
}  // namespace kernels

namespace serialref {
BAPTP_KERNEL_DECLS
}  // namespace serialref

#undef BAPTP_KERNEL_DECLS

}  // namespace baptp::numcore
