#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "baptp/numcore/tensor.hpp"

namespace baptp::numcore {

// Adam with bias correction and coupled L2 regularization: the decay term
// l2 * theta is added to the raw gradient before the moment updates.
template <typename T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 0.0;
  std::int64_t step = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;

  // Sizes the moment buffers to match `params`; resets the step counter.
  void init(std::span<const Tensor<T>* const> params);
  bool initialized() const { return !m.empty(); }
};

// One update over a fixed parameter order. `names` is used for diagnostics
// only; a non-finite gradient aborts with the offending parameter's name.
template <typename T>
void adam_step(AdamState<T>& state, std::span<Tensor<T>* const> params,
               std::span<const Tensor<T>* const> grads,
               std::span<const std::string> names);

extern template struct AdamState<float>;
extern template struct AdamState<double>;
extern template void adam_step<float>(AdamState<float>&,
                                      std::span<Tensor<float>* const>,
                                      std::span<const Tensor<float>* const>,
                                      std::span<const std::string>);
extern template void adam_step<double>(AdamState<double>&,
                                       std::span<Tensor<double>* const>,
                                       std::span<const Tensor<double>* const>,
                                       std::span<const std::string>);

}  // namespace baptp::numcore
