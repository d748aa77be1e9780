#include "baptp/numcore/adam.hpp"

#include <cmath>

#include "baptp/numcore/kernels.hpp"

namespace baptp::numcore {

template <typename T>
void AdamState<T>::init(std::span<const Tensor<T>* const> params) {
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Tensor<T>* p : params) {
    m.push_back(Tensor<T>::zeros(p->shape));
    v.push_back(Tensor<T>::zeros(p->shape));
  }
  step = 0;
}

template <typename T>
void adam_step(AdamState<T>& state, std::span<Tensor<T>* const> params,
               std::span<const Tensor<T>* const> grads,
               std::span<const std::string> names) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam: parameter/gradient/state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i])) {
      throw ShapeError("adam: gradient shape mismatch for '" +
                       (i < names.size() ? names[i] : std::to_string(i)) + "'");
    }
    if (!kernels::all_finite(grads[i]->data.data(), grads[i]->numel())) {
      throw NumericError("adam: non-finite gradient for parameter '" +
                         (i < names.size() ? names[i] : std::to_string(i)) +
                         "'");
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    const Tensor<T>& g = *grads[i];
    Tensor<T>& mi = state.m[i];
    Tensor<T>& vi = state.v[i];
    const std::size_t n = p.numel();
    for (std::size_t j = 0; j < n; ++j) {
      const double gj =
          static_cast<double>(g[j]) + state.l2 * static_cast<double>(p[j]);
      const double mj = state.beta1 * static_cast<double>(mi[j]) +
                        (1.0 - state.beta1) * gj;
      const double vj = state.beta2 * static_cast<double>(vi[j]) +
                        (1.0 - state.beta2) * gj * gj;
      mi[j] = static_cast<T>(mj);
      vi[j] = static_cast<T>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      p[j] = static_cast<T>(static_cast<double>(p[j]) -
                            state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(AdamState<float>&,
                               std::span<Tensor<float>* const>,
                               std::span<const Tensor<float>* const>,
                               std::span<const std::string>);
template void adam_step<double>(AdamState<double>&,
                                std::span<Tensor<double>* const>,
                                std::span<const Tensor<double>* const>,
                                std::span<const std::string>);

}  // namespace baptp::numcore
