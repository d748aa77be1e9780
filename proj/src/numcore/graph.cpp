#include "baptp/numcore/graph.hpp"

#include <cmath>
#include <string>

#include "baptp/numcore/kernels.hpp"
#include "baptp/numcore/rng.hpp"

namespace baptp::numcore {

namespace {

template <typename T>
void require_finite(const Tensor<T>& t, const char* opname) {
  if (!kernels::all_finite(t.data.data(), t.numel())) {
    throw NumericError(std::string(opname) + ": non-finite value produced");
  }
}

template <typename T>
std::size_t last_extent(const Tensor<T>& t) {
  return t.shape.back();
}

}  // namespace

template <typename T>
const char* Graph<T>::op_name(Op op) {
  switch (op) {
    case Op::kConst: return "constant";
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kMax: return "max";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSqrt: return "sqrt";
    case Op::kScale: return "scale";
    case Op::kDropout: return "dropout";
    case Op::kSoftmax: return "softmax";
    case Op::kConcatCols: return "concat";
    case Op::kConcatRows: return "concat_rows";
    case Op::kIndex: return "index";
    case Op::kSumAll: return "sum";
  }
  return "?";
}

template <typename T>
void Graph<T>::check_operand(Id id, const char* opname) const {
  if (id >= nodes_.size()) {
    throw Error(std::string(opname) + ": operand id out of range");
  }
}

template <typename T>
typename Graph<T>::Id Graph<T>::push(Node n, const char* opname) {
  require_finite(n.external ? *n.external : n.val, opname);
  if (n.tracked) {
    const Tensor<T>& v = n.external ? *n.external : n.val;
    n.grd = Tensor<T>::zeros(v.shape);
  }
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

template <typename T>
typename Graph<T>::Id Graph<T>::constant(Tensor<T> v) {
  Node n;
  n.op = Op::kConst;
  n.val = std::move(v);
  return push(std::move(n), "constant");
}

template <typename T>
typename Graph<T>::Id Graph<T>::leaf(const Tensor<T>* external) {
  Node n;
  n.op = Op::kLeaf;
  n.external = external;
  n.tracked = true;
  return push(std::move(n), "leaf");
}

template <typename T>
typename Graph<T>::Id Graph<T>::matmul(Id a, Id b) {
  check_operand(a, "matmul");
  check_operand(b, "matmul");
  const Tensor<T>& va = value(a);
  const Tensor<T>& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.cols() != vb.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(va.shape) +
                     " x " + shape_str(vb.shape));
  }
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.tracked = nodes_[a].tracked || nodes_[b].tracked;
  n.val = Tensor<T>({va.rows(), vb.cols()});
  kernels::matmul(va.data.data(), vb.data.data(), n.val.data.data(), va.rows(),
                  va.cols(), vb.cols(), false);
  return push(std::move(n), "matmul");
}

namespace {

template <typename T, typename F>
void broadcast_apply(const Tensor<T>& va, const Tensor<T>& vb, Tensor<T>& out,
                     F&& f) {
  if (va.numel() == out.numel() && vb.numel() == 1) {
    const T s = vb.data[0];
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(va[i], s);
  } else {
    const T s = va.data[0];
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(s, vb[i]);
  }
}

}  // namespace

#define BAPTP_BINARY_OP(method, opEnum, kernel, fn)                           \
  template <typename T>                                                       \
  typename Graph<T>::Id Graph<T>::method(Id a, Id b) {                        \
    check_operand(a, #method);                                                \
    check_operand(b, #method);                                                \
    const Tensor<T>& va = value(a);                                           \
    const Tensor<T>& vb = value(b);                                           \
    Node n;                                                                   \
    n.op = Op::opEnum;                                                        \
    n.a = a;                                                                  \
    n.b = b;                                                                  \
    n.tracked = nodes_[a].tracked || nodes_[b].tracked;                       \
    if (va.same_shape(vb)) {                                                  \
      n.val = Tensor<T>(va.shape);                                            \
      kernels::kernel(va.data.data(), vb.data.data(), n.val.data.data(),      \
                      va.numel());                                            \
    } else if (vb.numel() == 1 || va.numel() == 1) {                          \
      n.val = Tensor<T>(vb.numel() == 1 ? va.shape : vb.shape);               \
      broadcast_apply(va, vb, n.val, [](T x, T y) { return fn; });            \
    } else {                                                                  \
      throw ShapeError(std::string(#method) + ": incompatible shapes " +      \
                       shape_str(va.shape) + " vs " + shape_str(vb.shape));   \
    }                                                                         \
    return push(std::move(n), #method);                                       \
  }

BAPTP_BINARY_OP(add, kAdd, binary_add, x + y)
BAPTP_BINARY_OP(sub, kSub, binary_sub, x - y)
BAPTP_BINARY_OP(mul, kMul, binary_mul, x* y)
BAPTP_BINARY_OP(maximum, kMax, binary_max, x >= y ? x : y)
#undef BAPTP_BINARY_OP

#define BAPTP_UNARY_OP(method, opEnum, kernel)                    \
  template <typename T>                                           \
  typename Graph<T>::Id Graph<T>::method(Id x) {                  \
    check_operand(x, #method);                                    \
    const Tensor<T>& vx = value(x);                               \
    Node n;                                                       \
    n.op = Op::opEnum;                                            \
    n.a = x;                                                      \
    n.tracked = nodes_[x].tracked;                                \
    n.val = Tensor<T>(vx.shape);                                  \
    kernels::kernel(vx.data.data(), n.val.data.data(), vx.numel()); \
    return push(std::move(n), #method);                           \
  }

BAPTP_UNARY_OP(tanh_, kTanh, map_tanh)
BAPTP_UNARY_OP(sigmoid_, kSigmoid, map_sigmoid)
BAPTP_UNARY_OP(sqrt_, kSqrt, map_sqrt)
#undef BAPTP_UNARY_OP

template <typename T>
typename Graph<T>::Id Graph<T>::scale(Id x, double alpha) {
  check_operand(x, "scale");
  const Tensor<T>& vx = value(x);
  Node n;
  n.op = Op::kScale;
  n.a = x;
  n.scalar = alpha;
  n.tracked = nodes_[x].tracked;
  n.val = Tensor<T>(vx.shape);
  kernels::map_scale(vx.data.data(), static_cast<T>(alpha), n.val.data.data(),
                     vx.numel());
  return push(std::move(n), "scale");
}

template <typename T>
typename Graph<T>::Id Graph<T>::dropout(Id x, double p, bool training) {
  check_operand(x, "dropout");
  if (p < 0.0 || p >= 1.0) {
    throw ConfigError("dropout: probability must lie in [0,1), got " +
                      std::to_string(p));
  }
  if (!training || p == 0.0) {
    return x;  // exact identity at inference
  }
  const Tensor<T>& vx = value(x);
  Node n;
  n.op = Op::kDropout;
  n.a = x;
  n.scalar = p;
  n.tracked = nodes_[x].tracked;
  n.val = Tensor<T>(vx.shape);
  const std::uint64_t stream = static_cast<std::uint64_t>(nodes_.size());
  kernels::dropout(vx.data.data(), n.val.data.data(), vx.numel(), p, seed_,
                   stream);
  return push(std::move(n), "dropout");
}

template <typename T>
typename Graph<T>::Id Graph<T>::softmax(Id x, int axis) {
  check_operand(x, "softmax");
  const Tensor<T>& vx = value(x);
  const int rank = static_cast<int>(vx.rank());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw ShapeError("softmax: axis out of range for shape " +
                     shape_str(vx.shape));
  }
  Node n;
  n.op = Op::kSoftmax;
  n.a = x;
  n.axis = axis;
  n.tracked = nodes_[x].tracked;
  n.val = Tensor<T>(vx.shape);
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= vx.shape[i];
  for (int i = axis + 1; i < rank; ++i) inner *= vx.shape[i];
  kernels::softmax(vx.data.data(), n.val.data.data(), outer, vx.shape[axis],
                   inner);
  return push(std::move(n), "softmax");
}

template <typename T>
typename Graph<T>::Id Graph<T>::concat_cols(std::span<const Id> xs) {
  if (xs.empty()) throw ShapeError("concat: no operands");
  const Tensor<T>& first = value(xs[0]);
  std::size_t total_last = 0;
  bool tracked = false;
  for (Id id : xs) {
    check_operand(id, "concat");
    const Tensor<T>& v = value(id);
    if (v.rank() != first.rank()) {
      throw ShapeError("concat: rank mismatch");
    }
    for (std::size_t d = 0; d + 1 < v.rank(); ++d) {
      if (v.shape[d] != first.shape[d]) {
        throw ShapeError("concat: shape mismatch " + shape_str(first.shape) +
                         " vs " + shape_str(v.shape));
      }
    }
    total_last += last_extent(v);
    tracked = tracked || nodes_[id].tracked;
  }
  std::vector<std::size_t> out_shape = first.shape;
  out_shape.back() = total_last;

  Node n;
  n.op = Op::kConcatCols;
  n.tracked = tracked;
  n.val = Tensor<T>(out_shape);
  n.nary_begin = static_cast<std::uint32_t>(nary_pool_.size());
  n.nary_count = static_cast<std::uint32_t>(xs.size());
  nary_pool_.insert(nary_pool_.end(), xs.begin(), xs.end());

  const std::size_t outer = n.val.numel() / total_last;
  std::size_t col = 0;
  for (Id id : xs) {
    const Tensor<T>& v = value(id);
    const std::size_t w = last_extent(v);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < w; ++j) {
        n.val.data[o * total_last + col + j] = v.data[o * w + j];
      }
    }
    col += w;
  }
  return push(std::move(n), "concat");
}

template <typename T>
typename Graph<T>::Id Graph<T>::concat_rows(std::span<const Id> xs) {
  if (xs.empty()) throw ShapeError("concat_rows: no operands");
  const Tensor<T>& first = value(xs[0]);
  std::size_t total_first = 0;
  bool tracked = false;
  for (Id id : xs) {
    check_operand(id, "concat_rows");
    const Tensor<T>& v = value(id);
    if (v.rank() != first.rank()) {
      throw ShapeError("concat_rows: rank mismatch");
    }
    for (std::size_t d = 1; d < v.rank(); ++d) {
      if (v.shape[d] != first.shape[d]) {
        throw ShapeError("concat_rows: shape mismatch " +
                         shape_str(first.shape) + " vs " + shape_str(v.shape));
      }
    }
    total_first += v.shape[0];
    tracked = tracked || nodes_[id].tracked;
  }
  std::vector<std::size_t> out_shape = first.shape;
  out_shape[0] = total_first;

  Node n;
  n.op = Op::kConcatRows;
  n.tracked = tracked;
  n.val = Tensor<T>(out_shape);
  n.nary_begin = static_cast<std::uint32_t>(nary_pool_.size());
  n.nary_count = static_cast<std::uint32_t>(xs.size());
  nary_pool_.insert(nary_pool_.end(), xs.begin(), xs.end());

  std::size_t pos = 0;
  for (Id id : xs) {
    const Tensor<T>& v = value(id);
    for (std::size_t i = 0; i < v.numel(); ++i) {
      n.val.data[pos + i] = v.data[i];
    }
    pos += v.numel();
  }
  return push(std::move(n), "concat_rows");
}

template <typename T>
typename Graph<T>::Id Graph<T>::index_element(Id x, std::size_t flat) {
  check_operand(x, "index");
  const Tensor<T>& vx = value(x);
  if (flat >= vx.numel()) {
    throw ShapeError("index: position " + std::to_string(flat) +
                     " out of range for shape " + shape_str(vx.shape));
  }
  Node n;
  n.op = Op::kIndex;
  n.a = x;
  n.offset = flat;
  n.tracked = nodes_[x].tracked;
  n.val = Tensor<T>::scalar(vx.data[flat]);
  return push(std::move(n), "index");
}

template <typename T>
typename Graph<T>::Id Graph<T>::sum_all(Id x) {
  check_operand(x, "sum");
  const Tensor<T>& vx = value(x);
  Node n;
  n.op = Op::kSumAll;
  n.a = x;
  n.tracked = nodes_[x].tracked;
  n.val = Tensor<T>::scalar(kernels::reduce_sum(vx.data.data(), vx.numel()));
  return push(std::move(n), "sum");
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Id id) const {
  const Node& n = nodes_[id];
  if (!n.tracked) {
    throw Error("grad: node is not tracked");
  }
  return n.grd;
}

template <typename T>
void Graph<T>::backward(Id loss) {
  check_operand(loss, "backward");
  if (backward_done_) {
    throw Error("backward: already run on this graph");
  }
  const Tensor<T>& lv = value(loss);
  if (lv.numel() != 1) {
    throw ShapeError("backward: loss must be a single element, got shape " +
                     shape_str(lv.shape));
  }
  backward_done_ = true;
  if (!nodes_[loss].tracked) {
    return;  // loss does not depend on any leaf; all gradients stay zero
  }
  nodes_[loss].grd.data[0] = T(1);
  for (Id id = loss + 1; id-- > 0;) {
    backprop_node(id);
  }
}

namespace {

// Accumulates the gradient of a broadcast binary op into the scalar side.
template <typename T, typename F>
void reduce_into_scalar(Tensor<T>& gs, const Tensor<T>& gout, F&& term) {
  T sum = T(0);
  for (std::size_t i = 0; i < gout.numel(); ++i) sum += term(i);
  gs.data[0] += sum;
}

}  // namespace

template <typename T>
void Graph<T>::backprop_node(Id id) {
  Node& n = nodes_[id];
  if (!n.tracked || n.op == Op::kConst || n.op == Op::kLeaf) return;
  const Tensor<T>& gout = n.grd;
  Tensor<T>* ga = nullptr;
  Tensor<T>* gb = nullptr;
  switch (n.op) {
    case Op::kMatMul: {
      const Tensor<T>& va = value(n.a);
      const Tensor<T>& vb = value(n.b);
      const std::size_t r = va.rows(), k = va.cols(), c = vb.cols();
      if ((ga = grad_buf(n.a))) {
        kernels::matmul_nt(gout.data.data(), vb.data.data(), ga->data.data(),
                           r, c, k, true);
      }
      if ((gb = grad_buf(n.b))) {
        kernels::matmul_tn(va.data.data(), gout.data.data(), gb->data.data(),
                           k, r, c, true);
      }
      break;
    }
    case Op::kAdd:
    case Op::kSub: {
      const T sign = n.op == Op::kSub ? T(-1) : T(1);
      const Tensor<T>& va = value(n.a);
      const Tensor<T>& vb = value(n.b);
      if ((ga = grad_buf(n.a))) {
        if (va.numel() == gout.numel()) {
          kernels::axpy(T(1), gout.data.data(), ga->data.data(), gout.numel());
        } else {
          reduce_into_scalar(*ga, gout, [&](std::size_t i) { return gout[i]; });
        }
      }
      if ((gb = grad_buf(n.b))) {
        if (vb.numel() == gout.numel()) {
          kernels::axpy(sign, gout.data.data(), gb->data.data(), gout.numel());
        } else {
          reduce_into_scalar(*gb, gout,
                             [&](std::size_t i) { return sign * gout[i]; });
        }
      }
      break;
    }
    case Op::kMul: {
      const Tensor<T>& va = value(n.a);
      const Tensor<T>& vb = value(n.b);
      if ((ga = grad_buf(n.a))) {
        if (va.numel() == gout.numel()) {
          if (vb.numel() == 1) {
            kernels::axpy(vb.data[0], gout.data.data(), ga->data.data(),
                          gout.numel());
          } else {
            for (std::size_t i = 0; i < gout.numel(); ++i) {
              ga->data[i] += gout[i] * vb.data[i];
            }
          }
        } else {
          reduce_into_scalar(*ga, gout,
                             [&](std::size_t i) { return gout[i] * vb.data[i]; });
        }
      }
      if ((gb = grad_buf(n.b))) {
        if (vb.numel() == gout.numel()) {
          if (va.numel() == 1) {
            kernels::axpy(va.data[0], gout.data.data(), gb->data.data(),
                          gout.numel());
          } else {
            for (std::size_t i = 0; i < gout.numel(); ++i) {
              gb->data[i] += gout[i] * va.data[i];
            }
          }
        } else {
          reduce_into_scalar(*gb, gout,
                             [&](std::size_t i) { return gout[i] * va.data[i]; });
        }
      }
      break;
    }
    case Op::kMax: {
      // Ties route to the first operand.
      const Tensor<T>& va = value(n.a);
      const Tensor<T>& vb = value(n.b);
      ga = grad_buf(n.a);
      gb = grad_buf(n.b);
      for (std::size_t i = 0; i < gout.numel(); ++i) {
        const T av = va.numel() == 1 ? va.data[0] : va.data[i];
        const T bv = vb.numel() == 1 ? vb.data[0] : vb.data[i];
        if (av >= bv) {
          if (ga) ga->data[va.numel() == 1 ? 0 : i] += gout[i];
        } else {
          if (gb) gb->data[vb.numel() == 1 ? 0 : i] += gout[i];
        }
      }
      break;
    }
    case Op::kTanh: {
      if ((ga = grad_buf(n.a))) {
        for (std::size_t i = 0; i < gout.numel(); ++i) {
          ga->data[i] += gout[i] * (T(1) - n.val[i] * n.val[i]);
        }
      }
      break;
    }
    case Op::kSigmoid: {
      if ((ga = grad_buf(n.a))) {
        for (std::size_t i = 0; i < gout.numel(); ++i) {
          ga->data[i] += gout[i] * n.val[i] * (T(1) - n.val[i]);
        }
      }
      break;
    }
    case Op::kSqrt: {
      if ((ga = grad_buf(n.a))) {
        for (std::size_t i = 0; i < gout.numel(); ++i) {
          ga->data[i] += gout[i] * T(0.5) / n.val[i];
        }
      }
      break;
    }
    case Op::kScale: {
      if ((ga = grad_buf(n.a))) {
        kernels::axpy(static_cast<T>(n.scalar), gout.data.data(),
                      ga->data.data(), gout.numel());
      }
      break;
    }
    case Op::kDropout: {
      if ((ga = grad_buf(n.a))) {
        const T inv_keep = T(1.0 / (1.0 - n.scalar));
        for (std::size_t i = 0; i < gout.numel(); ++i) {
          const bool keep =
              CounterRng::uniform01_at(seed_, id, i) >= n.scalar;
          if (keep) ga->data[i] += gout[i] * inv_keep;
        }
      }
      break;
    }
    case Op::kSoftmax: {
      if ((ga = grad_buf(n.a))) {
        const Tensor<T>& y = n.val;
        std::size_t outer = 1, inner = 1;
        const std::size_t len = y.shape[n.axis];
        for (int i = 0; i < n.axis; ++i) outer *= y.shape[i];
        for (std::size_t i = n.axis + 1; i < y.rank(); ++i) inner *= y.shape[i];
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            T dot = T(0);
            for (std::size_t i = 0; i < len; ++i) {
              dot += gout[base + i * inner] * y[base + i * inner];
            }
            for (std::size_t i = 0; i < len; ++i) {
              ga->data[base + i * inner] +=
                  y[base + i * inner] * (gout[base + i * inner] - dot);
            }
          }
        }
      }
      break;
    }
    case Op::kConcatCols: {
      const std::size_t total_last = last_extent(n.val);
      const std::size_t outer = n.val.numel() / total_last;
      std::size_t col = 0;
      for (std::uint32_t s = 0; s < n.nary_count; ++s) {
        const Id src = nary_pool_[n.nary_begin + s];
        const std::size_t w = last_extent(value(src));
        if (Tensor<T>* g = grad_buf(src)) {
          for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t j = 0; j < w; ++j) {
              g->data[o * w + j] += gout[o * total_last + col + j];
            }
          }
        }
        col += w;
      }
      break;
    }
    case Op::kConcatRows: {
      std::size_t pos = 0;
      for (std::uint32_t s = 0; s < n.nary_count; ++s) {
        const Id src = nary_pool_[n.nary_begin + s];
        const std::size_t sz = value(src).numel();
        if (Tensor<T>* g = grad_buf(src)) {
          for (std::size_t i = 0; i < sz; ++i) {
            g->data[i] += gout[pos + i];
          }
        }
        pos += sz;
      }
      break;
    }
    case Op::kIndex: {
      if ((ga = grad_buf(n.a))) {
        ga->data[n.offset] += gout[0];
      }
      break;
    }
    case Op::kSumAll: {
      if ((ga = grad_buf(n.a))) {
        const T g = gout[0];
        for (std::size_t i = 0; i < ga->numel(); ++i) ga->data[i] += g;
      }
      break;
    }
    case Op::kConst:
    case Op::kLeaf:
      break;
  }
  if (ga) require_finite(*ga, op_name(n.op));
  if (gb) require_finite(*gb, op_name(n.op));
}

template class Graph<float>;
template class Graph<double>;

}  // namespace baptp::numcore
