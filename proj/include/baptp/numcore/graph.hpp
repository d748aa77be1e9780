#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "baptp/numcore/tensor.hpp"

namespace baptp::numcore {

// Reverse-mode autodiff tape. Operations append nodes in evaluation order,
// so the node list is a topological order by construction; backward() walks
// it once in reverse. Every kernel result is checked for NaN/Inf and a
// NumericError is thrown at the offending op rather than letting the value
// propagate.
//
// Leaves may reference external parameter storage (non-owning); the caller
// keeps that storage alive for the lifetime of the graph. Gradients always
// live inside the graph.
template <typename T>
class Graph {
 public:
  using Id = std::uint32_t;

  // `seed` feeds the dropout masks; each dropout op derives its stream from
  // the seed and its own node id, so masks depend only on construction order.
  explicit Graph(std::uint64_t seed = 0) : seed_(seed) { nodes_.reserve(256); }

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Untracked input value.
  Id constant(Tensor<T> v);
  // Tracked leaf whose storage lives outside the graph (a model parameter).
  Id leaf(const Tensor<T>* external);

  Id matmul(Id a, Id b);

  // Binary elementwise; shapes must match exactly or one operand must be a
  // single element (scalar broadcast).
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id maximum(Id a, Id b);

  Id tanh_(Id x);
  Id sigmoid_(Id x);
  Id sqrt_(Id x);
  Id scale(Id x, double alpha);

  // Identity when `training` is false or p == 0; otherwise zeroes each
  // element with probability p and scales survivors by 1/(1-p).
  Id dropout(Id x, double p, bool training);

  Id softmax(Id x, int axis);

  Id concat_cols(std::span<const Id> xs);  // along the last axis
  Id concat_rows(std::span<const Id> xs);  // along the first axis

  // Single element as a [1,1] tensor; `flat` indexes row-major storage.
  Id index_element(Id x, std::size_t flat);
  Id sum_all(Id x);

  // Populates gradients for every tracked node reachable from `loss`
  // (a single-element tensor). Leaves not on a path to the loss keep a
  // zero gradient. One shot per graph.
  void backward(Id loss);

  const Tensor<T>& value(Id id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.val;
  }
  // Valid after backward(); zero tensor for untracked nodes.
  const Tensor<T>& grad(Id id) const;
  bool tracked(Id id) const { return nodes_[id].tracked; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kConst,
    kLeaf,
    kMatMul,
    kAdd,
    kSub,
    kMul,
    kMax,
    kTanh,
    kSigmoid,
    kSqrt,
    kScale,
    kDropout,
    kSoftmax,
    kConcatCols,
    kConcatRows,
    kIndex,
    kSumAll,
  };

  struct Node {
    Op op = Op::kConst;
    Id a = 0, b = 0;
    Tensor<T> val;                       // owned result (unset for leaves)
    const Tensor<T>* external = nullptr; // leaf storage
    Tensor<T> grd;                       // allocated iff tracked
    bool tracked = false;
    double scalar = 0.0;                 // scale alpha / dropout p
    int axis = -1;                       // softmax axis
    std::size_t offset = 0;              // index_element position
    std::uint32_t nary_begin = 0, nary_count = 0;
  };

  Id push(Node n, const char* opname);
  Node& at(Id id) { return nodes_[id]; }
  const Tensor<T>& in_val(const Node& n, int which) const {
    return value(which == 0 ? n.a : n.b);
  }
  Tensor<T>* grad_buf(Id id) {
    Node& n = nodes_[id];
    return n.tracked ? &n.grd : nullptr;
  }
  void check_operand(Id id, const char* opname) const;
  static const char* op_name(Op op);
  void backprop_node(Id id);

  std::vector<Node> nodes_;
  std::vector<Id> nary_pool_;
  std::uint64_t seed_ = 0;
  bool backward_done_ = false;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace baptp::numcore
