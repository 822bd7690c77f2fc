#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "charnmt/tensor.hpp"

namespace charnmt {

// Reverse-mode automatic differentiation on a dynamic tape. A Graph is
// rebuilt per sequence/batch; nodes are appended in evaluation order, so
// the tape is topologically sorted by construction and backward() is a
// single reverse sweep.

enum class Op : std::uint8_t {
  kConstant,
  kLeaf,
  kMatmul,
  kMatmulNT,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRows,
  kScaleRows,
  kTanh,
  kSigmoid,
  kSoftmaxRows,
  kLogSoftmaxRows,
  kReduceSum,
  kConcatCols,
  kGatherCols,
  kPickCols,
  kSelectCol,
  kStackCols,
  kStackRows,
  kTimeSelect,
  kReshape,
};

const char* op_name(Op op);

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Inputs. Constants never receive gradients; leaves do.
  Var constant(Tensor value);
  Var leaf(Tensor value);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var w);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_rows(Var a, Var bias);
  Var scale_rows(Var a, Var v);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softmax_rows(Var a);
  // mask must be a constant 0/1 tensor of a's shape; masked entries get
  // weight exactly 0 and no gradient.
  Var softmax_rows(Var a, Var mask);
  Var log_softmax_rows(Var a);
  Var reduce_sum(Var a);
  Var concat_cols(Var a, Var b);
  Var gather_cols(Var table, std::vector<int> ids);
  Var pick_cols(Var a, std::vector<int> ids);
  Var select_col(Var a, std::int64_t col);
  // Stacks T rank-1 tensors of equal length into a matrix.
  Var stack_cols(std::span<const Var> columns);  // (n) each -> (n, T)
  Var stack_rows(std::span<const Var> rows);     // (m) each -> (T, m)
  // out[i, :] = states[idx[i]].value[i, :]. All states share shape (n, m).
  Var time_select(std::span<const Var> states, std::vector<int> idx);
  // Same data, new shape with the same element count.
  Var reshape(Var a, Shape shape);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  struct Node {
    Op op;
    std::vector<int> inputs;
    Tensor value;
    bool needs_grad = false;
    // Per-op extras: ids for gather/pick/time_select, the column for
    // select_col, the factor for scale.
    std::vector<int> aux_ids;
    double aux_scalar = 0.0;
  };
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

 private:
  friend class Gradients;
  Var push(Node n);
  const Tensor& in(const Node& n, int i) const {
    return nodes_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(i)])].value;
  }
  std::vector<Node> nodes_;
};

// Gradients of one scalar root with respect to every grad-tracked node.
class Gradients {
 public:
  bool has(Var v) const;
  const Tensor& at(Var v) const;

 private:
  friend Gradients backward(const Graph& g, Var root);
  std::vector<Tensor> grads_;
  std::vector<bool> present_;
};

// root must be scalar valued (one element). Contributions along fan-out
// accumulate by summation, visiting nodes in reverse tape order.
Gradients backward(const Graph& g, Var root);

// Named parameter tensors with deterministic iteration order.
class ParamSet {
 public:
  enum class Kind { kWeight, kBias };

  Tensor& add(const std::string& name, Tensor init, Kind kind = Kind::kWeight);
  bool has(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  Kind kind(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  std::int64_t scalar_count() const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, std::pair<Tensor, Kind>> items_;
};

// Leaf bindings of a ParamSet into one graph, in ParamSet order.
struct BoundParams {
  Var at(const std::string& name) const;
  std::vector<std::pair<std::string, Var>> vars;
};

BoundParams bind_params(Graph& g, const ParamSet& params);

// Gradient per parameter name. Parameters the root does not depend on get
// zero tensors.
std::vector<std::pair<std::string, Tensor>> param_grads(const Graph& g, const BoundParams& bound,
                                                        const Gradients& grads);

// Central finite differences against backward(). loss_fn must build the
// loss into the given graph using the given bindings and return the scalar
// root. Returns the max of |analytic-numeric| / max(|analytic|,|numeric|,1e-8)
// over every parameter element.
using LossFn = std::function<Var(Graph&, const BoundParams&)>;
double grad_check(const LossFn& loss_fn, ParamSet& params, double eps);

}  // namespace charnmt
