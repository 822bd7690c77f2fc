#include "charnmt/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "charnmt/errors.hpp"

namespace charnmt {

const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kLeaf: return "leaf";
    case Op::kMatmul: return "matmul";
    case Op::kMatmulNT: return "matmul_nt";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddRows: return "add_rows";
    case Op::kScaleRows: return "scale_rows";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kLogSoftmaxRows: return "log_softmax_rows";
    case Op::kReduceSum: return "reduce_sum";
    case Op::kConcatCols: return "concat_cols";
    case Op::kGatherCols: return "gather_cols";
    case Op::kPickCols: return "pick_cols";
    case Op::kSelectCol: return "select_col";
    case Op::kStackCols: return "stack_cols";
    case Op::kStackRows: return "stack_rows";
    case Op::kTimeSelect: return "time_select";
    case Op::kReshape: return "reshape";
  }
  return "?";
}

Var Graph::push(Node n) {
  for (int in_id : n.inputs) {
    if (in_id < 0 || in_id >= size()) throw contract_error("graph: input id out of range");
    n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(in_id)].needs_grad;
  }
  nodes_.push_back(std::move(n));
  return Var{size() - 1};
}

Var Graph::constant(Tensor value) { return push({Op::kConstant, {}, std::move(value)}); }

Var Graph::leaf(Tensor value) {
  Node n{Op::kLeaf, {}, std::move(value)};
  n.needs_grad = true;
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  return push({Op::kMatmul, {a.id, b.id}, kernels::matmul(value(a), value(b))});
}

Var Graph::matmul_nt(Var a, Var w) {
  return push({Op::kMatmulNT, {a.id, w.id}, kernels::matmul_nt(value(a), value(w))});
}

Var Graph::add(Var a, Var b) { return push({Op::kAdd, {a.id, b.id}, kernels::add(value(a), value(b))}); }
Var Graph::sub(Var a, Var b) { return push({Op::kSub, {a.id, b.id}, kernels::sub(value(a), value(b))}); }
Var Graph::mul(Var a, Var b) { return push({Op::kMul, {a.id, b.id}, kernels::mul(value(a), value(b))}); }

Var Graph::scale(Var a, double c) {
  Node n{Op::kScale, {a.id}, kernels::scale(value(a), c)};
  n.aux_scalar = c;
  return push(std::move(n));
}

Var Graph::add_rows(Var a, Var bias) {
  return push({Op::kAddRows, {a.id, bias.id}, kernels::add_rows(value(a), value(bias))});
}

Var Graph::scale_rows(Var a, Var v) {
  return push({Op::kScaleRows, {a.id, v.id}, kernels::scale_rows(value(a), value(v))});
}

Var Graph::tanh(Var a) { return push({Op::kTanh, {a.id}, kernels::vtanh(value(a))}); }
Var Graph::sigmoid(Var a) { return push({Op::kSigmoid, {a.id}, kernels::vsigmoid(value(a))}); }

Var Graph::softmax_rows(Var a) {
  return push({Op::kSoftmaxRows, {a.id}, kernels::softmax_rows(value(a))});
}

Var Graph::softmax_rows(Var a, Var mask) {
  if (requires_grad(mask)) {
    throw contract_error("softmax_rows: mask must be a constant");
  }
  return push({Op::kSoftmaxRows, {a.id, mask.id}, kernels::softmax_rows(value(a), &value(mask))});
}

Var Graph::log_softmax_rows(Var a) {
  return push({Op::kLogSoftmaxRows, {a.id}, kernels::log_softmax_rows(value(a))});
}

Var Graph::reduce_sum(Var a) { return push({Op::kReduceSum, {a.id}, kernels::reduce_sum(value(a))}); }

Var Graph::concat_cols(Var a, Var b) {
  return push({Op::kConcatCols, {a.id, b.id}, kernels::concat_cols(value(a), value(b))});
}

Var Graph::gather_cols(Var table, std::vector<int> ids) {
  Node n{Op::kGatherCols, {table.id}, kernels::gather_cols(value(table), ids)};
  n.aux_ids = std::move(ids);
  return push(std::move(n));
}

Var Graph::pick_cols(Var a, std::vector<int> ids) {
  Node n{Op::kPickCols, {a.id}, kernels::pick_cols(value(a), ids)};
  n.aux_ids = std::move(ids);
  return push(std::move(n));
}

Var Graph::select_col(Var a, std::int64_t col) {
  Node n{Op::kSelectCol, {a.id}, kernels::select_col(value(a), col)};
  n.aux_ids = {static_cast<int>(col)};
  return push(std::move(n));
}

Var Graph::stack_cols(std::span<const Var> columns) {
  if (columns.empty()) throw contract_error("stack_cols: no columns");
  const Tensor& first = value(columns[0]);
  if (first.rank() != 1) throw dim_error("stack_cols: columns must be rank-1");
  const std::int64_t n = first.shape[0];
  const std::int64_t t = static_cast<std::int64_t>(columns.size());
  Tensor out({n, t});
  Node node{Op::kStackCols, {}, {}};
  for (std::int64_t j = 0; j < t; ++j) {
    const Tensor& col = value(columns[static_cast<std::size_t>(j)]);
    if (col.rank() != 1 || col.shape[0] != n) {
      throw dim_error("stack_cols: column " + std::to_string(j) + " has shape " +
                      shape_str(col.shape) + ", want (" + std::to_string(n) + ")");
    }
    for (std::int64_t i = 0; i < n; ++i) out.at(i, j) = col.at(i);
    node.inputs.push_back(columns[static_cast<std::size_t>(j)].id);
  }
  node.value = std::move(out);
  return push(std::move(node));
}

Var Graph::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw contract_error("stack_rows: no rows");
  const Tensor& first = value(rows[0]);
  if (first.rank() != 1) throw dim_error("stack_rows: rows must be rank-1");
  const std::int64_t m = first.shape[0];
  const std::int64_t t = static_cast<std::int64_t>(rows.size());
  Tensor out({t, m});
  Node node{Op::kStackRows, {}, {}};
  for (std::int64_t i = 0; i < t; ++i) {
    const Tensor& row = value(rows[static_cast<std::size_t>(i)]);
    if (row.rank() != 1 || row.shape[0] != m) {
      throw dim_error("stack_rows: row " + std::to_string(i) + " has shape " +
                      shape_str(row.shape) + ", want (" + std::to_string(m) + ")");
    }
    for (std::int64_t j = 0; j < m; ++j) out.at(i, j) = row.at(j);
    node.inputs.push_back(rows[static_cast<std::size_t>(i)].id);
  }
  node.value = std::move(out);
  return push(std::move(node));
}

Var Graph::time_select(std::span<const Var> states, std::vector<int> idx) {
  if (states.empty()) throw contract_error("time_select: no states");
  const Tensor& first = value(states[0]);
  if (first.rank() != 2) throw dim_error("time_select: states must be rank-2");
  const std::int64_t n = first.shape[0], m = first.shape[1];
  if (static_cast<std::int64_t>(idx.size()) != n) {
    throw dim_error("time_select: need one index per row");
  }
  Node node{Op::kTimeSelect, {}, {}};
  for (const Var& s : states) {
    if (!value(s).same_shape(first)) throw dim_error("time_select: states differ in shape");
    node.inputs.push_back(s.id);
  }
  Tensor out({n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    const int t = idx[static_cast<std::size_t>(i)];
    if (t < 0 || t >= static_cast<int>(states.size())) {
      throw contract_error("time_select: index " + std::to_string(t) + " out of range");
    }
    const Tensor& src = value(states[static_cast<std::size_t>(t)]);
    for (std::int64_t j = 0; j < m; ++j) out.at(i, j) = src.at(i, j);
  }
  node.value = std::move(out);
  node.aux_ids = std::move(idx);
  return push(std::move(node));
}

Var Graph::reshape(Var a, Shape shape) {
  const Tensor& av = value(a);
  Tensor out(std::move(shape), av.data);
  return push({Op::kReshape, {a.id}, std::move(out)});
}

const Tensor& Graph::value(Var v) const {
  if (!v.valid() || v.id >= size()) throw contract_error("graph: invalid var");
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

bool Graph::requires_grad(Var v) const {
  if (!v.valid() || v.id >= size()) throw contract_error("graph: invalid var");
  return nodes_[static_cast<std::size_t>(v.id)].needs_grad;
}

bool Gradients::has(Var v) const {
  return v.valid() && static_cast<std::size_t>(v.id) < present_.size() &&
         present_[static_cast<std::size_t>(v.id)];
}

const Tensor& Gradients::at(Var v) const {
  if (!has(v)) throw contract_error("gradients: no gradient recorded for node");
  return grads_[static_cast<std::size_t>(v.id)];
}

namespace {

class BackwardPass {
 public:
  BackwardPass(const Graph& g, Var root) : g_(g) {
    if (!root.valid() || root.id >= g.size()) throw contract_error("backward: invalid root");
    const Tensor& rv = g.value(root);
    if (rv.numel() != 1) {
      throw contract_error("backward: root must be scalar valued, got shape " +
                           shape_str(rv.shape));
    }
    grads_.resize(static_cast<std::size_t>(g.size()));
    present_.assign(static_cast<std::size_t>(g.size()), false);
    seed(root.id, Tensor(rv.shape, {1.0}));
    for (int id = root.id; id >= 0; --id) {
      if (!present_[static_cast<std::size_t>(id)]) continue;
      propagate(id);
    }
  }

  std::vector<Tensor> take_grads() { return std::move(grads_); }
  std::vector<bool> take_present() { return std::move(present_); }

 private:
  Tensor& grad_of(int id) {
    auto& slot = grads_[static_cast<std::size_t>(id)];
    if (!present_[static_cast<std::size_t>(id)]) {
      slot = Tensor::zeros(g_.node(id).value.shape);
      present_[static_cast<std::size_t>(id)] = true;
    }
    return slot;
  }

  void seed(int id, Tensor t) {
    grads_[static_cast<std::size_t>(id)] = std::move(t);
    present_[static_cast<std::size_t>(id)] = true;
  }

  bool wants(const Graph::Node& n, int i) const {
    return g_.node(n.inputs[static_cast<std::size_t>(i)]).needs_grad;
  }
  const Tensor& val(const Graph::Node& n, int i) const {
    return g_.node(n.inputs[static_cast<std::size_t>(i)]).value;
  }
  Tensor& acc(const Graph::Node& n, int i) { return grad_of(n.inputs[static_cast<std::size_t>(i)]); }

  void propagate(int id);

  const Graph& g_;
  std::vector<Tensor> grads_;
  std::vector<bool> present_;
};

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void BackwardPass::propagate(int id) {
  const Graph::Node& n = g_.node(id);
  if (!n.needs_grad) return;
  const Tensor& gout = grads_[static_cast<std::size_t>(id)];

  switch (n.op) {
    case Op::kConstant:
    case Op::kLeaf:
      break;

    case Op::kMatmul: {
      const Tensor& a = val(n, 0);
      const Tensor& b = val(n, 1);
      if (a.rank() == 2 && b.rank() == 2) {
        if (wants(n, 0)) add_into(acc(n, 0), kernels::matmul_nt(gout, b));
        if (wants(n, 1)) add_into(acc(n, 1), kernels::matmul_tn(a, gout));
      } else if (a.rank() == 1) {
        // (k) x (k,m) -> (m)
        if (wants(n, 0)) add_into(acc(n, 0), kernels::matmul(b, gout));
        if (wants(n, 1)) {
          Tensor& db = acc(n, 1);
          for (std::int64_t i = 0; i < b.shape[0]; ++i)
            for (std::int64_t j = 0; j < b.shape[1]; ++j) db.at(i, j) += a.at(i) * gout.at(j);
        }
      } else {
        // (n,k) x (k) -> (n)
        if (wants(n, 0)) {
          Tensor& da = acc(n, 0);
          for (std::int64_t i = 0; i < a.shape[0]; ++i)
            for (std::int64_t j = 0; j < a.shape[1]; ++j) da.at(i, j) += gout.at(i) * b.at(j);
        }
        if (wants(n, 1)) {
          Tensor& db = acc(n, 1);
          for (std::int64_t i = 0; i < a.shape[0]; ++i) {
            const double gi = gout.at(i);
            if (gi == 0.0) continue;
            for (std::int64_t j = 0; j < a.shape[1]; ++j) db.at(j) += gi * a.at(i, j);
          }
        }
      }
      break;
    }

    case Op::kMatmulNT: {
      const Tensor& a = val(n, 0);
      const Tensor& w = val(n, 1);
      if (a.rank() == 2) {
        if (wants(n, 0)) add_into(acc(n, 0), kernels::matmul(gout, w));
        if (wants(n, 1)) add_into(acc(n, 1), kernels::matmul_tn(gout, a));
      } else {
        // (k) x (m,k)^T -> (m)
        if (wants(n, 0)) add_into(acc(n, 0), kernels::matmul(gout, w));
        if (wants(n, 1)) {
          Tensor& dw = acc(n, 1);
          for (std::int64_t p = 0; p < w.shape[0]; ++p) {
            const double gp = gout.at(p);
            if (gp == 0.0) continue;
            for (std::int64_t j = 0; j < w.shape[1]; ++j) dw.at(p, j) += gp * a.at(j);
          }
        }
      }
      break;
    }

    case Op::kAdd:
      if (wants(n, 0)) add_into(acc(n, 0), gout);
      if (wants(n, 1)) add_into(acc(n, 1), gout);
      break;

    case Op::kSub:
      if (wants(n, 0)) add_into(acc(n, 0), gout);
      if (wants(n, 1)) {
        Tensor& db = acc(n, 1);
        for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] -= gout.data[i];
      }
      break;

    case Op::kMul:
      if (wants(n, 0)) add_into(acc(n, 0), kernels::mul(gout, val(n, 1)));
      if (wants(n, 1)) add_into(acc(n, 1), kernels::mul(gout, val(n, 0)));
      break;

    case Op::kScale:
      if (wants(n, 0)) add_into(acc(n, 0), kernels::scale(gout, n.aux_scalar));
      break;

    case Op::kAddRows: {
      if (wants(n, 0)) add_into(acc(n, 0), gout);
      if (wants(n, 1)) {
        Tensor& db = acc(n, 1);
        const std::int64_t rows = gout.rows(), cols = gout.cols();
        for (std::int64_t i = 0; i < rows; ++i)
          for (std::int64_t j = 0; j < cols; ++j)
            db.at(j) += gout.data[static_cast<std::size_t>(i * cols + j)];
      }
      break;
    }

    case Op::kScaleRows: {
      const Tensor& a = val(n, 0);
      const Tensor& v = val(n, 1);
      const std::int64_t rows = a.rows(), cols = a.cols();
      if (wants(n, 0)) {
        Tensor& da = acc(n, 0);
        for (std::int64_t i = 0; i < rows; ++i) {
          const double s = v.at(i);
          for (std::int64_t j = 0; j < cols; ++j)
            da.data[static_cast<std::size_t>(i * cols + j)] +=
                gout.data[static_cast<std::size_t>(i * cols + j)] * s;
        }
      }
      if (wants(n, 1)) {
        Tensor& dv = acc(n, 1);
        for (std::int64_t i = 0; i < rows; ++i) {
          double acc_i = 0.0;
          for (std::int64_t j = 0; j < cols; ++j)
            acc_i += gout.data[static_cast<std::size_t>(i * cols + j)] *
                     a.data[static_cast<std::size_t>(i * cols + j)];
          dv.at(i) += acc_i;
        }
      }
      break;
    }

    case Op::kTanh: {
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      for (std::size_t i = 0; i < da.data.size(); ++i) {
        const double y = n.value.data[i];
        da.data[i] += gout.data[i] * (1.0 - y * y);
      }
      break;
    }

    case Op::kSigmoid: {
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      for (std::size_t i = 0; i < da.data.size(); ++i) {
        const double y = n.value.data[i];
        da.data[i] += gout.data[i] * y * (1.0 - y);
      }
      break;
    }

    case Op::kSoftmaxRows: {
      // Masked entries have y = 0 exactly, so they contribute nothing and
      // receive exactly zero gradient.
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      const std::int64_t rows = n.value.rows(), cols = n.value.cols();
      for (std::int64_t i = 0; i < rows; ++i) {
        const double* y = n.value.data.data() + i * cols;
        const double* go = gout.data.data() + i * cols;
        double dot = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) dot += go[j] * y[j];
        double* d = da.data.data() + i * cols;
        for (std::int64_t j = 0; j < cols; ++j) d[j] += y[j] * (go[j] - dot);
      }
      break;
    }

    case Op::kLogSoftmaxRows: {
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      const std::int64_t rows = n.value.rows(), cols = n.value.cols();
      for (std::int64_t i = 0; i < rows; ++i) {
        const double* y = n.value.data.data() + i * cols;
        const double* go = gout.data.data() + i * cols;
        double gsum = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) gsum += go[j];
        double* d = da.data.data() + i * cols;
        for (std::int64_t j = 0; j < cols; ++j) d[j] += go[j] - std::exp(y[j]) * gsum;
      }
      break;
    }

    case Op::kReduceSum: {
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      const double go = gout.data[0];
      for (double& x : da.data) x += go;
      break;
    }

    case Op::kConcatCols: {
      const Tensor& a = val(n, 0);
      const Tensor& b = val(n, 1);
      const std::int64_t rows = a.rows(), p = a.cols(), q = b.cols();
      if (wants(n, 0)) {
        Tensor& da = acc(n, 0);
        for (std::int64_t i = 0; i < rows; ++i)
          for (std::int64_t j = 0; j < p; ++j)
            da.data[static_cast<std::size_t>(i * p + j)] +=
                gout.data[static_cast<std::size_t>(i * (p + q) + j)];
      }
      if (wants(n, 1)) {
        Tensor& db = acc(n, 1);
        for (std::int64_t i = 0; i < rows; ++i)
          for (std::int64_t j = 0; j < q; ++j)
            db.data[static_cast<std::size_t>(i * q + j)] +=
                gout.data[static_cast<std::size_t>(i * (p + q) + p + j)];
      }
      break;
    }

    case Op::kGatherCols: {
      if (!wants(n, 0)) break;
      Tensor& dt = acc(n, 0);
      const std::int64_t m = dt.shape[0];
      for (std::size_t i = 0; i < n.aux_ids.size(); ++i) {
        const int id_col = n.aux_ids[i];
        for (std::int64_t j = 0; j < m; ++j)
          dt.at(j, id_col) += gout.at(static_cast<std::int64_t>(i), j);
      }
      break;
    }

    case Op::kPickCols: {
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      for (std::size_t i = 0; i < n.aux_ids.size(); ++i)
        da.at(static_cast<std::int64_t>(i), n.aux_ids[i]) += gout.at(static_cast<std::int64_t>(i));
      break;
    }

    case Op::kSelectCol: {
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      const std::int64_t col = n.aux_ids[0];
      for (std::int64_t i = 0; i < gout.shape[0]; ++i) da.at(i, col) += gout.at(i);
      break;
    }

    case Op::kStackCols: {
      for (std::size_t t = 0; t < n.inputs.size(); ++t) {
        if (!wants(n, static_cast<int>(t))) continue;
        Tensor& d = acc(n, static_cast<int>(t));
        for (std::int64_t i = 0; i < d.shape[0]; ++i)
          d.at(i) += gout.at(i, static_cast<std::int64_t>(t));
      }
      break;
    }

    case Op::kStackRows: {
      for (std::size_t t = 0; t < n.inputs.size(); ++t) {
        if (!wants(n, static_cast<int>(t))) continue;
        Tensor& d = acc(n, static_cast<int>(t));
        for (std::int64_t j = 0; j < d.shape[0]; ++j)
          d.at(j) += gout.at(static_cast<std::int64_t>(t), j);
      }
      break;
    }

    case Op::kReshape: {
      if (!wants(n, 0)) break;
      Tensor& da = acc(n, 0);
      for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += gout.data[i];
      break;
    }

    case Op::kTimeSelect: {
      const std::int64_t cols = n.value.shape[1];
      for (std::size_t i = 0; i < n.aux_ids.size(); ++i) {
        const int t = n.aux_ids[i];
        if (!wants(n, t)) continue;
        Tensor& d = acc(n, t);
        for (std::int64_t j = 0; j < cols; ++j)
          d.at(static_cast<std::int64_t>(i), j) += gout.at(static_cast<std::int64_t>(i), j);
      }
      break;
    }
  }
}

}  // namespace

Gradients backward(const Graph& g, Var root) {
  BackwardPass pass(g, root);
  Gradients out;
  out.grads_ = pass.take_grads();
  out.present_ = pass.take_present();
  // Only grad-tracked nodes report gradients.
  for (int id = 0; id < g.size(); ++id) {
    if (!g.node(id).needs_grad) out.present_[static_cast<std::size_t>(id)] = false;
  }
  return out;
}

Tensor& ParamSet::add(const std::string& name, Tensor init, Kind kind) {
  if (items_.count(name)) throw contract_error("param set: duplicate name " + name);
  order_.push_back(name);
  auto [it, ok] = items_.emplace(name, std::make_pair(std::move(init), kind));
  (void)ok;
  return it->second.first;
}

bool ParamSet::has(const std::string& name) const { return items_.count(name) != 0; }

Tensor& ParamSet::at(const std::string& name) {
  auto it = items_.find(name);
  if (it == items_.end()) throw contract_error("param set: unknown name " + name);
  return it->second.first;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) throw contract_error("param set: unknown name " + name);
  return it->second.first;
}

ParamSet::Kind ParamSet::kind(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) throw contract_error("param set: unknown name " + name);
  return it->second.second;
}

std::int64_t ParamSet::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& name : order_) n += at(name).numel();
  return n;
}

Var BoundParams::at(const std::string& name) const {
  for (const auto& [n, v] : vars) {
    if (n == name) return v;
  }
  throw contract_error("bound params: unknown name " + name);
}

BoundParams bind_params(Graph& g, const ParamSet& params) {
  BoundParams out;
  out.vars.reserve(params.size());
  for (const auto& name : params.names()) out.vars.emplace_back(name, g.leaf(params.at(name)));
  return out;
}

std::vector<std::pair<std::string, Tensor>> param_grads(const Graph& g, const BoundParams& bound,
                                                        const Gradients& grads) {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(bound.vars.size());
  for (const auto& [name, var] : bound.vars) {
    if (grads.has(var)) {
      out.emplace_back(name, grads.at(var));
    } else {
      out.emplace_back(name, Tensor::zeros(g.value(var).shape));
    }
  }
  return out;
}

namespace {

double eval_loss(const LossFn& loss_fn, const ParamSet& params) {
  Graph g;
  BoundParams bound = bind_params(g, params);
  Var root = loss_fn(g, bound);
  const Tensor& v = g.value(root);
  if (v.numel() != 1) throw contract_error("grad_check: loss must be scalar valued");
  return v.data[0];
}

}  // namespace

double grad_check(const LossFn& loss_fn, ParamSet& params, double eps) {
  if (eps <= 0.0) throw contract_error("grad_check: eps must be positive");

  Graph g;
  BoundParams bound = bind_params(g, params);
  Var root = loss_fn(g, bound);
  Gradients grads = backward(g, root);
  auto named = param_grads(g, bound, grads);

  double max_rel = 0.0;
  for (std::size_t p = 0; p < named.size(); ++p) {
    const std::string& name = named[p].first;
    const Tensor& analytic = named[p].second;
    Tensor& theta = params.at(name);
    for (std::size_t i = 0; i < theta.data.size(); ++i) {
      const double orig = theta.data[i];
      theta.data[i] = orig + eps;
      const double fp = eval_loss(loss_fn, params);
      theta.data[i] = orig - eps;
      const double fm = eval_loss(loss_fn, params);
      theta.data[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw numeric_error("grad_check: non-finite loss while probing " + name);
      }
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic.data[i];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace charnmt
