#include "charnmt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "charnmt/errors.hpp"

namespace charnmt {

namespace {

std::int64_t checked_numel(const Shape& s) {
  if (s.empty() || s.size() > 3) {
    throw dim_error("tensor rank must be 1..3, got " + shape_str(s));
  }
  std::int64_t n = 1;
  for (std::int64_t d : s) {
    if (d <= 0) throw dim_error("tensor dimensions must be positive: " + shape_str(s));
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(Shape s) : shape(std::move(s)) {
  data.assign(static_cast<std::size_t>(checked_numel(shape)), 0.0);
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (checked_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw dim_error("data length " + std::to_string(data.size()) +
                    " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::full(Shape s, double value) {
  Tensor t(std::move(s));
  for (double& x : t.data) x = value;
  return t;
}

std::int64_t Tensor::rows() const { return rank() == 1 ? 1 : shape[0]; }
std::int64_t Tensor::cols() const { return rank() == 1 ? shape[0] : shape[1]; }

bool all_finite(const Tensor& t) {
  for (double x : t.data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ')';
  return os.str();
}

namespace kernels {

namespace {

void require_rank12(const Tensor& t, const char* op) {
  if (t.rank() > 2) throw dim_error(std::string(op) + ": rank-3 operand not supported " + shape_str(t.shape));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw dim_error(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                    shape_str(b.shape));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank12(a, "matmul");
  require_rank12(b, "matmul");
  if (a.rank() == 1 && b.rank() == 1) {
    throw dim_error("matmul: need at least one rank-2 operand");
  }
  const std::int64_t n = a.rows(), k = a.cols();
  if (b.rank() == 1) {
    // (n,k) x (k) -> (n)
    if (b.shape[0] != k) {
      throw dim_error("matmul: inner dimensions differ " + shape_str(a.shape) + " x " +
                      shape_str(b.shape));
    }
    Tensor out({n});
    for (std::int64_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* row = a.data.data() + i * k;
      for (std::int64_t j = 0; j < k; ++j) acc += row[j] * b.data[static_cast<std::size_t>(j)];
      out.at(i) = acc;
    }
    return out;
  }
  const std::int64_t m = b.shape[1];
  if (b.shape[0] != k) {
    throw dim_error("matmul: inner dimensions differ " + shape_str(a.shape) + " x " +
                    shape_str(b.shape));
  }
  Tensor out(a.rank() == 1 ? Shape{m} : Shape{n, m});
  // i-k-j order keeps both inner streams contiguous.
  for (std::int64_t i = 0; i < n; ++i) {
    double* orow = out.data.data() + i * m;
    const double* arow = a.data.data() + i * k;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b.data.data() + kk * m;
      for (std::int64_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& w) {
  require_rank12(a, "matmul_nt");
  if (w.rank() != 2) throw dim_error("matmul_nt: weight must be rank-2, got " + shape_str(w.shape));
  const std::int64_t n = a.rows(), k = a.cols(), m = w.shape[0];
  if (w.shape[1] != k) {
    throw dim_error("matmul_nt: inner dimensions differ " + shape_str(a.shape) + " x " +
                    shape_str(w.shape) + "^T");
  }
  Tensor out(a.rank() == 1 ? Shape{m} : Shape{n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    const double* arow = a.data.data() + i * k;
    double* orow = out.data.data() + i * m;
    for (std::int64_t j = 0; j < m; ++j) {
      const double* wrow = w.data.data() + j * k;
      double acc = 0.0;
      for (std::int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * wrow[kk];
      orow[j] = acc;
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[0] != b.shape[0]) {
    throw dim_error("matmul_tn: need (n,k) and (n,m) operands, got " + shape_str(a.shape) +
                    " and " + shape_str(b.shape));
  }
  const std::int64_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
  Tensor out({k, m});
  for (std::int64_t i = 0; i < n; ++i) {
    const double* arow = a.data.data() + i * k;
    const double* brow = b.data.data() + i * m;
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out.data.data() + p * m;
      for (std::int64_t q = 0; q < m; ++q) orow[q] += av * brow[q];
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] * c;
  return out;
}

Tensor add_rows(const Tensor& a, const Tensor& b) {
  require_rank12(a, "add_rows");
  if (b.rank() != 1 || b.shape[0] != a.cols()) {
    throw dim_error("add_rows: bias " + shape_str(b.shape) + " does not fit rows of " +
                    shape_str(a.shape));
  }
  Tensor out(a.shape);
  const std::int64_t n = a.rows(), m = a.cols();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < m; ++j) {
      out.data[static_cast<std::size_t>(i * m + j)] =
          a.data[static_cast<std::size_t>(i * m + j)] + b.data[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

Tensor scale_rows(const Tensor& a, const Tensor& v) {
  require_rank12(a, "scale_rows");
  if (v.rank() != 1 || v.shape[0] != a.rows()) {
    throw dim_error("scale_rows: scale vector " + shape_str(v.shape) + " does not fit " +
                    shape_str(a.shape));
  }
  Tensor out(a.shape);
  const std::int64_t n = a.rows(), m = a.cols();
  for (std::int64_t i = 0; i < n; ++i) {
    const double s = v.data[static_cast<std::size_t>(i)];
    for (std::int64_t j = 0; j < m; ++j) {
      out.data[static_cast<std::size_t>(i * m + j)] = a.data[static_cast<std::size_t>(i * m + j)] * s;
    }
  }
  return out;
}

Tensor vtanh(const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::tanh(a.data[i]);
  return out;
}

Tensor vsigmoid(const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double x = a.data[i];
    if (x >= 0.0) {
      out.data[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out.data[i] = e / (1.0 + e);
    }
  }
  return out;
}

Tensor softmax_rows(const Tensor& a, const Tensor* mask) {
  require_rank12(a, "softmax_rows");
  if (mask) require_same_shape(a, *mask, "softmax_rows mask");
  Tensor out(a.shape);
  const std::int64_t n = a.rows(), m = a.cols();
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = a.data.data() + i * m;
    const double* mrow = mask ? mask->data.data() + i * m : nullptr;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < m; ++j) {
      if (mrow && mrow[j] == 0.0) continue;
      mx = std::max(mx, row[j]);
    }
    if (!std::isfinite(mx)) {
      throw contract_error("softmax_rows: all positions masked in row " + std::to_string(i));
    }
    double* orow = out.data.data() + i * m;
    double denom = 0.0;
    for (std::int64_t j = 0; j < m; ++j) {
      if (mrow && mrow[j] == 0.0) {
        orow[j] = 0.0;
      } else {
        orow[j] = std::exp(row[j] - mx);
        denom += orow[j];
      }
    }
    for (std::int64_t j = 0; j < m; ++j) {
      if (!(mrow && mrow[j] == 0.0)) orow[j] /= denom;
    }
  }
  return out;
}

Tensor log_softmax_rows(const Tensor& a) {
  require_rank12(a, "log_softmax_rows");
  Tensor out(a.shape);
  const std::int64_t n = a.rows(), m = a.cols();
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = a.data.data() + i * m;
    double* orow = out.data.data() + i * m;
    double mx = row[0];
    for (std::int64_t j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::int64_t j = 0; j < m; ++j) denom += std::exp(row[j] - mx);
    const double log_denom = std::log(denom);
    for (std::int64_t j = 0; j < m; ++j) orow[j] = row[j] - mx - log_denom;
  }
  return out;
}

Tensor reduce_sum(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data) acc += x;
  return Tensor::scalar(acc);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank12(a, "concat_cols");
  require_rank12(b, "concat_cols");
  if (a.rank() != b.rank() || a.rows() != b.rows()) {
    throw dim_error("concat_cols: row counts differ " + shape_str(a.shape) + " vs " +
                    shape_str(b.shape));
  }
  const std::int64_t n = a.rows(), p = a.cols(), q = b.cols();
  Tensor out(a.rank() == 1 ? Shape{p + q} : Shape{n, p + q});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < p; ++j) out.data[static_cast<std::size_t>(i * (p + q) + j)] = a.data[static_cast<std::size_t>(i * p + j)];
    for (std::int64_t j = 0; j < q; ++j) out.data[static_cast<std::size_t>(i * (p + q) + p + j)] = b.data[static_cast<std::size_t>(i * q + j)];
  }
  return out;
}

Tensor gather_cols(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2) throw dim_error("gather_cols: table must be rank-2");
  const std::int64_t m = table.shape[0], vocab = table.shape[1];
  const std::int64_t n = static_cast<std::int64_t>(ids.size());
  if (n == 0) throw contract_error("gather_cols: empty id list");
  Tensor out({n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    const int id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= vocab) {
      throw vocab_error("gather_cols: id " + std::to_string(id) + " outside vocabulary of size " +
                        std::to_string(vocab));
    }
    for (std::int64_t j = 0; j < m; ++j) out.at(i, j) = table.at(j, id);
  }
  return out;
}

Tensor pick_cols(const Tensor& a, const std::vector<int>& ids) {
  if (a.rank() != 2) throw dim_error("pick_cols: operand must be rank-2");
  const std::int64_t n = a.shape[0], m = a.shape[1];
  if (static_cast<std::int64_t>(ids.size()) != n) {
    throw dim_error("pick_cols: need one id per row");
  }
  Tensor out({n});
  for (std::int64_t i = 0; i < n; ++i) {
    const int id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= m) {
      throw vocab_error("pick_cols: column " + std::to_string(id) + " outside row of width " +
                        std::to_string(m));
    }
    out.at(i) = a.at(i, id);
  }
  return out;
}

Tensor select_col(const Tensor& a, std::int64_t col) {
  if (a.rank() != 2) throw dim_error("select_col: operand must be rank-2");
  if (col < 0 || col >= a.shape[1]) {
    throw dim_error("select_col: column " + std::to_string(col) + " out of range for " +
                    shape_str(a.shape));
  }
  Tensor out({a.shape[0]});
  for (std::int64_t i = 0; i < a.shape[0]; ++i) out.at(i) = a.at(i, col);
  return out;
}

}  // namespace kernels
}  // namespace charnmt
