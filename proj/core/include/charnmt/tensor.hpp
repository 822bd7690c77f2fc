#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace charnmt {

using Shape = std::vector<std::int64_t>;

// Dense row-major array of doubles, rank 1 to 3. The one value type used
// for activations, parameters and gradients.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s);
  Tensor(Shape s, std::vector<double> values);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }

  std::int64_t rows() const;  // rank-1 tensors count as a single row
  std::int64_t cols() const;

  double& at(std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(std::int64_t r, std::int64_t c) {
    return data[static_cast<std::size_t>(r * cols() + c)];
  }
  double at(std::int64_t r, std::int64_t c) const {
    return data[static_cast<std::size_t>(r * cols() + c)];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

bool all_finite(const Tensor& t);
std::string shape_str(const Shape& s);

namespace kernels {

// Raw tensor math used by the autodiff graph. None of these record
// anything; they are plain value-level operations.

// a*b with the usual rank rules: (n,k)x(k,m)->(n,m); (k)x(k,m)->(m);
// (n,k)x(k)->(n).
Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T, for (n,k)x(m,k)->(n,m) and (k)x(m,k)->(m).
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// a^T * b, for (n,k)x(n,m)->(k,m). Used by matmul_nt's backward pass.
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// Adds vector b (size m) to every row of a (n x m), or plain add for rank-1 a.
Tensor add_rows(const Tensor& a, const Tensor& b);
// Scales row i of a by v[i].
Tensor scale_rows(const Tensor& a, const Tensor& v);

Tensor vtanh(const Tensor& a);
Tensor vsigmoid(const Tensor& a);

// Row-wise softmax with max subtraction. A rank-1 input is one row. If
// mask is non-null it must have a's shape; entries with mask 0 get weight
// exactly 0 and the normalization runs over the rest. A row with no
// unmasked entry is a contract error.
Tensor softmax_rows(const Tensor& a, const Tensor* mask = nullptr);
Tensor log_softmax_rows(const Tensor& a);

Tensor reduce_sum(const Tensor& a);  // -> shape {1}
Tensor concat_cols(const Tensor& a, const Tensor& b);

// out[i,:] = table[:, ids[i]]; table is (m x vocab).
Tensor gather_cols(const Tensor& table, const std::vector<int>& ids);
// out[i] = a[i, ids[i]].
Tensor pick_cols(const Tensor& a, const std::vector<int>& ids);
Tensor select_col(const Tensor& a, std::int64_t col);

}  // namespace kernels
}  // namespace charnmt
