#include "mrf/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "mrf/errors.hpp"

namespace mrf {

Tensor Tensor::row(std::initializer_list<double> xs) {
  Tensor t(1, xs.size());
  std::size_t i = 0;
  for (double x : xs) t.data_[i++] = x;
  return t;
}

Tensor Tensor::from_rows(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) throw ShapeError("from_rows: data length does not match shape");
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = std::move(data);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace mrf
