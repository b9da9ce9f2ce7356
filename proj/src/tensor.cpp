// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/tensor.hpp"

#include <cmath>

#include "gadgetforge/error.hpp"
#include "gadgetforge/kernels.hpp"

namespace gadgetforge {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw Error(Errc::ShapeMismatch, "value count does not match shape");
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw Error(Errc::ShapeMismatch, "matmul inner dimensions differ");
  Tensor c(a.rows, b.cols);
  kernels::matmul(a.data, b.data, c.data, a.rows, a.cols, b.cols);
  return c;
}

Tensor transpose(const Tensor& a) {
  Tensor t(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) t(c, r) = a(r, c);
  }
  return t;
}

}  // namespace gadgetforge
