// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/kernels.hpp"

#include <omp.h>

#include <algorithm>

#include "gadgetforge/sha256.hpp"

namespace gadgetforge::kernels {

void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                   std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m * n), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                     std::size_t k, std::size_t n, bool accumulate) {
  // Rows are independent and each row sums in the same order as the serial kernel.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = c.data() + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_at_b_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t k,
                        std::size_t m, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data() + p * m;
    const double* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_a_bt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                        std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.data() + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      c[i * k + p] += s;
    }
  }
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m, std::size_t k,
            std::size_t n, bool accumulate) {
  constexpr std::size_t kParallelWork = 1u << 16;
  if (m * k * n >= kParallelWork && m > 1 && !omp_in_parallel() && omp_get_max_threads() > 1) {
    matmul_parallel(a, b, c, m, k, n, accumulate);
  } else {
    matmul_serial(a, b, c, m, k, n, accumulate);
  }
}

std::vector<std::string> sha256_all_serial(std::span<const std::string> texts) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(sha256_hex(t));
  return out;
}

std::vector<std::string> sha256_all_parallel(std::span<const std::string> texts) {
  std::vector<std::string> out(texts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(texts.size()); ++i) {
    out[static_cast<std::size_t>(i)] = sha256_hex(texts[static_cast<std::size_t>(i)]);
  }
  return out;
}

void sum_ordered_serial(std::span<const std::vector<double>> parts, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& part : parts) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += part[j];
  }
}

void sum_ordered_parallel(std::span<const std::vector<double>> parts, std::span<double> out) {
  // Parallel over elements; each element still sums the parts in index order.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(out.size()); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double s = 0.0;
    for (const auto& part : parts) s += part[j];
    out[j] = s;
  }
}

}  // namespace gadgetforge::kernels
