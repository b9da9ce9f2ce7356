// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

// Data-parallel inner loops. Every OpenMP kernel has a serial twin with the
// same contract; the serial versions are the reference the tests and the
// benchmark compare against.
namespace gadgetforge::kernels {

/// c (m x n) = a (m x k) * b (k x n), row-major. With `accumulate` the
/// product is added to c instead of overwriting it.
void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                   std::size_t k, std::size_t n, bool accumulate = false);
void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                     std::size_t k, std::size_t n, bool accumulate = false);

/// c (m x n) += a^T * b where a is k x m and b is k x n.
void matmul_at_b_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t k,
                        std::size_t m, std::size_t n);
/// c (m x k) += a * b^T where a is m x n and b is k x n.
void matmul_a_bt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                        std::size_t n, std::size_t k);

/// Dispatches to the parallel kernel above a size threshold and when not
/// already inside a parallel region.
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m, std::size_t k,
            std::size_t n, bool accumulate = false);

/// SHA-256 hex digest of every text.
std::vector<std::string> sha256_all_serial(std::span<const std::string> texts);
std::vector<std::string> sha256_all_parallel(std::span<const std::string> texts);

/// Sum of equally-shaped buffers in index order, so the result does not
/// depend on how the parts were produced.
void sum_ordered_serial(std::span<const std::vector<double>> parts, std::span<double> out);
void sum_ordered_parallel(std::span<const std::vector<double>> parts, std::span<double> out);

}  // namespace gadgetforge::kernels
