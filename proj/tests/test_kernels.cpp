// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "gadgetforge/kernels.hpp"
#include "gadgetforge/rng.hpp"
#include "gadgetforge/sha256.hpp"

using namespace gadgetforge;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("matmul kernels agree with a triple loop") {
  Rng rng(1);
  for (int round = 0; round < 30; ++round) {
    const std::size_t m = 1 + rng.below(40), k = 1 + rng.below(40), n = 1 + rng.below(40);
    const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
    std::vector<double> ref(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t t = 0; t < k; ++t) ref[i * n + j] += a[i * k + t] * b[t * n + j];

    std::vector<double> s(m * n, 5.0), p(m * n, 5.0), d(m * n, 5.0);
    kernels::matmul_serial(a, b, s, m, k, n);
    kernels::matmul_parallel(a, b, p, m, k, n);
    kernels::matmul(a, b, d, m, k, n);
    for (std::size_t i = 0; i < m * n; ++i) {
      CHECK(std::abs(s[i] - ref[i]) < 1e-12);
      CHECK(p[i] == s[i]);
      CHECK(d[i] == s[i]);
    }
    std::vector<double> acc(m * n, 1.0);
    kernels::matmul_parallel(a, b, acc, m, k, n, true);
    for (std::size_t i = 0; i < m * n; ++i) CHECK(std::abs(acc[i] - 1.0 - ref[i]) < 1e-12);

    // a^T b with a: m x k viewed as k' = m rows
    std::vector<double> atb(k * n, 0.0), ref_atb(k * n, 0.0);
    const auto b2 = random_vec(rng, m * n);
    kernels::matmul_at_b_serial(a, b2, atb, m, k, n);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t t = 0; t < m; ++t) ref_atb[i * n + j] += a[t * k + i] * b2[t * n + j];
    for (std::size_t i = 0; i < k * n; ++i) CHECK(std::abs(atb[i] - ref_atb[i]) < 1e-12);

    // a b^T with a: m x k, b3: n x k
    std::vector<double> abt(m * n, 0.0), ref_abt(m * n, 0.0);
    const auto b3 = random_vec(rng, n * k);
    kernels::matmul_a_bt_serial(a, b3, abt, m, k, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t t = 0; t < k; ++t) ref_abt[i * n + j] += a[i * k + t] * b3[j * k + t];
    for (std::size_t i = 0; i < m * n; ++i) CHECK(std::abs(abt[i] - ref_abt[i]) < 1e-12);
  }
}

TEST_CASE("large matmul: parallel equals serial bit for bit") {
  Rng rng(2);
  const std::size_t m = 130, k = 70, n = 90;
  const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
  std::vector<double> s(m * n), p(m * n);
  kernels::matmul_serial(a, b, s, m, k, n);
  kernels::matmul_parallel(a, b, p, m, k, n);
  CHECK(s == p);
}

TEST_CASE("sha256_all serial and parallel agree") {
  std::vector<std::string> texts;
  for (int i = 0; i < 500; ++i) texts.push_back(std::string(static_cast<std::size_t>(i), static_cast<char>('a' + i % 26)));
  const auto s = kernels::sha256_all_serial(texts);
  CHECK(s == kernels::sha256_all_parallel(texts));
  CHECK(s[3] == sha256_hex("ddd"));
}

TEST_CASE("ordered sums agree exactly") {
  Rng rng(3);
  std::vector<std::vector<double>> parts;
  for (int i = 0; i < 37; ++i) parts.push_back(random_vec(rng, 1000));
  std::vector<double> s(1000), p(1000);
  kernels::sum_ordered_serial(parts, s);
  kernels::sum_ordered_parallel(parts, p);
  CHECK(s == p);
  double ref = 0;
  for (const auto& part : parts) ref += part[17];
  CHECK(s[17] == ref);
}
