#include <doctest.h>

#include <vector>

#include "rgat/kernels.hpp"
#include "rgat/rng.hpp"

using namespace rgat;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// naive oracle, plain index arithmetic
std::vector<double> gemm_naive(bool ta, bool tb, int m, int n, int k,
                               const std::vector<double>& a,
                               const std::vector<double>& b,
                               const std::vector<double>& c0, bool acc) {
  std::vector<double> c = acc ? c0 : std::vector<double>(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) {
        double av = ta ? a[static_cast<size_t>(p) * m + i]
                       : a[static_cast<size_t>(i) * k + p];
        double bv = tb ? b[static_cast<size_t>(j) * k + p]
                       : b[static_cast<size_t>(p) * n + j];
        s += av * bv;
      }
      c[static_cast<size_t>(i) * n + j] += s;
    }
  return c;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("gemm matches the naive oracle for every transpose combination") {
  Rng rng(101);
  for (bool ta : {false, true})
    for (bool tb : {false, true})
      for (bool acc : {false, true}) {
        int m = 5, n = 4, k = 7;
        // stored shapes: A is m x k (or k x m when transposed), B is k x n (or n x k)
        std::vector<double> a = random_vec(static_cast<size_t>(m) * k, rng);
        std::vector<double> b = random_vec(static_cast<size_t>(k) * n, rng);
        std::vector<double> c = random_vec(static_cast<size_t>(m) * n, rng);
        std::vector<double> expected = gemm_naive(ta, tb, m, n, k, a, b, c, acc);
        std::vector<double> got = c;
        int lda = ta ? m : k;
        int ldb = tb ? k : n;
        kernels::gemm_serial(ta, tb, m, n, k, a.data(), lda, b.data(), ldb,
                             got.data(), n, acc);
        for (size_t i = 0; i < got.size(); ++i)
          CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
      }
}

TEST_CASE("openmp kernel is bit-identical to the serial reference") {
  Rng rng(7);
  const int shapes[][3] = {{1, 200, 360}, {9, 100, 100}, {33, 17, 129},
                           {128, 128, 128}};
  for (const auto& shape : shapes) {
    int m = shape[0], n = shape[1], k = shape[2];
    std::vector<double> a = random_vec(static_cast<size_t>(m) * k, rng);
    std::vector<double> b = random_vec(static_cast<size_t>(k) * n, rng);
    std::vector<double> cs(static_cast<size_t>(m) * n, 0.5);
    std::vector<double> cp = cs;
    kernels::gemm_serial(false, false, m, n, k, a.data(), k, b.data(), n,
                         cs.data(), n, true);
    kernels::gemm_omp(false, false, m, n, k, a.data(), k, b.data(), n,
                      cp.data(), n, true);
    CHECK(cs == cp);  // exact equality, not approximate
  }
}

TEST_CASE("dispatcher result is independent of the parallel toggle") {
  Rng rng(13);
  int m = 64, n = 64, k = 64;
  std::vector<double> a = random_vec(static_cast<size_t>(m) * k, rng);
  std::vector<double> b = random_vec(static_cast<size_t>(k) * n, rng);
  std::vector<double> c1(static_cast<size_t>(m) * n, 0.0), c2 = c1;
  kernels::set_parallel(true);
  kernels::gemm(false, false, m, n, k, a.data(), k, b.data(), n, c1.data(), n,
                false);
  kernels::set_parallel(false);
  kernels::gemm(false, false, m, n, k, a.data(), k, b.data(), n, c2.data(), n,
                false);
  kernels::set_parallel(true);
  CHECK(c1 == c2);
}

}  // TEST_SUITE
