#include "rgat/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rgat::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// below this many multiply-adds the fork/join overhead dominates; the bench
// tool puts the crossover between 64^3 and 128^3 on a 2-core machine
constexpr long long kMinParallelWork = 1000000;

inline double dot_element(bool trans_a, bool trans_b, const double* a, int lda,
                          const double* b, int ldb, int i, int j, int k) {
  double s = 0.0;
  if (!trans_a && !trans_b) {
    const double* ar = a + static_cast<size_t>(i) * lda;
    for (int p = 0; p < k; ++p) s += ar[p] * b[static_cast<size_t>(p) * ldb + j];
  } else if (!trans_a && trans_b) {
    const double* ar = a + static_cast<size_t>(i) * lda;
    const double* br = b + static_cast<size_t>(j) * ldb;
    for (int p = 0; p < k; ++p) s += ar[p] * br[p];
  } else if (trans_a && !trans_b) {
    for (int p = 0; p < k; ++p)
      s += a[static_cast<size_t>(p) * lda + i] *
           b[static_cast<size_t>(p) * ldb + j];
  } else {
    const double* br = b + static_cast<size_t>(j) * ldb;
    for (int p = 0; p < k; ++p) s += a[static_cast<size_t>(p) * lda + i] * br[p];
  }
  return s;
}

}  // namespace

void set_parallel(bool on) { g_parallel.store(on); }

bool parallel_enabled() {
#ifdef _OPENMP
  return g_parallel.load();
#else
  return false;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gemm_serial(bool trans_a, bool trans_b, int m, int n, int k,
                 const double* a, int lda, const double* b, int ldb, double* c,
                 int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    double* cr = c + static_cast<size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
      double s = dot_element(trans_a, trans_b, a, lda, b, ldb, i, j, k);
      if (accumulate)
        cr[j] += s;
      else
        cr[j] = s;
    }
  }
}

void gemm_omp(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
              int lda, const double* b, int ldb, double* c, int ldc,
              bool accumulate) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = dot_element(trans_a, trans_b, a, lda, b, ldb, i, j, k);
      double* cij = c + static_cast<size_t>(i) * ldc + j;
      if (accumulate)
        *cij += s;
      else
        *cij = s;
    }
  }
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          int lda, const double* b, int ldb, double* c, int ldc,
          bool accumulate) {
  long long work = static_cast<long long>(m) * n * k;
  if (parallel_enabled() && work >= kMinParallelWork && thread_count() > 1) {
    gemm_omp(trans_a, trans_b, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  } else {
    gemm_serial(trans_a, trans_b, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  }
}

}  // namespace rgat::kernels
