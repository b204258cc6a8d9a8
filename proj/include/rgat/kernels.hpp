#pragma once

namespace rgat::kernels {

// The OpenMP kernels partition work by output element; the arithmetic per
// element (and its floating-point order) is identical to the serial
// reference, so serial and parallel paths produce bit-identical results for
// any thread count. Tests assert exact equality.

void set_parallel(bool on);
bool parallel_enabled();
int thread_count();

// C[m x n] = op(A) * op(B), row-major with explicit row strides.
// op(A) is A^T when trans_a is set (A is then stored k x m, lda its stride).
// accumulate adds into C instead of overwriting it.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          int lda, const double* b, int ldb, double* c, int ldc,
          bool accumulate);

// Reference and parallel implementations, exposed for tests and the bench
// tool. gemm() dispatches between them on size.
void gemm_serial(bool trans_a, bool trans_b, int m, int n, int k,
                 const double* a, int lda, const double* b, int ldb, double* c,
                 int ldc, bool accumulate);
void gemm_omp(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
              int lda, const double* b, int ldb, double* c, int ldc,
              bool accumulate);

}  // namespace rgat::kernels
