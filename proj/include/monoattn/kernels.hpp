#pragma once

#include <cstdint>

namespace monoattn::kernels {

// Dense double-precision matmul kernels. Every kernel ACCUMULATES into c
// (c += a·b); callers pass zeroed buffers for a plain product.
//
// The serial versions are the reference; the _omp versions parallelize the
// outer row loop and keep the per-element accumulation order identical, so
// serial and parallel results are bit-identical for any thread count.

// c[m×n] += a[m×k] · b[k×n]
void matmul_nn_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nn_omp(const double* a, const double* b, double* c, int m, int k, int n);

// c[m×n] += a[m×k] · b[n×k]^T
void matmul_nt_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt_omp(const double* a, const double* b, double* c, int m, int k, int n);

// c[m×n] += a[k×m]^T · b[k×n]
void matmul_tn_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn_omp(const double* a, const double* b, double* c, int m, int k, int n);

enum class Mode {
  Auto,      // OpenMP when the product is large enough, serial otherwise
  Serial,    // always the reference kernels
  Parallel,  // always the OpenMP kernels
};

Mode mode();
void set_mode(Mode m);

// Work threshold (m*k*n multiply count) above which Auto picks OpenMP.
extern const std::int64_t kParallelWorkThreshold;

// Dispatching entry points used by the autodiff ops.
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);

}  // namespace monoattn::kernels
