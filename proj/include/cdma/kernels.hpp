#pragma once

#include <cstddef>

// Small dense kernels behind the simulator's inner loops: covariance rank-1
// accumulation, decoder candidate scoring, and row-products. Each kernel has
// a scalar reference implementation and an AVX2 variant selected at runtime;
// the two are equivalence-tested against each other.
namespace cdma::kern {

enum class Isa { Scalar, Avx2 };

// ISA picked at startup from CPUID (AVX2 when available).
Isa active_isa();

// Force a specific ISA. Requests for an unsupported ISA fall back to scalar.
// Used by the equivalence tests; not needed in normal operation.
void set_isa(Isa isa);

// sum a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// out[i] = a[i]*b[i]
void hadamard(const double* a, const double* b, double* out, std::size_t n);

// a (column-major n x n) += w * y * y^T
void rank1_update(double* a, const double* y, double w, std::size_t n);

// sum (|z[i]| - amp[i])^2 -- the decoder's sign-rule residual
double sign_residual_sq(const double* z, const double* amp, std::size_t n);

namespace detail {
struct Kernels {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*hadamard)(const double*, const double*, double*, std::size_t);
    void (*rank1_update)(double*, const double*, double, std::size_t);
    double (*sign_residual_sq)(const double*, const double*, std::size_t);
};
const Kernels& scalar_kernels();
#ifdef CDMA_KERNELS_HAVE_AVX2
const Kernels& avx2_kernels();
#endif
}  // namespace detail

}  // namespace cdma::kern
