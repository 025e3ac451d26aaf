#include "cdma/kernels.hpp"

#include <cmath>

namespace cdma::kern::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void rank1_scalar(double* a, const double* y, double w, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        const double wyj = w * y[j];
        double* col = a + j * n;
        for (std::size_t i = 0; i < n; ++i) col[i] += wyj * y[i];
    }
}

double sign_residual_sq_scalar(const double* z, const double* amp, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::fabs(z[i]) - amp[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{dot_scalar, axpy_scalar, hadamard_scalar, rank1_scalar,
                           sign_residual_sq_scalar};
    return k;
}

}  // namespace cdma::kern::detail
