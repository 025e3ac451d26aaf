#include "cdma/kernels.hpp"

#ifdef CDMA_KERNELS_HAVE_AVX2

#include <immintrin.h>

namespace cdma::kern::detail {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void rank1_avx2(double* a, const double* y, double w, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        const __m256d wyj = _mm256_set1_pd(w * y[j]);
        double* col = a + j * n;
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
            __m256d vc = _mm256_loadu_pd(col + i);
            vc = _mm256_fmadd_pd(wyj, _mm256_loadu_pd(y + i), vc);
            _mm256_storeu_pd(col + i, vc);
        }
        const double s = w * y[j];
        for (; i < n; ++i) col[i] += s * y[i];
    }
}

double sign_residual_sq_avx2(const double* z, const double* amp, std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vz = _mm256_andnot_pd(signmask, _mm256_loadu_pd(z + i));  // |z|
        __m256d d = _mm256_sub_pd(vz, _mm256_loadu_pd(amp + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = (z[i] < 0 ? -z[i] : z[i]) - amp[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k{dot_avx2, axpy_avx2, hadamard_avx2, rank1_avx2,
                           sign_residual_sq_avx2};
    return k;
}

}  // namespace cdma::kern::detail

#endif  // CDMA_KERNELS_HAVE_AVX2
