#include "cdma/kernels.hpp"

namespace cdma::kern {
namespace {

bool cpu_has_avx2() {
#if defined(CDMA_KERNELS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    Isa isa;
    const detail::Kernels* k;
};

State& state() {
    static State s = [] {
#ifdef CDMA_KERNELS_HAVE_AVX2
        if (cpu_has_avx2()) return State{Isa::Avx2, &detail::avx2_kernels()};
#endif
        return State{Isa::Scalar, &detail::scalar_kernels()};
    }();
    return s;
}

}  // namespace

Isa active_isa() { return state().isa; }

void set_isa(Isa isa) {
#ifdef CDMA_KERNELS_HAVE_AVX2
    if (isa == Isa::Avx2 && cpu_has_avx2()) {
        state() = {Isa::Avx2, &detail::avx2_kernels()};
        return;
    }
#endif
    (void)isa;
    state() = {Isa::Scalar, &detail::scalar_kernels()};
}

double dot(const double* a, const double* b, std::size_t n) { return state().k->dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { state().k->axpy(alpha, x, y, n); }
void hadamard(const double* a, const double* b, double* out, std::size_t n) { state().k->hadamard(a, b, out, n); }
void rank1_update(double* a, const double* y, double w, std::size_t n) { state().k->rank1_update(a, y, w, n); }
double sign_residual_sq(const double* z, const double* amp, std::size_t n) { return state().k->sign_residual_sq(z, amp, n); }

}  // namespace cdma::kern
