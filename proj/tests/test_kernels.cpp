#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <vector>

#include "cdma/kernels.hpp"

using namespace cdma;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels match direct formulas") {
    kern::set_isa(kern::Isa::Scalar);
    std::mt19937_64 rng(7);
    const auto a = random_vec(13, rng);
    const auto b = random_vec(13, rng);

    double expected = 0;
    for (int i = 0; i < 13; ++i) expected += a[i] * b[i];
    CHECK(kern::dot(a.data(), b.data(), 13) == doctest::Approx(expected).epsilon(1e-14));

    auto y = b;
    kern::axpy(0.75, a.data(), y.data(), 13);
    for (int i = 0; i < 13; ++i) CHECK(y[i] == doctest::Approx(b[i] + 0.75 * a[i]));

    std::vector<double> h(13);
    kern::hadamard(a.data(), b.data(), h.data(), 13);
    for (int i = 0; i < 13; ++i) CHECK(h[i] == a[i] * b[i]);

    double sr = 0;
    for (int i = 0; i < 13; ++i) {
        const double d = std::abs(a[i]) - b[i];
        sr += d * d;
    }
    CHECK(kern::sign_residual_sq(a.data(), b.data(), 13) == doctest::Approx(sr).epsilon(1e-14));
}

TEST_CASE("rank1_update accumulates w*y*y^T") {
    kern::set_isa(kern::Isa::Scalar);
    std::mt19937_64 rng(11);
    const std::size_t n = 9;
    const auto y = random_vec(n, rng);
    std::vector<double> m(n * n, 0.5);
    kern::rank1_update(m.data(), y.data(), 2.0, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            CHECK(m[j * n + i] == doctest::Approx(0.5 + 2.0 * y[i] * y[j]).epsilon(1e-14));
}

TEST_CASE("simd variants agree with scalar reference") {
    std::mt19937_64 rng(42);
    for (const std::size_t n : {1u, 3u, 4u, 7u, 8u, 64u, 129u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);

        kern::set_isa(kern::Isa::Scalar);
        const double dot_s = kern::dot(a.data(), b.data(), n);
        const double sr_s = kern::sign_residual_sq(a.data(), b.data(), n);
        auto y_s = b;
        kern::axpy(-1.5, a.data(), y_s.data(), n);
        std::vector<double> m_s(n * n, 0.0);
        kern::rank1_update(m_s.data(), a.data(), 0.3, n);

        kern::set_isa(kern::Isa::Avx2);  // falls back to scalar when unsupported
        const double dot_v = kern::dot(a.data(), b.data(), n);
        const double sr_v = kern::sign_residual_sq(a.data(), b.data(), n);
        auto y_v = b;
        kern::axpy(-1.5, a.data(), y_v.data(), n);
        std::vector<double> m_v(n * n, 0.0);
        kern::rank1_update(m_v.data(), a.data(), 0.3, n);

        CHECK(dot_v == doctest::Approx(dot_s).epsilon(1e-13));
        CHECK(sr_v == doctest::Approx(sr_s).epsilon(1e-13));
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y_v[i] == doctest::Approx(y_s[i]).epsilon(1e-13));
        for (std::size_t i = 0; i < n * n; ++i)
            CHECK(m_v[i] == doctest::Approx(m_s[i]).epsilon(1e-13));
    }
    kern::set_isa(kern::Isa::Avx2);
}
