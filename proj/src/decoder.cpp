#include "cdma/decoder.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <bit>
#include <cmath>
#include <cstdint>

#include "cdma/errors.hpp"
#include "cdma/kernels.hpp"

namespace cdma {

PartitionedSignature partition(const SignatureMatrix& s) {
    const int m = s.chips();
    const int n = s.users();
    if (n < m) throw NoInvertibleBlock("partition requires n >= m");

    // column-pivoted QR picks the m best-conditioned columns for A
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(s.entries);
    if (qr.rank() < m) throw NoInvertibleBlock("signature matrix has row rank < m");

    const auto perm = qr.colsPermutation().indices();
    PartitionedSignature part;
    part.m = m;
    part.n = n;
    part.column_order.assign(perm.data(), perm.data() + n);
    part.a.resize(m, m);
    part.b.resize(m, n - m);
    for (int k = 0; k < m; ++k) part.a.col(k) = s.entries.col(part.column_order[k]);
    for (int k = m; k < n; ++k) part.b.col(k - m) = s.entries.col(part.column_order[k]);

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(part.a);
    if (std::fabs(lu.determinant()) <= 1e-10)
        throw NoInvertibleBlock("pivoted block A is numerically singular");
    part.a_inv = lu.inverse();
    return part;
}

namespace {

// sign with sign(0) = +1
inline double sign_pos(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

Eigen::VectorXd decode(const Eigen::VectorXd& y, const PartitionedSignature& part,
                       const Eigen::VectorXd& amplitudes) {
    const int m = part.m;
    const int n = part.n;
    const int free_bits = n - m;
    if (free_bits > 20) throw TooManyFreeBits("exhaustive search limited to n - m <= 20");
    if (y.size() != m) throw DimensionMismatch("received vector has wrong length");
    if (amplitudes.size() != n) throw DimensionMismatch("amplitude vector has wrong length");

    // amplitudes in partitioned order
    Eigen::VectorXd d1(m), d2(free_bits);
    for (int k = 0; k < m; ++k) d1(k) = amplitudes(part.column_order[k]);
    for (int k = 0; k < free_bits; ++k) d2(k) = amplitudes(part.column_order[m + k]);

    const Eigen::VectorXd z0 = part.a_inv * y;
    Eigen::VectorXd x2 = Eigen::VectorXd::Constant(free_bits, -1.0);
    Eigen::VectorXd best_x2 = x2;
    Eigen::VectorXd z = z0;
    double best_cost;

    if (free_bits == 0) {
        best_cost = kern::sign_residual_sq(z.data(), d1.data(), m);
    } else {
        // columns of C = A^-1 B diag(d2); flipping bit j moves z by -/+ 2*C_j
        const Eigen::MatrixXd c = part.a_inv * part.b * d2.asDiagonal();
        z = z0 - c * x2;
        best_cost = kern::sign_residual_sq(z.data(), d1.data(), m);
        const std::uint32_t total = 1u << free_bits;
        std::uint32_t gray = 0;
        for (std::uint32_t i = 1; i < total; ++i) {
            const std::uint32_t next_gray = i ^ (i >> 1);
            const int bit = static_cast<int>(std::countr_zero(gray ^ next_gray));
            gray = next_gray;
            x2(bit) = -x2(bit);
            kern::axpy(-2.0 * x2(bit), c.col(bit).data(), z.data(), m);
            const double cost = kern::sign_residual_sq(z.data(), d1.data(), m);
            if (cost < best_cost) {
                best_cost = cost;
                best_x2 = x2;
            }
        }
    }

    // recompute X1 from the winning X2 by the sign rule
    Eigen::VectorXd z_best = z0;
    if (free_bits > 0) z_best -= part.a_inv * part.b * d2.cwiseProduct(best_x2);
    Eigen::VectorXd x_user(n);
    for (int k = 0; k < m; ++k) x_user(part.column_order[k]) = sign_pos(z_best(k));
    for (int k = 0; k < free_bits; ++k) x_user(part.column_order[m + k]) = best_x2(k);
    return x_user;
}

BatchDecodeResult decode_batch(const Eigen::MatrixXd& ys, const PartitionedSignature& part,
                               const Eigen::VectorXd& amplitudes, const Eigen::MatrixXd* truth) {
    const long count = ys.cols();
    BatchDecodeResult res;
    res.x_hat.resize(part.n, count);
    for (long j = 0; j < count; ++j) res.x_hat.col(j) = decode(ys.col(j), part, amplitudes);
    res.bits = static_cast<long>(part.n) * count;
    if (truth != nullptr) {
        if (truth->rows() != part.n || truth->cols() != count)
            throw DimensionMismatch("truth matrix shape mismatch");
        res.bit_errors = ((res.x_hat.array() * truth->array()) < 0.0).count();
        res.ber = static_cast<double>(res.bit_errors) / static_cast<double>(res.bits);
    }
    return res;
}

}  // namespace cdma
