#include "cdma/signatures.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <sstream>

#include "cdma/errors.hpp"
#include "cdma/kernels.hpp"

namespace cdma {

namespace {

void check_valid(const SignatureMatrix& s) {
    if (s.chips() < 1 || s.users() < 1) throw DimensionMismatch("signature matrix must be at least 1x1");
    if (!s.entries.allFinite()) throw ParseError("signature matrix has non-finite entries");
}

}  // namespace

std::string EstimabilityReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"rank\":" << rank << ",\"n\":" << n << ",\"estimable\":" << (estimable ? "true" : "false")
       << ",\"min_singular_value\":" << min_singular_value << ",\"bound\":" << bound << "}";
    return os.str();
}

SignatureMatrix normalize_columns(const SignatureMatrix& s) {
    check_valid(s);
    Eigen::MatrixXd out = s.entries;
    for (int j = 0; j < out.cols(); ++j) {
        const double norm = out.col(j).norm();
        if (norm < 1e-300) throw ZeroColumn("column " + std::to_string(j) + " is numerically zero");
        out.col(j) /= norm;
    }
    return SignatureMatrix{std::move(out)};
}

RowProductMatrix row_product(const SignatureMatrix& s, RowProductKind kind) {
    check_valid(s);
    const int m = s.chips();
    const int n = s.users();
    const int rows = kind == RowProductKind::Full ? m * (m + 1) / 2 : m * (m - 1) / 2;

    RowProductMatrix rp;
    rp.kind = kind;
    rp.entries.resize(rows, n);
    rp.row_pairs.reserve(rows);

    // rows of S are strided in Eigen's column-major layout; copy once
    const Eigen::MatrixXd rowsT = s.entries.transpose();  // n x m, column k = row k of S
    int r = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = (kind == RowProductKind::Full ? i : i + 1); j < m; ++j) {
            Eigen::VectorXd prod(n);
            kern::hadamard(rowsT.col(i).data(), rowsT.col(j).data(), prod.data(), n);
            rp.entries.row(r) = prod.transpose();
            rp.row_pairs.emplace_back(i, j);
            ++r;
        }
    }
    return rp;
}

EstimabilityReport estimability(const SignatureMatrix& s, bool noise_known) {
    const auto rp = row_product(s, noise_known ? RowProductKind::Full : RowProductKind::OffDiag);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(rp.entries);
    const auto& sv = svd.singularValues();

    EstimabilityReport rep;
    rep.n = s.users();
    rep.bound = static_cast<int>(rp.entries.rows());
    const double sigma_max = sv.size() ? sv(0) : 0.0;
    const double thresh = kRankThreshold * sigma_max;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    rep.rank = rank;
    rep.estimable = (rank == rep.n);
    rep.min_singular_value = (rank >= rep.n && sv.size() >= rep.n) ? sv(rep.n - 1) : 0.0;
    return rep;
}

SignatureMatrix construct_known_noise(int m, int n) {
    if (m < 1 || n < 1) throw BoundExceeded("m and n must be positive");
    if (n > m * (m + 1) / 2)
        throw BoundExceeded("n exceeds m(m+1)/2 = " + std::to_string(m * (m + 1) / 2));

    Eigen::MatrixXd s(1, 1);
    s(0, 0) = 1.0;
    int rows = 1;
    while (rows < m) {
        const int cols = static_cast<int>(s.cols());
        const int k = rows + 1;  // new top row [1...1 | e_1 pattern], right block I_k over 0
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(rows + 1, cols + k);
        next.row(0).head(cols).setOnes();
        next.block(1, 0, rows, cols) = s;
        next.block(0, cols, k, k).setIdentity();
        s = std::move(next);
        ++rows;
    }
    const SignatureMatrix full = normalize_columns(SignatureMatrix{std::move(s)});
    return SignatureMatrix{full.entries.leftCols(n)};
}

SignatureMatrix construct_unknown_noise(int m, int n) {
    if (m < 2 || n < 1) throw BoundExceeded("requires m >= 2, n >= 1");
    if (n > m * (m - 1) / 2)
        throw BoundExceeded("n exceeds m(m-1)/2 = " + std::to_string(m * (m - 1) / 2));

    Eigen::MatrixXd s(2, 1);
    s << 1.0, 1.0;
    int rows = 2;
    while (rows < m) {
        const int cols = static_cast<int>(s.cols());
        const int k = rows;  // new top row 0..0|1..1, right block I_k (fills all old rows)
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(rows + 1, cols + k);
        next.row(0).tail(k).setOnes();
        next.block(1, 0, rows, cols) = s;
        next.block(1, cols, k, k).setIdentity();
        s = std::move(next);
        ++rows;
    }
    const SignatureMatrix full = normalize_columns(SignatureMatrix{std::move(s)});
    return SignatureMatrix{full.entries.leftCols(n)};
}

namespace {

bool is_prime(int q) {
    if (q < 2) return false;
    for (int d = 2; d * d <= q; ++d)
        if (q % d == 0) return false;
    return true;
}

// Hadamard matrix of the given order via Paley I (order-1 prime, = 3 mod 4)
// or Sylvester doubling; throws if neither applies.
Eigen::MatrixXd hadamard(int order) {
    if (order == 1) return Eigen::MatrixXd::Ones(1, 1);
    if (order == 2) {
        Eigen::MatrixXd h(2, 2);
        h << 1, 1, 1, -1;
        return h;
    }
    const int q = order - 1;
    if (is_prime(q) && q % 4 == 3) {
        std::vector<int> chi(q, -1);
        chi[0] = 0;
        for (int i = 1; i < q; ++i) chi[(i * i) % q] = 1;
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(order, order);
        c.row(0).tail(q).setOnes();
        c.col(0).tail(q).setConstant(-1.0);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j) c(1 + i, 1 + j) = chi[((j - i) % q + q) % q];
        return c + Eigen::MatrixXd::Identity(order, order);
    }
    if (order % 2 == 0) {
        const Eigen::MatrixXd h = hadamard(order / 2);
        Eigen::MatrixXd out(order, order);
        out.topLeftCorner(order / 2, order / 2) = h;
        out.topRightCorner(order / 2, order / 2) = h;
        out.bottomLeftCorner(order / 2, order / 2) = h;
        out.bottomRightCorner(order / 2, order / 2) = -h;
        return out;
    }
    throw BoundExceeded("no Hadamard construction for order " + std::to_string(order));
}

}  // namespace

SignatureMatrix binary_wbe(int m, int n) {
    if (m < 1 || n < m) throw BoundExceeded("binary_wbe requires 1 <= m <= n");
    const Eigen::MatrixXd h = hadamard(n);
    return normalize_columns(SignatureMatrix{h.topRows(m)});
}

namespace {

// DFS over d in {-1,0,1}^n with the first nonzero digit fixed to +1,
// carrying v = S d incrementally. Returns false on the first nonzero d
// with ||S d||_inf below tolerance.
bool ud_dfs(const Eigen::MatrixXd& s, Eigen::VectorXd& v, int col, bool all_zero, double tol) {
    const int n = static_cast<int>(s.cols());
    const int m = static_cast<int>(s.rows());
    if (col == n) {
        if (all_zero) return true;
        return v.lpNorm<Eigen::Infinity>() >= tol;
    }
    // digit 0
    if (!ud_dfs(s, v, col + 1, all_zero, tol)) return false;
    // digit +1
    kern::axpy(1.0, s.col(col).data(), v.data(), m);
    const bool ok_plus = ud_dfs(s, v, col + 1, false, tol);
    if (!ok_plus) {
        kern::axpy(-1.0, s.col(col).data(), v.data(), m);
        return false;
    }
    // digit -1 (skipped while all earlier digits are zero: d and -d collide together)
    if (!all_zero) {
        kern::axpy(-2.0, s.col(col).data(), v.data(), m);
        const bool ok_minus = ud_dfs(s, v, col + 1, false, tol);
        kern::axpy(1.0, s.col(col).data(), v.data(), m);
        return ok_minus;
    }
    kern::axpy(-1.0, s.col(col).data(), v.data(), m);
    return true;
}

}  // namespace

bool verify_uniquely_decodable(const SignatureMatrix& s) {
    check_valid(s);
    if (s.users() > 16) throw TooLarge("brute-force unique-decodability check limited to n <= 16");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(s.chips());
    const double tol = 1e-9 * std::max(1.0, s.entries.cwiseAbs().maxCoeff());
    return ud_dfs(s.entries, v, 0, true, tol);
}

namespace {

Eigen::MatrixXd random_pm1(int m, int n, std::mt19937_64& rng) {
    Eigen::MatrixXd a(m, n);
    std::bernoulli_distribution coin(0.5);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) a(i, j) = coin(rng) ? 1.0 : -1.0;
    return a;
}

// unnormalized search; returns true on success
bool search_ud(int m, int n, std::mt19937_64& rng, int max_tries, Eigen::MatrixXd& out) {
    for (int t = 0; t < max_tries; ++t) {
        Eigen::MatrixXd cand = random_pm1(m, n, rng);
        if (verify_uniquely_decodable(SignatureMatrix{cand})) {
            out = std::move(cand);
            return true;
        }
    }
    if (m % 2 == 0 && n >= 2) {
        // doubling lift: [[A, A], [A, -A]] of an (m/2 x k) seed stays uniquely
        // decodable; append the remaining n - 2k random columns and recheck.
        for (int k = n / 2; k >= 1; --k) {
            Eigen::MatrixXd seed;
            if (!search_ud(m / 2, k, rng, max_tries, seed)) continue;
            Eigen::MatrixXd lifted(m, 2 * k);
            lifted.topLeftCorner(m / 2, k) = seed;
            lifted.topRightCorner(m / 2, k) = seed;
            lifted.bottomLeftCorner(m / 2, k) = seed;
            lifted.bottomRightCorner(m / 2, k) = -seed;
            const int extra = n - 2 * k;
            for (int t = 0; t < max_tries; ++t) {
                Eigen::MatrixXd cand(m, n);
                cand.leftCols(2 * k) = lifted;
                if (extra > 0) cand.rightCols(extra) = random_pm1(m, extra, rng);
                if (verify_uniquely_decodable(SignatureMatrix{cand})) {
                    out = std::move(cand);
                    return true;
                }
                if (extra == 0) break;
            }
        }
    }
    return false;
}

}  // namespace

SignatureMatrix find_uniquely_decodable(int m, int n, std::uint64_t seed, int max_tries) {
    if (n > 16) throw TooLarge("unique-decodability certification limited to n <= 16");
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd found;
    if (!search_ud(m, n, rng, max_tries, found))
        throw TooLarge("no uniquely decodable " + std::to_string(m) + "x" + std::to_string(n) +
                       " matrix found within the search budget");
    return normalize_columns(SignatureMatrix{std::move(found)});
}

}  // namespace cdma
