#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cdma {

// m x n signature matrix; column i is the spreading code of user i.
// Columns are unit Euclidean norm after normalize_columns().
struct SignatureMatrix {
    Eigen::MatrixXd entries;

    int chips() const { return static_cast<int>(entries.rows()); }
    int users() const { return static_cast<int>(entries.cols()); }
};

enum class RowProductKind { Full, OffDiag };

// Matrix whose row for the pair (i, j) is the entrywise product of rows i
// and j of the source signature matrix. Full uses all pairs i <= j
// (m(m+1)/2 rows), OffDiag only i < j (m(m-1)/2 rows). Rows are ordered
// lexicographically in (i, j); the estimators rely on the same ordering
// when vectorizing covariance triangles.
struct RowProductMatrix {
    RowProductKind kind;
    Eigen::MatrixXd entries;
    std::vector<std::pair<int, int>> row_pairs;
};

struct EstimabilityReport {
    int rank = 0;
    int n = 0;
    bool estimable = false;
    double min_singular_value = 0.0;
    int bound = 0;  // m(m+1)/2 or m(m-1)/2

    std::string to_json() const;
};

// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankThreshold = 1e-10;

SignatureMatrix normalize_columns(const SignatureMatrix& s);

RowProductMatrix row_product(const SignatureMatrix& s, RowProductKind kind);

// Rank / minimum-singular-value audit of the row-product system that decides
// whether user powers are recoverable from the received covariance.
EstimabilityReport estimability(const SignatureMatrix& s, bool noise_known);

// Recursive construction with full-rank row-product matrix, known-noise case
// (seed [1], k = m+1 at each step). Requires 1 <= n <= m(m+1)/2.
SignatureMatrix construct_known_noise(int m, int n);

// Unknown-white-noise counterpart (seed [1,1]^T, k = m at each step).
// Requires 2 <= m, 1 <= n <= m(m-1)/2. All nonzero singular values of the
// off-diagonal row product of the result equal 0.5.
SignatureMatrix construct_unknown_noise(int m, int n);

// Binary WBE-style matrix: m rows of an n x n Hadamard matrix, scaled to
// unit column norm. Available when a Hadamard matrix of order n is
// constructible by Sylvester doubling / Paley I.
SignatureMatrix binary_wbe(int m, int n);

// True iff S maps distinct vectors of {-1,+1}^n to distinct outputs,
// i.e. S d != 0 for every nonzero d in {-1,0,1}^n. Brute force; n <= 16.
bool verify_uniquely_decodable(const SignatureMatrix& s);

// Seeded randomized search for a uniquely decodable +/-1 matrix, certified
// by verify_uniquely_decodable. Uses a doubling lift from a smaller seed
// matrix when plain random search stalls. Columns are normalized.
SignatureMatrix find_uniquely_decodable(int m, int n, std::uint64_t seed,
                                        int max_tries = 20000);

// Text format: optional '#' comment lines, then "m n", then m rows of n
// space-separated entries.
SignatureMatrix load_matrix(const std::string& path);
void save_matrix(const SignatureMatrix& s, const std::string& path);

}  // namespace cdma
