#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cdma/signatures.hpp"

namespace cdma {

// S split as [A | B] with A an invertible m x m block, columns picked by
// greedy pivoting. column_order maps partitioned column index -> user index.
struct PartitionedSignature {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd a_inv;
    std::vector<int> column_order;
    int m = 0;
    int n = 0;
};

PartitionedSignature partition(const SignatureMatrix& s);

// Power-adjusted block decoder: exhaustive search over the n-m "free" bits,
// sign rule for the rest. amplitudes are sqrt(p_i) in user order; the
// returned vector is in user order as well. Requires n - m <= 20.
Eigen::VectorXd decode(const Eigen::VectorXd& y, const PartitionedSignature& part,
                       const Eigen::VectorXd& amplitudes);

struct BatchDecodeResult {
    Eigen::MatrixXd x_hat;   // n x L, entries +/-1
    long bits = 0;
    long bit_errors = 0;     // only when truth supplied
    double ber = 0.0;
};

BatchDecodeResult decode_batch(const Eigen::MatrixXd& ys, const PartitionedSignature& part,
                               const Eigen::VectorXd& amplitudes,
                               const Eigen::MatrixXd* truth = nullptr);

}  // namespace cdma
