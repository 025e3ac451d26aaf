#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cdma/decoder.hpp"
#include "cdma/signatures.hpp"

namespace cdma {

enum class Method { Ml, SuboptKnown, SuboptUnknown, Iterative };

struct PowerEstimate {
    Eigen::VectorXd p_hat;
    Method method = Method::Ml;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
    bool rank_warning = false;               // least-squares solve hit rank deficiency
    std::vector<Eigen::VectorXd> history;    // per-iteration estimates (iterative method)
};

// Negative log-likelihood of the powers given the empirical covariance W:
// tr(M^-1 W) + ln|det M| with M = S diag(p) S^T + Sigma.
double nll_objective(const Eigen::VectorXd& p, const Eigen::MatrixXd& w, const SignatureMatrix& s,
                     const Eigen::MatrixXd& sigma);

// Component i is [S^T M^-1 (I - W M^-1) S]_ii, the derivative of the
// objective in p_i; zero at the ML stationarity point.
Eigen::VectorXd nll_gradient(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                             const SignatureMatrix& s, const Eigen::MatrixXd& sigma);

// Jacobian of the gradient: G o H (entrywise) with G = S^T M^-1 S and
// H = S^T M^-1 (2W - M) M^-1 S.
Eigen::MatrixXd nll_jacobian(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                             const SignatureMatrix& s, const Eigen::MatrixXd& sigma);

struct MlOptions {
    Eigen::VectorXd init;    // empty = subopt_known_noise warm start
    double tol = 1e-8;       // on ||gradient||_inf
    int max_iter = 200;
    int max_halvings = 30;
};

// Damped Newton on the stationarity system, iterates projected to p >= 0.
PowerEstimate ml_estimate(const SignatureMatrix& s, const Eigen::MatrixXd& w,
                          const Eigen::MatrixXd& sigma, const MlOptions& opts = {});

// Least squares on the full row-product system against the upper triangle
// of W - Sigma; negative components clamped to zero.
PowerEstimate subopt_known_noise(const SignatureMatrix& s, const Eigen::MatrixXd& w,
                                 const Eigen::MatrixXd& sigma);

// Same on the off-diagonal system against the strictly-upper entries of W;
// usable when the (white) noise variance is unknown.
PowerEstimate subopt_unknown_noise(const SignatureMatrix& s, const Eigen::MatrixXd& w);

// Decode-and-refit estimator for binary inputs: each iteration decodes every
// received vector with the current amplitudes, stacks the L sign-adjusted
// systems, and solves for the amplitudes in least squares. Negative
// amplitude solutions are folded by absolute value before squaring.
PowerEstimate iterative_binary(const SignatureMatrix& s, const Eigen::MatrixXd& ys,
                               const PartitionedSignature& part, const Eigen::VectorXd& init,
                               int n_iter);

}  // namespace cdma
