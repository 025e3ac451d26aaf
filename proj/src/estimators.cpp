#include "cdma/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>

#include "cdma/errors.hpp"

namespace cdma {

namespace {

struct ModelState {
    Eigen::MatrixXd g;           // S^T M^-1 S
    Eigen::MatrixXd f;           // S^T M^-1 W M^-1 S
    Eigen::VectorXd residual;    // diag(g - f)
    double log_det = 0.0;
    double trace_term = 0.0;
};

ModelState evaluate_model(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                          const Eigen::MatrixXd& s, const Eigen::MatrixXd& sigma) {
    const Eigen::MatrixXd model_cov = s * p.asDiagonal() * s.transpose() + sigma;
    const Eigen::LLT<Eigen::MatrixXd> llt(model_cov);
    if (llt.info() != Eigen::Success)
        throw SingularModel("model covariance is not positive definite");

    ModelState st;
    const Eigen::MatrixXd minv_s = llt.solve(s);            // M^-1 S
    const Eigen::MatrixXd minv_w = llt.solve(w);            // M^-1 W
    st.g = s.transpose() * minv_s;
    st.f = minv_s.transpose() * w * minv_s;
    st.residual = (st.g - st.f).diagonal();
    st.trace_term = minv_w.trace();
    st.log_det = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) st.log_det += 2.0 * std::log(l(i, i));
    return st;
}

void check_shapes(const SignatureMatrix& s, const Eigen::MatrixXd& w) {
    if (w.rows() != s.chips() || w.cols() != s.chips())
        throw DimensionMismatch("W must be m x m");
}

PowerEstimate least_squares_powers(const Eigen::MatrixXd& system, const Eigen::VectorXd& rhs,
                                   Method method) {
    // minimum-norm solution on rank deficiency, flagged via rank_warning
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(system);
    PowerEstimate est;
    est.method = method;
    est.rank_warning = cod.rank() < system.cols();
    est.p_hat = cod.solve(rhs).cwiseMax(0.0);
    est.residual = (system * est.p_hat - rhs).norm();
    est.iterations = 1;
    est.converged = true;
    return est;
}

}  // namespace

double nll_objective(const Eigen::VectorXd& p, const Eigen::MatrixXd& w, const SignatureMatrix& s,
                     const Eigen::MatrixXd& sigma) {
    check_shapes(s, w);
    const auto st = evaluate_model(p, w, s.entries, sigma);
    return st.trace_term + st.log_det;
}

Eigen::VectorXd nll_gradient(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                             const SignatureMatrix& s, const Eigen::MatrixXd& sigma) {
    check_shapes(s, w);
    return evaluate_model(p, w, s.entries, sigma).residual;
}

Eigen::MatrixXd nll_jacobian(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                             const SignatureMatrix& s, const Eigen::MatrixXd& sigma) {
    check_shapes(s, w);
    const auto st = evaluate_model(p, w, s.entries, sigma);
    return st.g.cwiseProduct(2.0 * st.f - st.g);
}

PowerEstimate ml_estimate(const SignatureMatrix& s, const Eigen::MatrixXd& w,
                          const Eigen::MatrixXd& sigma, const MlOptions& opts) {
    check_shapes(s, w);
    if (!estimability(s, true).estimable)
        throw NotIdentifiable("rank of the full row-product matrix is below n");

    const int n = s.users();
    Eigen::VectorXd p;
    if (opts.init.size() == n) {
        p = opts.init.cwiseMax(0.0);
    } else {
        try {
            p = subopt_known_noise(s, w, sigma).p_hat;
        } catch (const Error&) {
            p = Eigen::VectorXd::Ones(n);
        }
    }

    PowerEstimate est;
    est.method = Method::Ml;
    auto st = evaluate_model(p, w, s.entries, sigma);
    double res_norm = st.residual.lpNorm<Eigen::Infinity>();
    int it = 0;
    for (; it < opts.max_iter && res_norm > opts.tol; ++it) {
        const Eigen::MatrixXd jac = st.g.cwiseProduct(2.0 * st.f - st.g);
        const Eigen::VectorXd step =
            jac.colPivHouseholderQr().solve(-st.residual);

        double lambda = 1.0;
        Eigen::VectorXd p_next;
        ModelState st_next;
        bool improved = false;
        for (int h = 0; h < opts.max_halvings; ++h) {
            p_next = (p + lambda * step).cwiseMax(0.0);
            try {
                st_next = evaluate_model(p_next, w, s.entries, sigma);
            } catch (const SingularModel&) {
                lambda *= 0.5;
                continue;
            }
            if (st_next.residual.lpNorm<Eigen::Infinity>() < res_norm) {
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;  // stalled; report best iterate
        p = p_next;
        st = st_next;
        res_norm = st.residual.lpNorm<Eigen::Infinity>();
    }

    est.p_hat = p;
    est.iterations = it;
    est.residual = res_norm;
    est.converged = res_norm <= opts.tol;
    return est;
}

PowerEstimate subopt_known_noise(const SignatureMatrix& s, const Eigen::MatrixXd& w,
                                 const Eigen::MatrixXd& sigma) {
    check_shapes(s, w);
    const auto report = estimability(s, true);
    if (!report.estimable)
        throw NotIdentifiable("rank of the full row-product matrix is below n");

    const auto rp = row_product(s, RowProductKind::Full);
    const Eigen::MatrixXd diff = w - sigma;
    Eigen::VectorXd k(rp.entries.rows());
    for (std::size_t r = 0; r < rp.row_pairs.size(); ++r)
        k(static_cast<Eigen::Index>(r)) = diff(rp.row_pairs[r].first, rp.row_pairs[r].second);
    return least_squares_powers(rp.entries, k, Method::SuboptKnown);
}

PowerEstimate subopt_unknown_noise(const SignatureMatrix& s, const Eigen::MatrixXd& w) {
    check_shapes(s, w);
    const auto report = estimability(s, false);
    if (!report.estimable)
        throw NotIdentifiable("rank of the off-diagonal row-product matrix is below n");

    const auto rp = row_product(s, RowProductKind::OffDiag);
    Eigen::VectorXd k(rp.entries.rows());
    for (std::size_t r = 0; r < rp.row_pairs.size(); ++r)
        k(static_cast<Eigen::Index>(r)) = w(rp.row_pairs[r].first, rp.row_pairs[r].second);
    return least_squares_powers(rp.entries, k, Method::SuboptUnknown);
}

PowerEstimate iterative_binary(const SignatureMatrix& s, const Eigen::MatrixXd& ys,
                               const PartitionedSignature& part, const Eigen::VectorXd& init,
                               int n_iter) {
    const int m = s.chips();
    const int n = s.users();
    const long count = ys.cols();
    if (ys.rows() != m) throw DimensionMismatch("received vectors have wrong length");
    if (count * m < n) throw RankDeficientStack("L*m < n: stacked system cannot have rank n");
    if (init.size() != n) throw DimensionMismatch("init powers have wrong length");

    Eigen::VectorXd stacked_rhs(count * m);
    for (long j = 0; j < count; ++j) stacked_rhs.segment(j * m, m) = ys.col(j);

    PowerEstimate est;
    est.method = Method::Iterative;
    Eigen::VectorXd p = init.cwiseMax(0.0);
    Eigen::MatrixXd stacked(count * m, n);
    for (int iter = 0; iter < n_iter; ++iter) {
        const Eigen::VectorXd amps = p.cwiseSqrt();
        for (long j = 0; j < count; ++j) {
            const Eigen::VectorXd x_hat = decode(ys.col(j), part, amps);
            stacked.middleRows(j * m, m) = s.entries * x_hat.asDiagonal();
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(stacked);
        if (cod.rank() < n)
            throw RankDeficientStack("stacked decoded-signature matrix has rank " +
                                     std::to_string(cod.rank()) + " < n");
        const Eigen::VectorXd amp_sol = cod.solve(stacked_rhs);
        // negative amplitude == flipped decoded bits; fold by absolute value
        p = amp_sol.cwiseAbs().cwiseProduct(amp_sol.cwiseAbs());
        est.residual = (stacked * amp_sol - stacked_rhs).norm();
        est.history.push_back(p);
    }
    est.p_hat = p;
    est.iterations = n_iter;
    est.converged = true;
    return est;
}

}  // namespace cdma
