// Acceptance gate: one line per criterion, exit code = number of failures.
#include <Eigen/Dense>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "cdma/channel.hpp"
#include "cdma/decoder.hpp"
#include "cdma/errors.hpp"
#include "cdma/estimators.hpp"
#include "cdma/experiments.hpp"
#include "cdma/signatures.hpp"

using namespace cdma;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail << '\n';
    std::cout.flush();
    if (!ok) ++g_failures;
}

SignatureMatrix random_unit_columns(int m, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::MatrixXd a(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) a(i, j) = uni(rng);
    return normalize_columns(SignatureMatrix{a});
}

Eigen::VectorXd uniform_powers(int n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) p(i) = uni(rng);
    return p;
}

Eigen::MatrixXd model_cov(const SignatureMatrix& s, const Eigen::VectorXd& p,
                          const Eigen::MatrixXd& sigma) {
    return s.entries * p.asDiagonal() * s.entries.transpose() + sigma;
}

// --- criterion 1: construction ranks, timed ------------------------------

void criterion1() {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    for (int m = 2; m <= 8; ++m) {
        const int n_full = m * (m + 1) / 2;
        const int n_off = m * (m - 1) / 2;
        ok = ok && estimability(construct_known_noise(m, n_full), true).rank == n_full;
        if (n_off > 0)
            ok = ok && estimability(construct_unknown_noise(m, n_off), false).rank == n_off;
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ok = ok && sec < 1.0;
    report(1, ok, "construction ranks m=2..8 incl. 8x36 / 8x28, runtime " +
                      std::to_string(sec) + " s");
}

// --- criterion 2: theorem-5 spectrum --------------------------------------

void criterion2() {
    bool ok = true;
    double worst = 0.0;
    for (int m = 2; m <= 8; ++m) {
        const auto s = construct_unknown_noise(m, m * (m - 1) / 2);
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            row_product(s, RowProductKind::OffDiag).entries);
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            worst = std::max(worst, std::abs(svd.singularValues()(i) - 0.5));
    }
    ok = worst < 1e-12;
    report(2, ok, "off-diagonal singular values all 0.5, max deviation " + std::to_string(worst));
}

// --- criterion 3: non-identifiability witness ------------------------------

void criterion3() {
    const auto s = random_unit_columns(2, 4, 77);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(row_product(s, RowProductKind::Full).entries);
    const Eigen::MatrixXd null_space = lu.kernel();
    bool ok = null_space.cols() >= 1;
    if (ok) {
        const Eigen::VectorXd b = null_space.col(0);
        ok = b.norm() > 0 &&
             (s.entries * b.asDiagonal() * s.entries.transpose()).cwiseAbs().maxCoeff() < 1e-12;
        const Eigen::VectorXd p = Eigen::VectorXd::Ones(4);
        const Eigen::MatrixXd sigma = 0.1 * Eigen::MatrixXd::Identity(2, 2);
        const Eigen::MatrixXd w = model_cov(s, p, sigma);
        const double eps = 0.1 / b.lpNorm<Eigen::Infinity>();
        const double f0 = nll_objective(p, w, s, sigma);
        const double f1 = nll_objective(p + eps * b, w, s, sigma);
        ok = ok && std::abs(f1 - f0) <= 1e-12 * std::abs(f0);
    }
    report(3, ok, "m=2 n=4 diagonal null direction leaves the likelihood unchanged");
}

// --- criterion 4: derivative checks ----------------------------------------

void criterion4() {
    bool ok = true;
    double worst_g = 0, worst_j = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = random_unit_columns(4, 6, 300 + seed);
        const Eigen::VectorXd p = uniform_powers(6, 0.5, 2.0, seed);
        const Eigen::VectorXd q = uniform_powers(6, 0.5, 2.0, seed + 40);
        const Eigen::MatrixXd sigma = 0.3 * Eigen::MatrixXd::Identity(4, 4);
        const Eigen::MatrixXd w = model_cov(s, q, sigma);

        const double h = 1e-5;
        Eigen::VectorXd g_fd(6);
        Eigen::MatrixXd j_fd(6, 6);
        for (int i = 0; i < 6; ++i) {
            Eigen::VectorXd lo = p, hi = p;
            lo(i) -= h;
            hi(i) += h;
            g_fd(i) = (nll_objective(hi, w, s, sigma) - nll_objective(lo, w, s, sigma)) / (2 * h);
            j_fd.col(i) = (nll_gradient(hi, w, s, sigma) - nll_gradient(lo, w, s, sigma)) / (2 * h);
        }
        const Eigen::VectorXd g = nll_gradient(p, w, s, sigma);
        const Eigen::MatrixXd j = nll_jacobian(p, w, s, sigma);
        worst_g = std::max(worst_g, (g - g_fd).norm() / g.norm());
        worst_j = std::max(worst_j, (j - j_fd).norm() / j.norm());
    }
    ok = worst_g < 1e-6 && worst_j < 1e-5;
    report(4, ok, "gradient rel err " + std::to_string(worst_g) + ", jacobian rel err " +
                      std::to_string(worst_j) + " over 20 random 4x6 instances");
}

// --- criterion 5: exact-covariance fixed points -----------------------------

void criterion5() {
    bool ok = true;
    double worst = 0;
    const std::vector<std::pair<int, int>> known_sizes = {{2, 3}, {4, 10}, {8, 36}};
    for (const auto& [m, n] : known_sizes) {
        const auto s = construct_known_noise(m, n);
        const Eigen::VectorXd p = uniform_powers(n, 0.5, 2.5, 11 + n);
        const Eigen::MatrixXd sigma = 0.3 * Eigen::MatrixXd::Identity(m, m);
        const Eigen::MatrixXd w = model_cov(s, p, sigma);
        const auto ml = ml_estimate(s, w, sigma);
        const auto sub = subopt_known_noise(s, w, sigma);
        worst = std::max(worst, (ml.p_hat - p).lpNorm<Eigen::Infinity>());
        worst = std::max(worst, (sub.p_hat - p).lpNorm<Eigen::Infinity>());
        ok = ok && ml.converged;
    }
    const std::vector<std::pair<int, int>> unknown_sizes = {{3, 3}, {8, 28}};
    for (const auto& [m, n] : unknown_sizes) {
        const auto s = construct_unknown_noise(m, n);
        const Eigen::VectorXd p = uniform_powers(n, 0.5, 2.5, 90 + n);
        const Eigen::MatrixXd w = model_cov(s, p, 0.7 * Eigen::MatrixXd::Identity(m, m));
        worst = std::max(worst, (subopt_unknown_noise(s, w).p_hat - p).lpNorm<Eigen::Infinity>());
    }
    ok = ok && worst < 1e-8;
    report(5, ok, "exact-covariance recovery up to 8x36 / 8x28, worst error " +
                      std::to_string(worst));
}

// --- criteria 6 + 7: sampled-covariance consistency and ML/subopt agreement --

void criteria6_7() {
    const auto s = binary_wbe(8, 12);
    const int n = 12;
    const int n_seeds = 20;
    int hits6 = 0, hits7 = 0;
    for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
        const Eigen::VectorXd p = uniform_powers(n, 0.8, 1.2, seed);
        const NoiseModel noise = ebno_to_noise(16.0, s, p);
        const auto sim = simulate(s, PowerTrajectory::constant_powers(p), InputDist::Gaussian,
                                  noise, 20000, mix_seed(seed, 0xACC6));
        const auto ml = ml_estimate(s, sim.batch.w, noise.covariance);
        const auto sub = subopt_known_noise(s, sim.batch.w, noise.covariance);
        const double worst_rel = ((ml.p_hat - p).cwiseAbs().array() / p.array()).maxCoeff();
        if (ml.converged && worst_rel < 0.05) ++hits6;
        if ((ml.p_hat - sub.p_hat).lpNorm<Eigen::Infinity>() < 0.02 * p.mean()) ++hits7;
    }

    // 6 dB side: errors larger at matched L, still decreasing in L. The
    // input self-noise dominates at this overload, so the thermal-noise
    // effect is a few percent; paired noise streams and many seeds keep the
    // comparison statistically solid.
    const int n_seeds_6db = 60;
    double err16_l2 = 0, err6_l2 = 0, err6_s = 0;
    for (std::uint64_t seed = 1; seed <= n_seeds_6db; ++seed) {
        const Eigen::VectorXd p = uniform_powers(n, 0.8, 1.2, seed);
        auto mean_rel = [&](double db, long count, std::uint64_t stream) {
            const NoiseModel noise = ebno_to_noise(db, s, p);
            const auto sim = simulate(s, PowerTrajectory::constant_powers(p),
                                      InputDist::Gaussian, noise, count, mix_seed(seed, stream));
            const auto ml = ml_estimate(s, sim.batch.w, noise.covariance);
            return ((ml.p_hat - p).cwiseAbs().array() / p.array()).mean();
        };
        err16_l2 += mean_rel(16.0, 20000, 0xACC6);
        err6_l2 += mean_rel(6.0, 20000, 0xACC6);
        err6_s += mean_rel(6.0, 2000, 0xACC7);
    }
    err16_l2 /= n_seeds_6db;
    err6_l2 /= n_seeds_6db;
    err6_s /= n_seeds_6db;

    const bool ok6 = hits6 >= 18 && err6_l2 > err16_l2 && err6_l2 < err6_s;
    report(6, ok6,
           "8x12 WBE, 16 dB, L=20000: all-users-within-5% in " + std::to_string(hits6) +
               "/20 trials; 6 dB mean rel err " + std::to_string(err6_l2) + " (L=20000) vs " +
               std::to_string(err6_s) + " (L=2000) vs " + std::to_string(err16_l2) + " (16 dB)");
    report(7, hits7 >= 18,
           "||p_ml - p_subopt||_inf < 2% of power scale in " + std::to_string(hits7) +
               "/20 trials");
}

// --- criterion 8: iterative exact recovery -----------------------------------

void criterion8(const SignatureMatrix& s, const PartitionedSignature& part) {
    const int n = s.users();
    auto run_eta = [&](double eta, std::uint64_t base) {
        int hits = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const Eigen::VectorXd p = uniform_powers(n, 1.0 - eta, 1.0 + eta, base + seed);
            const auto x = gen_inputs(InputDist::Binary, n, 60, base + 100 + seed);
            const Eigen::MatrixXd ys = s.entries * p.cwiseSqrt().asDiagonal() * x;
            const auto est = iterative_binary(s, ys, part, Eigen::VectorXd::Ones(n), 4);
            if ((est.p_hat - p).lpNorm<Eigen::Infinity>() < 1e-9) ++hits;
        }
        return hits;
    };
    const int hits_02 = run_eta(0.2, 500);
    const int hits_05 = run_eta(0.5, 900);
    report(8, hits_02 == 20 && hits_05 >= 18,
           "noiseless 8x13, L=60, 4 iterations: eta=0.2 " + std::to_string(hits_02) +
               "/20 exact, eta=0.5 " + std::to_string(hits_05) + "/20 exact");
}

// --- criterion 9: iterative noisy performance --------------------------------

void criterion9(const SignatureMatrix& s, const PartitionedSignature& part) {
    const int n = s.users();
    auto mean_err = [&](double db) {
        double acc = 0;
        const int n_seeds = 20;
        for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> g(25.0, 10.0);
            Eigen::VectorXd p(n);
            for (int u = 0; u < n; ++u) p(u) = std::max(0.0, g(rng));
            const NoiseModel noise = ebno_to_noise(db, s, p);
            const auto sim = simulate(s, PowerTrajectory::constant_powers(p), InputDist::Binary,
                                      noise, 30, mix_seed(seed, 0xACC9));
            const auto est =
                iterative_binary(s, sim.batch.ys, part, Eigen::VectorXd::Ones(n), 4);
            // error measured against the power scale of the scenario
            acc += (est.p_hat - p).cwiseAbs().mean() / p.mean();
        }
        return acc / n_seeds;
    };
    const double e6 = mean_err(6.0);
    const double e16 = mean_err(16.0);
    report(9, e16 < e6 && e6 < 0.15 && e16 < 0.15,
           "Gaussian(25,10) powers, L=30: mean rel err " + std::to_string(e16) +
               " at 16 dB vs " + std::to_string(e6) + " at 6 dB");
}

// --- criterion 10: tracking --------------------------------------------------

void criterion10(const SignatureMatrix& s13) {
    // (a) stepwise doubling, forgetting tracker alpha = 0.95
    const auto s = binary_wbe(8, 12);
    const int n = 12;
    bool ok_a = true;
    long worst_hit = 0;
    for (std::uint64_t seed = 1; seed <= 3 && ok_a; ++seed) {
        const Eigen::VectorXd p0 = uniform_powers(n, 0.75, 1.25, seed);
        const NoiseModel noise = ebno_to_noise(16.0, s, p0);
        const auto pre = simulate(s, PowerTrajectory::constant_powers(p0), InputDist::Gaussian,
                                  noise, 2000, mix_seed(seed, 0xA10));
        const Eigen::VectorXd p1 = 2.0 * p0;
        const auto post = simulate(s, PowerTrajectory::constant_powers(p1), InputDist::Gaussian,
                                   noise, 400, mix_seed(seed, 0xA11));
        CovarianceTracker cov(noise.mean, 0.95);
        for (long t = 0; t < 2000; ++t) cov.add(pre.batch.ys.col(t));
        std::vector<long> first_hit(n, -1);
        for (long t = 0; t < 400; ++t) {
            cov.add(post.batch.ys.col(t));
            const auto est = subopt_known_noise(s, cov.value(), noise.covariance);
            for (int u = 0; u < n; ++u)
                if (first_hit[u] < 0 && std::abs(est.p_hat(u) - p1(u)) <= 0.05 * p1(u))
                    first_hit[u] = t + 1;
        }
        for (int u = 0; u < n; ++u) {
            if (first_hit[u] < 0 || first_hit[u] > 300) ok_a = false;
            worst_hit = std::max(worst_hit, first_hit[u]);
        }
    }

    // (b) iterative vs subopt time-averaged error on matched sinusoidal data
    const json cfg{
        {"matrix", {{"kind", "ud_search"}, {"m", 8}, {"n", 13}, {"seed", 12345}, {"tries", 2000}}},
        {"seeds", {1}},
        {"trajectory", {{"kind", "sinusoidal"}, {"low", 0.5}, {"high", 1.5}, {"period", 2000}}},
        {"ebn0_db", 6.0},
        {"n_samples", 3000L},
        {"alpha", 0.95},
        {"window", 40},
        {"iterations", 4},
        {"record_stride", 5L}};
    const auto table = run_tracking(cfg);
    double sub_acc = 0, iter_acc = 0;
    long sub_n = 0, iter_n = 0;
    for (const auto& row : table.rows) {
        if (row.at("sample").get<long>() < 100) continue;  // both trackers warmed up
        const double e = row.at("error_vs_scale").get<double>();
        if (row.at("tracker") == "subopt") {
            sub_acc += e;
            ++sub_n;
        } else {
            iter_acc += e;
            ++iter_n;
        }
    }
    const double sub_err = sub_acc / static_cast<double>(sub_n);
    const double iter_err = iter_acc / static_cast<double>(iter_n);
    const bool ok_b = iter_err < sub_err;

    (void)s13;
    report(10, ok_a && ok_b,
           "stepwise doubling within 5% by sample " + std::to_string(worst_hit) +
               " (limit 300); sinusoidal 6 dB time-averaged error: iterative " +
               std::to_string(iter_err) + " vs subopt " + std::to_string(sub_err));
}

// --- criterion 11: BER ordering and estimator floor ---------------------------

void criterion11() {
    const json matrix{{"kind", "ud_search"}, {"m", 8}, {"n", 13}, {"seed", 12345}, {"tries", 2000}};
    const json cfg{{"matrix", matrix},
                   {"trajectory",
                    {{"kind", "sinusoidal"}, {"low", 0.3}, {"high", 1.7}, {"period", 5000}}},
                   {"ebn0_db", {2.0, 4.0, 6.0, 8.0}},
                   {"modes", {"perfect", "iterative", "subopt", "none"}},
                   {"min_bits", 100000L},
                   {"alpha", 0.98},
                   {"window", 40},
                   {"iterations", 4},
                   {"warmup", 500L},
                   {"seed", 3L}};
    const auto table = run_ber(cfg);

    auto cell = [&](const ResultTable& t, const std::string& mode, double db) {
        for (const auto& row : t.rows)
            if (row.at("mode") == mode && row.at("ebn0_db").get<double>() == db)
                return std::pair<double, double>(row.at("ber").get<double>(),
                                                 row.at("se").get<double>());
        throw std::runtime_error("missing BER cell");
    };

    bool ordered = true;
    std::string order_note;
    for (const double db : {2.0, 4.0, 6.0, 8.0}) {
        const auto [b_p, s_p] = cell(table, "perfect", db);
        const auto [b_i, s_i] = cell(table, "iterative", db);
        const auto [b_s, s_s] = cell(table, "subopt", db);
        const auto [b_n, s_n] = cell(table, "none", db);
        const bool here = b_p <= b_i + 1.96 * (s_p + s_i) &&
                          b_i <= b_s + 1.96 * (s_i + s_s) &&
                          b_n + 1.96 * (s_s + s_n) >= b_s;
        ordered = ordered && here;
        order_note += " " + std::to_string(db) + "dB[" + std::to_string(b_p) + "/" +
                      std::to_string(b_i) + "/" + std::to_string(b_s) + "/" +
                      std::to_string(b_n) + "]";
    }

    // floor: under abrupt power steps the estimators lag after every jump, so
    // their BER flattens at high SNR while perfect knowledge keeps dropping
    json floor_cfg = cfg;
    floor_cfg["trajectory"] = {{"kind", "stepwise"}, {"low", 0.5}, {"high", 1.5},
                               {"segment_length", 100}};
    floor_cfg["ebn0_db"] = {16.0, 24.0};
    floor_cfg["modes"] = {"perfect", "subopt", "iterative"};
    floor_cfg["alpha"] = 0.95;
    const auto ft = run_ber(floor_cfg);
    bool floored = cell(ft, "perfect", 24.0).first < 1e-4;
    std::string floor_note;
    for (const std::string mode : {"subopt", "iterative"}) {
        const double b16 = cell(ft, mode, 16.0).first;
        const double b24 = cell(ft, mode, 24.0).first;
        floored = floored && b24 > b16 / 3.0 && b24 > 1e-4;
        floor_note += " " + mode + " " + std::to_string(b16) + "->" + std::to_string(b24);
    }

    report(11, ordered && floored,
           "ordering perfect<=iterative<=subopt<=none at" + order_note +
               "; stepwise floor 16->24 dB:" + floor_note + " vs perfect " +
               std::to_string(cell(ft, "perfect", 24.0).first));
}

// --- criterion 12: decoder oracle equivalence ---------------------------------

void criterion12(const SignatureMatrix& s, const PartitionedSignature& part) {
    const int m = s.chips();
    const int n = s.users();
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> uni(0.8, 1.2);

    int crit_match = 0, ml_match = 0;
    const int trials = 1000;

    // scaled columns for the incremental direct-ML sweep
    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXd amps(n);
        for (int u = 0; u < n; ++u) amps(u) = uni(rng);
        Eigen::VectorXd x_true(n);
        for (int u = 0; u < n; ++u) x_true(u) = rng() & 1 ? 1.0 : -1.0;
        Eigen::VectorXd y = s.entries * amps.cwiseProduct(x_true);
        for (int i = 0; i < m; ++i) y(i) += 0.3 * g(rng);

        const Eigen::VectorXd fast = decode(y, part, amps);

        // oracle A: the block criterion over all 2^n candidates.
        // cost(x) = sum_i (x1_i * z_i(x2) - d1_i)^2 in partitioned order.
        Eigen::VectorXd d1(m), d2(n - m);
        for (int k = 0; k < m; ++k) d1(k) = amps(part.column_order[k]);
        for (int k = 0; k < n - m; ++k) d2(k) = amps(part.column_order[m + k]);
        const Eigen::VectorXd z0 = part.a_inv * y;
        const Eigen::MatrixXd c = part.a_inv * part.b * d2.asDiagonal();
        double best = 1e300;
        Eigen::VectorXd best_x(n);
        for (std::uint32_t full = 0; full < (1u << n); ++full) {
            Eigen::VectorXd x1(m), x2(n - m);
            for (int k = 0; k < m; ++k) x1(k) = (full >> k) & 1 ? 1.0 : -1.0;
            for (int k = 0; k < n - m; ++k) x2(k) = (full >> (m + k)) & 1 ? 1.0 : -1.0;
            const Eigen::VectorXd z = z0 - c * x2;
            double cost = 0;
            for (int i = 0; i < m; ++i) {
                const double diff = x1(i) * z(i) - d1(i);
                cost += diff * diff;
            }
            if (cost < best) {
                best = cost;
                for (int k = 0; k < m; ++k) best_x(part.column_order[k]) = x1(k);
                for (int k = 0; k < n - m; ++k) best_x(part.column_order[m + k]) = x2(k);
            }
        }
        if (fast.isApprox(best_x, 0.0)) ++crit_match;

        // oracle B: direct ML ||y - S diag(amps) x||, gray-code sweep over 2^n
        Eigen::VectorXd x = Eigen::VectorXd::Constant(n, -1.0);
        Eigen::VectorXd y_model = s.entries * amps.cwiseProduct(x);
        double best_ml = (y - y_model).squaredNorm();
        Eigen::VectorXd best_ml_x = x;
        std::uint32_t gray = 0;
        for (std::uint32_t i = 1; i < (1u << n); ++i) {
            const std::uint32_t next = i ^ (i >> 1);
            const int bit = static_cast<int>(std::countr_zero(gray ^ next));
            gray = next;
            x(bit) = -x(bit);
            y_model += 2.0 * x(bit) * amps(bit) * s.entries.col(bit);
            const double cost = (y - y_model).squaredNorm();
            if (cost < best_ml) {
                best_ml = cost;
                best_ml_x = x;
            }
        }
        if (fast.isApprox(best_ml_x, 0.0)) ++ml_match;
    }

    report(12, crit_match == trials,
           "block-criterion oracle match " + std::to_string(crit_match) + "/1000; direct-ML "
           "agreement rate " + std::to_string(static_cast<double>(ml_match) / trials) +
           " (measured, no threshold)");
}

}  // namespace

int main() {
    try {
        criterion1();
        criterion2();
        criterion3();
        criterion4();
        criterion5();
        criteria6_7();
        const auto s13 = find_uniquely_decodable(8, 13, 12345, 2000);
        const auto part13 = partition(s13);
        criterion8(s13, part13);
        criterion9(s13, part13);
        criterion10(s13);
        criterion11();
        criterion12(s13, part13);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance run aborted: " << e.what() << '\n';
        return 99;
    }
    std::cout << (g_failures == 0 ? "all criteria passed" : "failures: ") <<
        (g_failures == 0 ? "" : std::to_string(g_failures)) << '\n';
    return g_failures;
}
