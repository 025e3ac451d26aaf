#include "cdma/experiments.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <sstream>

#include "cdma/channel.hpp"
#include "cdma/decoder.hpp"
#include "cdma/errors.hpp"
#include "cdma/estimators.hpp"
#include "cdma/signatures.hpp"

namespace cdma {

namespace {

using nlohmann::json;

SignatureMatrix matrix_from_config(const json& cfg) {
    if (!cfg.contains("matrix")) throw ConfigError("config missing 'matrix'");
    const json& mj = cfg.at("matrix");
    const std::string kind = mj.value("kind", "");
    if (kind == "file") return load_matrix(mj.at("path").get<std::string>());
    const int m = mj.value("m", 0);
    const int n = mj.value("n", 0);
    if (kind == "construct_known") return construct_known_noise(m, n);
    if (kind == "construct_unknown") return construct_unknown_noise(m, n);
    if (kind == "wbe") return binary_wbe(m, n);
    if (kind == "ud_search")
        return find_uniquely_decodable(m, n, mj.value("seed", 1ULL), mj.value("tries", 20000));
    throw ConfigError("matrix.kind must be one of file|construct_known|construct_unknown|wbe|ud_search");
}

std::vector<std::uint64_t> seeds_from_config(const json& cfg) {
    if (!cfg.contains("seeds")) throw ConfigError("config missing 'seeds'");
    auto seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
    if (seeds.empty()) throw ConfigError("'seeds' must be non-empty");
    return seeds;
}

PowerTrajectory trajectory_from_config(const json& cfg, int n) {
    if (!cfg.contains("trajectory")) throw ConfigError("config missing 'trajectory'");
    return PowerTrajectory::from_json_text(cfg.at("trajectory").dump(), n);
}

// Prefactored least-squares solver for the row-product system; the
// covariance triangle changes every sample in tracking loops, the
// factorization does not.
class RowProductSolver {
  public:
    RowProductSolver(const SignatureMatrix& s, bool noise_known)
        : rp_(row_product(s, noise_known ? RowProductKind::Full : RowProductKind::OffDiag)),
          cod_(rp_.entries),
          noise_known_(noise_known) {
        if (cod_.rank() < s.users())
            throw NotIdentifiable("row-product system is rank deficient");
    }

    Eigen::VectorXd solve(const Eigen::MatrixXd& w, const Eigen::MatrixXd& sigma) const {
        Eigen::VectorXd k(rp_.entries.rows());
        for (std::size_t r = 0; r < rp_.row_pairs.size(); ++r) {
            const auto [i, j] = rp_.row_pairs[r];
            k(static_cast<Eigen::Index>(r)) = noise_known_ ? w(i, j) - sigma(i, j) : w(i, j);
        }
        return cod_.solve(k).cwiseMax(0.0);
    }

  private:
    RowProductMatrix rp_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
    bool noise_known_;
};

Eigen::VectorXd powers_from_config(const json& cfg, int n, std::uint64_t seed) {
    if (!cfg.contains("powers")) return Eigen::VectorXd::Ones(n);
    const json& pj = cfg.at("powers");
    if (pj.contains("values")) {
        const auto v = pj.at("values").get<std::vector<double>>();
        if (static_cast<int>(v.size()) != n) throw ConfigError("powers.values length != n");
        return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    }
    if (pj.contains("uniform_low")) {
        std::mt19937_64 rng(mix_seed(seed, 0x704fULL));
        std::uniform_real_distribution<double> uni(pj.at("uniform_low").get<double>(),
                                                   pj.at("uniform_high").get<double>());
        Eigen::VectorXd p(n);
        for (int u = 0; u < n; ++u) p(u) = uni(rng);
        return p;
    }
    throw ConfigError("powers must carry 'values' or 'uniform_low'/'uniform_high'");
}

}  // namespace

void ResultTable::write_csv(std::ostream& out) const {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out << ',';
            const auto& v = row.at(columns[c]);
            if (v.is_string())
                out << v.get<std::string>();
            else
                out << v.dump();
        }
        out << '\n';
    }
}

void ResultTable::write_jsonl(std::ostream& out) const {
    for (const auto& row : rows) out << row.dump() << '\n';
}

ResultTable run_convergence(const json& cfg) {
    const SignatureMatrix s = matrix_from_config(cfg);
    const int n = s.users();
    const auto seeds = seeds_from_config(cfg);
    const auto ebn0_list = cfg.at("ebn0_db").get<std::vector<double>>();
    const auto l_grid = cfg.at("L_grid").get<std::vector<long>>();
    const auto methods = cfg.value("methods", std::vector<std::string>{"ml", "subopt_known"});
    const bool exact_cov = cfg.value("exact_covariance", false);

    ResultTable table;
    table.columns = {"scenario", "seed",       "ebn0_db",        "L",
                     "method",   "user",       "true_power",     "estimated_power",
                     "relative_error"};

    for (const std::uint64_t seed : seeds) {
        const Eigen::VectorXd p_true = powers_from_config(cfg, n, seed);
        for (const double ebn0 : ebn0_list) {
            const NoiseModel noise = ebno_to_noise(ebn0, s, p_true);
            for (std::size_t li = 0; li < l_grid.size(); ++li) {
                const long count = l_grid[li];
                Eigen::MatrixXd w;
                if (exact_cov) {
                    w = s.entries * p_true.asDiagonal() * s.entries.transpose() + noise.covariance;
                } else {
                    const auto sim =
                        simulate(s, PowerTrajectory::constant_powers(p_true), InputDist::Gaussian,
                                 noise, count, mix_seed(seed, 0xC0F + li));
                    w = sim.batch.w;
                }
                for (const std::string& method : methods) {
                    PowerEstimate est;
                    if (method == "ml")
                        est = ml_estimate(s, w, noise.covariance);
                    else if (method == "subopt_known")
                        est = subopt_known_noise(s, w, noise.covariance);
                    else if (method == "subopt_unknown")
                        est = subopt_unknown_noise(s, w);
                    else
                        throw ConfigError("unknown method: " + method);
                    for (int u = 0; u < n; ++u) {
                        table.rows.push_back(json{{"scenario", "convergence"},
                                                  {"seed", seed},
                                                  {"ebn0_db", ebn0},
                                                  {"L", count},
                                                  {"method", method},
                                                  {"user", u},
                                                  {"true_power", p_true(u)},
                                                  {"estimated_power", est.p_hat(u)},
                                                  {"relative_error",
                                                   std::abs(est.p_hat(u) - p_true(u)) /
                                                       std::max(p_true(u), 1e-300)}});
                    }
                }
            }
        }
    }
    return table;
}

ResultTable run_tracking(const json& cfg) {
    const SignatureMatrix s = matrix_from_config(cfg);
    const int n = s.users();
    const auto seeds = seeds_from_config(cfg);
    const PowerTrajectory traj = trajectory_from_config(cfg, n);
    if (traj.kind != PowerTrajectory::Kind::Sinusoidal &&
        traj.kind != PowerTrajectory::Kind::Stepwise)
        throw ConfigError("tracking requires a sinusoidal or stepwise trajectory");

    const double ebn0 = cfg.at("ebn0_db").get<double>();
    const long n_samples = cfg.at("n_samples").get<long>();
    const double alpha = cfg.value("alpha", 0.95);
    const int window = cfg.value("window", 40);
    const int iterations = cfg.value("iterations", 4);
    const long stride = cfg.value("record_stride", 1L);
    const auto trackers = cfg.value("trackers", std::vector<std::string>{"subopt", "iterative"});
    const bool noise_known = cfg.value("noise", std::string("known")) == "known";
    const std::string dist_name = cfg.value("dist", std::string("binary"));
    const InputDist dist = dist_name == "binary" ? InputDist::Binary : InputDist::Gaussian;

    const bool want_subopt =
        std::find(trackers.begin(), trackers.end(), "subopt") != trackers.end();
    const bool want_iterative =
        std::find(trackers.begin(), trackers.end(), "iterative") != trackers.end();
    if (want_iterative && dist != InputDist::Binary)
        throw ConfigError("iterative tracker requires binary inputs");

    const Eigen::VectorXd nominal =
        Eigen::VectorXd::Constant(n, 0.5 * (traj.low + traj.high));
    const NoiseModel noise = ebno_to_noise(ebn0, s, nominal);

    const RowProductSolver subopt_solver(s, noise_known);
    PartitionedSignature part;
    if (want_iterative) part = partition(s);

    ResultTable table;
    table.columns = {"scenario", "tracker", "seed",       "sample",
                     "user",     "true_power", "estimated_power", "error_vs_scale"};
    const double scale = nominal.mean();

    for (const std::uint64_t seed : seeds) {
        const auto sim = simulate(s, traj, dist, noise, n_samples, seed);
        CovarianceTracker cov(noise.mean, alpha);
        std::deque<long> window_idx;
        Eigen::VectorXd iter_est = Eigen::VectorXd::Ones(n);

        auto record = [&](const char* tracker, long t, const Eigen::VectorXd& est) {
            for (int u = 0; u < n; ++u) {
                table.rows.push_back(json{{"scenario", "tracking"},
                                          {"tracker", tracker},
                                          {"seed", seed},
                                          {"sample", t},
                                          {"user", u},
                                          {"true_power", sim.true_powers(u, t)},
                                          {"estimated_power", est(u)},
                                          {"error_vs_scale",
                                           std::abs(est(u) - sim.true_powers(u, t)) / scale}});
            }
        };

        for (long t = 0; t < n_samples; ++t) {
            const Eigen::VectorXd y = sim.batch.ys.col(t);
            if (want_subopt) {
                cov.add(y);
                if (t % stride == 0)
                    record("subopt", t, subopt_solver.solve(cov.value(), noise.covariance));
            }
            if (want_iterative) {
                window_idx.push_back(t);
                if (static_cast<int>(window_idx.size()) > window) window_idx.pop_front();
                const long w_len = static_cast<long>(window_idx.size());
                if (t % stride == 0 && w_len * s.chips() >= n) {
                    const Eigen::MatrixXd ys_win =
                        sim.batch.ys.middleCols(window_idx.front(), w_len);
                    iter_est = iterative_binary(s, ys_win, part, Eigen::VectorXd::Ones(n),
                                                iterations)
                                   .p_hat;
                    record("iterative", t, iter_est);
                }
            }
        }
    }
    return table;
}

ResultTable run_ber(const json& cfg) {
    const SignatureMatrix s = matrix_from_config(cfg);
    const int m = s.chips();
    const int n = s.users();
    const PowerTrajectory traj = trajectory_from_config(cfg, n);
    const auto ebn0_list = cfg.at("ebn0_db").get<std::vector<double>>();
    const auto modes =
        cfg.value("modes", std::vector<std::string>{"perfect", "subopt", "iterative", "none"});
    const long min_bits = cfg.value("min_bits", 100000L);
    const double alpha = cfg.value("alpha", 0.95);
    const int window = cfg.value("window", 40);
    const int iterations = cfg.value("iterations", 4);
    const long refresh = cfg.value("refresh", 5L);
    const long warmup = cfg.value("warmup", 500L);
    const std::uint64_t seed = cfg.value("seed", 1ULL);

    const long data_samples = (min_bits + n - 1) / n;
    const long total = warmup + data_samples;

    const Eigen::VectorXd nominal = Eigen::VectorXd::Constant(
        n, traj.kind == PowerTrajectory::Kind::Constant ? traj.constant.mean()
                                                        : 0.5 * (traj.low + traj.high));

    const PartitionedSignature part = partition(s);
    const RowProductSolver subopt_solver(s, true);

    ResultTable table;
    table.columns = {"scenario", "mode", "ebn0_db", "bits", "bit_errors", "ber", "se"};

    for (const double ebn0 : ebn0_list) {
        const NoiseModel noise = ebno_to_noise(ebn0, s, nominal);
        // one shared dataset per Eb/N0 point: every mode decodes the same data
        const auto sim = simulate(s, traj, InputDist::Binary, noise, total,
                                  mix_seed(seed, std::hash<double>{}(ebn0)));

        for (const std::string& mode : modes) {
            CovarianceTracker cov(noise.mean, alpha);
            Eigen::VectorXd amps = Eigen::VectorXd::Ones(n);
            long bit_errors = 0;
            long bits = 0;

            for (long t = 0; t < total; ++t) {
                const Eigen::VectorXd y = sim.batch.ys.col(t);
                if (mode == "perfect") {
                    amps = sim.true_powers.col(t).cwiseSqrt();
                } else if (mode == "subopt") {
                    cov.add(y);
                    amps = subopt_solver.solve(cov.value(), noise.covariance).cwiseSqrt();
                } else if (mode == "iterative") {
                    const long w_start = std::max(0L, t + 1 - window);
                    const long w_len = t + 1 - w_start;
                    if (w_len * m >= n && (t % refresh == 0 || t == window - 1)) {
                        const Eigen::MatrixXd ys_win = sim.batch.ys.middleCols(w_start, w_len);
                        amps = iterative_binary(s, ys_win, part, Eigen::VectorXd::Ones(n),
                                                iterations)
                                   .p_hat.cwiseSqrt();
                    }
                } else if (mode != "none") {
                    throw ConfigError("unknown mode: " + mode);
                }

                if (t < warmup) continue;
                const Eigen::VectorXd x_hat = decode(y, part, amps);
                bit_errors += ((x_hat.array() * sim.inputs.col(t).array()) < 0.0).count();
                bits += n;
            }

            const double ber = static_cast<double>(bit_errors) / static_cast<double>(bits);
            const double se = std::sqrt(std::max(ber * (1.0 - ber), 0.0) /
                                        static_cast<double>(bits));
            table.rows.push_back(json{{"scenario", "ber"},
                                      {"mode", mode},
                                      {"ebn0_db", ebn0},
                                      {"bits", bits},
                                      {"bit_errors", bit_errors},
                                      {"ber", ber},
                                      {"se", se}});
        }
    }
    return table;
}

}  // namespace cdma
