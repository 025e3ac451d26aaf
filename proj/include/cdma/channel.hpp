#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>

#include "cdma/signatures.hpp"

namespace cdma {

enum class InputDist { Gaussian, Binary };

// Per-user received-power profile over time. Random kinds (stepwise,
// gaussian) are random-access deterministic: the value at sample t depends
// only on (trajectory, seed, t).
struct PowerTrajectory {
    enum class Kind { Constant, Sinusoidal, Stepwise, Gaussian };

    Kind kind = Kind::Constant;
    int n = 0;
    Eigen::VectorXd constant;            // Constant
    double low = 0.0, high = 0.0;        // Sinusoidal / Stepwise bounds
    long period = 0;                     // Sinusoidal, in samples
    Eigen::VectorXd phase;               // Sinusoidal per-user phase, empty = all 0
    long segment_length = 0;             // Stepwise
    double mean = 0.0, stddev = 0.0;     // Gaussian, truncated at 0

    static PowerTrajectory constant_powers(Eigen::VectorXd p);
    static PowerTrajectory sinusoidal(int n, double low, double high, long period,
                                      Eigen::VectorXd phase = {});
    static PowerTrajectory stepwise(int n, double low, double high, long segment_length);
    static PowerTrajectory gaussian(int n, double mean, double stddev);

    // JSON object, e.g. {"kind":"sinusoidal","low":0.5,"high":1.5,"period":20000}
    static PowerTrajectory from_json_text(const std::string& text, int n);

    Eigen::VectorXd at(long t, std::uint64_t seed) const;
};

struct NoiseModel {
    Eigen::VectorXd mean;          // m
    Eigen::MatrixXd covariance;    // m x m, symmetric positive definite
    bool known_at_receiver = true;
};

// White noise with variance sigma^2 = mean(nominal_powers) / (2 * 10^(dB/10)),
// zero mean; the Eb/N0 convention used throughout (unit-norm signatures,
// one bit per symbol).
NoiseModel ebno_to_noise(double ebn0_db, const SignatureMatrix& s,
                         const Eigen::VectorXd& nominal_powers);

struct ObservationBatch {
    Eigen::MatrixXd ys;   // m x L, one received vector per column
    long count = 0;       // L
    Eigen::MatrixXd w;    // empirical covariance
    double alpha = 1.0;   // forgetting factor used for w
};

struct SimulationResult {
    ObservationBatch batch;
    Eigen::MatrixXd true_powers;  // n x L
    Eigen::MatrixXd inputs;       // n x L
};

// n x L matrix of i.i.d. inputs; deterministic for a fixed seed.
Eigen::MatrixXd gen_inputs(InputDist dist, int n, long count, std::uint64_t seed);

// Y_t = S * diag(sqrt(P_t)) * X_t + N_t, with W accumulated at alpha = 1.
SimulationResult simulate(const SignatureMatrix& s, const PowerTrajectory& trajectory,
                          InputDist dist, const NoiseModel& noise, long count,
                          std::uint64_t seed);

// Batch forgetting-factor covariance: W = c * sum_j alpha^(L-j) (Y_j-mu)(Y_j-mu)^T
// with c = (1-alpha)/(1-alpha^L) for alpha < 1 and c = 1/L for alpha = 1.
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& ys, const Eigen::VectorXd& mu,
                                     double alpha);

// Streaming form of the same estimate; agrees with the batch formula to 1e-10.
class CovarianceTracker {
  public:
    CovarianceTracker(Eigen::VectorXd mu, double alpha);

    void add(const Eigen::VectorXd& y);
    long count() const { return count_; }
    Eigen::MatrixXd value() const;

  private:
    Eigen::VectorXd mu_;
    double alpha_;
    Eigen::MatrixXd accum_;
    double weight_sum_ = 0.0;
    long count_ = 0;
};

// Cholesky-based sampler for N(mean, covariance).
class NoiseSampler {
  public:
    explicit NoiseSampler(const NoiseModel& model);
    Eigen::VectorXd draw(std::mt19937_64& rng) const;

  private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd chol_;
};

// stream-splitting helper so simulation sub-streams stay independent
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cdma
