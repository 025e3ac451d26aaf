#include "cdma/channel.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <random>

#include "cdma/errors.hpp"
#include "cdma/kernels.hpp"

#include "json.hpp"

namespace cdma {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

PowerTrajectory PowerTrajectory::constant_powers(Eigen::VectorXd p) {
    PowerTrajectory t;
    t.kind = Kind::Constant;
    t.n = static_cast<int>(p.size());
    t.constant = std::move(p);
    return t;
}

PowerTrajectory PowerTrajectory::sinusoidal(int n, double low, double high, long period,
                                            Eigen::VectorXd phase) {
    PowerTrajectory t;
    t.kind = Kind::Sinusoidal;
    t.n = n;
    t.low = low;
    t.high = high;
    t.period = period;
    t.phase = std::move(phase);
    return t;
}

PowerTrajectory PowerTrajectory::stepwise(int n, double low, double high, long segment_length) {
    PowerTrajectory t;
    t.kind = Kind::Stepwise;
    t.n = n;
    t.low = low;
    t.high = high;
    t.segment_length = segment_length;
    return t;
}

PowerTrajectory PowerTrajectory::gaussian(int n, double mean, double stddev) {
    PowerTrajectory t;
    t.kind = Kind::Gaussian;
    t.n = n;
    t.mean = mean;
    t.stddev = stddev;
    return t;
}

PowerTrajectory PowerTrajectory::from_json_text(const std::string& text, int n) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind"))
        throw ConfigError("trajectory config must be a JSON object with a 'kind' field");
    const std::string kind = j.at("kind");
    try {
        if (kind == "constant") {
            if (j.contains("powers")) {
                const auto v = j.at("powers").get<std::vector<double>>();
                if (static_cast<int>(v.size()) != n)
                    throw ConfigError("constant trajectory: powers length != n");
                return constant_powers(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
            }
            return constant_powers(Eigen::VectorXd::Constant(n, j.value("power", 1.0)));
        }
        if (kind == "sinusoidal")
            return sinusoidal(n, j.at("low"), j.at("high"), j.at("period"));
        if (kind == "stepwise")
            return stepwise(n, j.at("low"), j.at("high"), j.at("segment_length"));
        if (kind == "gaussian")
            return gaussian(n, j.at("mean"), j.at("stddev"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("trajectory config: ") + e.what());
    }
    throw ConfigError("unknown trajectory kind: " + kind);
}

Eigen::VectorXd PowerTrajectory::at(long t, std::uint64_t seed) const {
    switch (kind) {
        case Kind::Constant:
            return constant;
        case Kind::Sinusoidal: {
            Eigen::VectorXd p(n);
            const double mid = 0.5 * (low + high);
            const double amp = 0.5 * (high - low);
            for (int u = 0; u < n; ++u) {
                const double ph = phase.size() ? phase(u) : 0.0;
                p(u) = mid + amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                                static_cast<double>(period) +
                                            ph);
            }
            return p;
        }
        case Kind::Stepwise: {
            const long segment = t / segment_length;
            std::mt19937_64 rng(mix_seed(seed, 0x5745ULL + static_cast<std::uint64_t>(segment)));
            std::uniform_real_distribution<double> uni(low, high);
            Eigen::VectorXd p(n);
            for (int u = 0; u < n; ++u) p(u) = uni(rng);
            return p;
        }
        case Kind::Gaussian: {
            std::mt19937_64 rng(mix_seed(seed, 0x6761ULL + static_cast<std::uint64_t>(t)));
            std::normal_distribution<double> gauss(mean, stddev);
            Eigen::VectorXd p(n);
            for (int u = 0; u < n; ++u) p(u) = std::max(0.0, gauss(rng));
            return p;
        }
    }
    throw ConfigError("invalid trajectory kind");
}

NoiseModel ebno_to_noise(double ebn0_db, const SignatureMatrix& s,
                         const Eigen::VectorXd& nominal_powers) {
    if (!std::isfinite(ebn0_db)) throw ConfigError("Eb/N0 must be finite");
    const int m = s.chips();
    const double sigma2 = nominal_powers.mean() / (2.0 * std::pow(10.0, ebn0_db / 10.0));
    NoiseModel model;
    model.mean = Eigen::VectorXd::Zero(m);
    model.covariance = sigma2 * Eigen::MatrixXd::Identity(m, m);
    model.known_at_receiver = true;
    return model;
}

Eigen::MatrixXd gen_inputs(InputDist dist, int n, long count, std::uint64_t seed) {
    if (n < 1 || count < 1) throw DimensionMismatch("gen_inputs requires n, L >= 1");
    std::mt19937_64 rng(mix_seed(seed, 1));
    Eigen::MatrixXd x(n, count);
    if (dist == InputDist::Gaussian) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (long j = 0; j < count; ++j)
            for (int i = 0; i < n; ++i) x(i, j) = gauss(rng);
    } else {
        std::bernoulli_distribution coin(0.5);
        for (long j = 0; j < count; ++j)
            for (int i = 0; i < n; ++i) x(i, j) = coin(rng) ? 1.0 : -1.0;
    }
    return x;
}

NoiseSampler::NoiseSampler(const NoiseModel& model) : mean_(model.mean) {
    const Eigen::MatrixXd& sigma = model.covariance;
    if (sigma.rows() != sigma.cols()) throw DimensionMismatch("noise covariance must be square");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw DimensionMismatch("noise covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw SingularModel("noise covariance is not positive definite");
    chol_ = llt.matrixL();
}

Eigen::VectorXd NoiseSampler::draw(std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    return mean_ + chol_ * z;
}

SimulationResult simulate(const SignatureMatrix& s, const PowerTrajectory& trajectory,
                          InputDist dist, const NoiseModel& noise, long count,
                          std::uint64_t seed) {
    const int m = s.chips();
    const int n = s.users();
    if (trajectory.n != n) throw DimensionMismatch("trajectory user count != signature columns");
    if (noise.covariance.rows() != m) throw DimensionMismatch("noise covariance is not m x m");

    const std::uint64_t traj_seed = mix_seed(seed, 2);
    std::mt19937_64 noise_rng(mix_seed(seed, 3));
    const NoiseSampler sampler(noise);

    SimulationResult res;
    res.inputs = gen_inputs(dist, n, count, seed);
    res.true_powers.resize(n, count);
    res.batch.ys.resize(m, count);
    res.batch.count = count;
    res.batch.alpha = 1.0;

    for (long t = 0; t < count; ++t) {
        const Eigen::VectorXd p = trajectory.at(t, traj_seed);
        res.true_powers.col(t) = p;
        res.batch.ys.col(t) =
            s.entries * (p.cwiseSqrt().cwiseProduct(res.inputs.col(t))) + sampler.draw(noise_rng);
    }
    res.batch.w = empirical_covariance(res.batch.ys, noise.mean, 1.0);
    return res;
}

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& ys, const Eigen::VectorXd& mu,
                                     double alpha) {
    const long count = ys.cols();
    if (count < 1) throw EmptyBatch("empirical_covariance needs at least one sample");
    if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("alpha must be in (0, 1]");
    CovarianceTracker tracker(mu, alpha);
    for (long j = 0; j < count; ++j) tracker.add(ys.col(j));
    return tracker.value();
}

CovarianceTracker::CovarianceTracker(Eigen::VectorXd mu, double alpha)
    : mu_(std::move(mu)), alpha_(alpha) {
    if (alpha_ <= 0.0 || alpha_ > 1.0) throw ConfigError("alpha must be in (0, 1]");
    const auto m = mu_.size();
    accum_ = Eigen::MatrixXd::Zero(m, m);
}

void CovarianceTracker::add(const Eigen::VectorXd& y) {
    if (y.size() != mu_.size()) throw DimensionMismatch("sample dimension != mean dimension");
    const Eigen::VectorXd centered = y - mu_;
    accum_ *= alpha_;
    weight_sum_ = alpha_ * weight_sum_ + 1.0;
    kern::rank1_update(accum_.data(), centered.data(), 1.0, static_cast<std::size_t>(mu_.size()));
    ++count_;
}

Eigen::MatrixXd CovarianceTracker::value() const {
    if (count_ == 0) throw EmptyBatch("covariance tracker has no samples");
    return accum_ / weight_sum_;
}

}  // namespace cdma
