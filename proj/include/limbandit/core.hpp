#pragma once

// Shared vocabulary for the bandit simulator: problem dimensions, advice
// and loss vectors, the deterministic RNG streams, and the randomized
// rounding step that turns fractional advice into a single arm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace limbandit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed domain values: probability vectors that do not normalize,
// losses outside [0, 1], mismatched lengths.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Algorithm parameters outside their legal range (eta, c, epsilon).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Unrunnable setups: M does not divide N, missing or inconsistent files.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Slack allowed when checking that probabilities sum to 1.
inline constexpr double kProbTolerance = 1e-9;

struct ProblemDims {
    int num_experts = 0;        // N
    int num_arms = 0;           // K
    int advice_budget = 0;      // M, experts queried per round
    std::int64_t horizon = 0;   // T

    void validate() const {
        if (num_experts < 1) throw ConfigError("dims: need at least one expert");
        if (num_arms < 1) throw ConfigError("dims: need at least one arm");
        if (advice_budget < 1 || advice_budget > num_experts)
            throw ConfigError("dims: advice budget must lie in [1, num_experts]");
        if (horizon < 1) throw ConfigError("dims: horizon must be positive");
    }

    friend bool operator==(const ProblemDims&, const ProblemDims&) = default;
};

// Number of arms the sampled group can effectively point at: min{K, M}.
inline int effective_arms(const ProblemDims& dims) {
    return std::min(dims.num_arms, dims.advice_budget);
}

namespace detail {

// SplitMix64 finalizer; used to derive engine states and salted seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic random stream. Identical (seed, stream_id) pairs give
// identical draw sequences on every platform: mt19937_64 output is
// standard-specified and uniform doubles are built from its top 53 bits
// directly, bypassing library distribution objects.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id),
          engine_(derive_state(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on {0, ..., n-1}.
    int uniform_int(int n) {
        if (n < 1) throw ParameterError("uniform_int: n must be positive");
        return std::min(static_cast<int>(uniform() * n), n - 1);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t derive_state(std::uint64_t seed, std::uint64_t id) {
        return detail::splitmix64(detail::splitmix64(seed) + id);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

class LossVector;

// One expert's advice: a probability distribution over the K arms.
class AdviceVector {
public:
    explicit AdviceVector(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw ValidationError("advice: empty vector");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) throw ValidationError("advice: negative or NaN entry");
            if (p > 1.0 + kProbTolerance) throw ValidationError("advice: entry above 1");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbTolerance)
            throw ValidationError("advice: entries must sum to 1");
    }

    static AdviceVector basis(int num_arms, int arm) {
        if (num_arms < 1 || arm < 0 || arm >= num_arms)
            throw ValidationError("advice: basis arm out of range");
        std::vector<double> p(static_cast<std::size_t>(num_arms), 0.0);
        p[static_cast<std::size_t>(arm)] = 1.0;
        return AdviceVector(std::move(p));
    }

    int size() const { return static_cast<int>(probs_.size()); }
    double operator[](int a) const { return probs_[static_cast<std::size_t>(a)]; }
    const std::vector<double>& probs() const { return probs_; }

    // True only for an exact standard basis vector: one entry == 1.0,
    // the rest == 0.0. Such advice passes randomized rounding untouched.
    bool is_basis() const {
        int ones = 0;
        for (double p : probs_) {
            if (p == 1.0) ++ones;
            else if (p != 0.0) return false;
        }
        return ones == 1;
    }

    int basis_arm() const {
        if (!is_basis()) throw ValidationError("advice: basis_arm on a non-basis vector");
        for (int a = 0; a < size(); ++a)
            if (probs_[static_cast<std::size_t>(a)] == 1.0) return a;
        throw ValidationError("advice: basis_arm on a non-basis vector");  // unreachable
    }

    friend bool operator==(const AdviceVector&, const AdviceVector&) = default;

private:
    std::vector<double> probs_;
};

using AdviceMatrix = std::vector<AdviceVector>;

// Losses for one round, one entry per arm, each in [0, 1].
class LossVector {
public:
    explicit LossVector(std::vector<double> losses) : losses_(std::move(losses)) {
        if (losses_.empty()) throw ValidationError("losses: empty vector");
        for (double l : losses_) {
            if (!(l >= 0.0) || l > 1.0)
                throw ValidationError("losses: entry outside [0, 1]");
        }
    }

    int size() const { return static_cast<int>(losses_.size()); }
    double operator[](int a) const { return losses_[static_cast<std::size_t>(a)]; }
    const std::vector<double>& values() const { return losses_; }

    friend bool operator==(const LossVector&, const LossVector&) = default;

private:
    std::vector<double> losses_;
};

// Expected loss of advice under a loss vector.
inline double dot(const AdviceVector& advice, const LossVector& losses) {
    if (advice.size() != losses.size())
        throw ValidationError("dot: advice and loss lengths differ");
    double s = 0.0;
    for (int a = 0; a < advice.size(); ++a) s += advice[a] * losses[a];
    return s;
}

// Inverse-CDF draw over probs (assumed normalized to within float slack).
// One uniform draw; entries are scanned in index order so boundary ties
// resolve to the lowest index; zero-probability entries are never chosen.
inline int sample_categorical(std::span<const double> probs, RngStream& rng) {
    double u = rng.uniform();
    double cum = 0.0;
    int fallback = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        double p = probs[static_cast<std::size_t>(i)];
        if (!(p >= 0.0)) throw ValidationError("sample: negative or NaN probability");
        if (p == 0.0) continue;
        fallback = i;
        cum += p;
        if (u < cum) return i;
    }
    if (fallback < 0) throw ValidationError("sample: all probabilities are zero");
    return fallback;  // u landed in the rounding crumb past the last positive entry
}

// Rounds fractional advice to a basis vector; arm a is selected with
// probability advice[a]. Exact basis vectors pass through without
// consuming any randomness, so scripted deterministic advice replays
// identically.
inline AdviceVector randomized_round(const AdviceVector& advice, RngStream& rng) {
    if (advice.is_basis()) return advice;
    std::vector<double> p = advice.probs();
    double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= sum;  // absorb the <= 1e-9 normalization slack
    int arm = sample_categorical(p, rng);
    return AdviceVector::basis(advice.size(), arm);
}

// Welford accumulator for means and standard errors.
class RunningStat {
public:
    void add(double x) {
        ++n_;
        double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double sample_variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    double std_error() const {
        return n_ > 1 ? std::sqrt(sample_variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// 17 significant digits: a double survives the text round trip bit-exactly.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

}  // namespace limbandit
