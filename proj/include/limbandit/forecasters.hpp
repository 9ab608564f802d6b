#pragma once

// Full-information forecasters over the N experts. Both consume the
// importance-weighted expert losses produced by the bandit round and
// maintain a probability distribution used for the next group draw.
//
// MW: multiplicative weights in log space, safe for tiny weights.
// PolyINF: polynomial weights q(h) = [eta (L_h + C)]^{-c} with the
// normalization constant C re-solved by bisection every update.

#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

#include "core.hpp"

namespace limbandit {

// Forecaster weight vector over the N experts. Entries are nonnegative
// and sum to 1 within kProbTolerance; the forecasters keep every entry
// strictly positive after finitely many bounded updates.
class ExpertDistribution {
public:
    explicit ExpertDistribution(std::vector<double> q) : probs_(std::move(q)) {
        if (probs_.empty()) throw ValidationError("expert distribution: empty");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0))
                throw ValidationError("expert distribution: negative or NaN entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbTolerance)
            throw ValidationError("expert distribution: entries must sum to 1");
    }

    int size() const { return static_cast<int>(probs_.size()); }
    double operator[](int h) const { return probs_[static_cast<std::size_t>(h)]; }
    const std::vector<double>& probs() const { return probs_; }

    friend bool operator==(const ExpertDistribution&, const ExpertDistribution&) = default;

private:
    std::vector<double> probs_;
};

// Importance-weighted per-expert losses for one round. Entries are
// nonnegative; the bandit round leaves at most one group (at most M
// entries) nonzero.
struct ExpertLossVector {
    std::vector<double> values;
};

namespace detail {

inline void check_expert_losses(const ExpertLossVector& y, std::size_t n,
                                const char* who) {
    if (y.values.size() != n)
        throw ValidationError(std::string(who) + ": loss vector length mismatch");
    for (double v : y.values)
        if (!(v >= 0.0))
            throw ValidationError(std::string(who) + ": negative or NaN expert loss");
}

}  // namespace detail

// ---------------------------------------------------------------------
// Multiplicative weights

struct MwState {
    double eta = 0.0;
    std::vector<double> log_weights;  // log of unnormalized weights
};

inline MwState mw_init(const ProblemDims& dims, double eta) {
    dims.validate();
    if (!(eta > 0.0)) throw ParameterError("mw: eta must be positive");
    return MwState{eta, std::vector<double>(
                            static_cast<std::size_t>(dims.num_experts), 0.0)};
}

inline void mw_update(MwState& state, const ExpertLossVector& y) {
    detail::check_expert_losses(y, state.log_weights.size(), "mw_update");
    for (std::size_t h = 0; h < y.values.size(); ++h)
        state.log_weights[h] -= state.eta * y.values[h];
}

inline ExpertDistribution current_distribution(const MwState& state) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double lw : state.log_weights) mx = std::max(mx, lw);
    std::vector<double> w(state.log_weights.size());
    double z = 0.0;
    for (std::size_t h = 0; h < w.size(); ++h) {
        w[h] = std::exp(state.log_weights[h] - mx);  // max entry gets exactly 1
        z += w[h];
    }
    for (double& x : w) x /= z;
    return ExpertDistribution(std::move(w));
}

// Tuned learning rate sqrt(2 M ln N / (K' N T)) with K' = min{K, M}.
inline double mw_eta(const ProblemDims& dims) {
    dims.validate();
    if (dims.num_experts == 1)
        throw ParameterError(
            "mw_eta: undefined for a single expert (ln N = 0); pass eta explicitly");
    const double n = static_cast<double>(dims.num_experts);
    const double m = static_cast<double>(dims.advice_budget);
    const double kp = static_cast<double>(effective_arms(dims));
    const double t = static_cast<double>(dims.horizon);
    return std::sqrt(2.0 * m * std::log(n) / (kp * n * t));
}

// ---------------------------------------------------------------------
// PolyINF

struct PolyInfParams {
    double c = 0.0;
    double eta = 0.0;
};

// Tuned exponent and learning rate: c = ln(8M/K'), always above 2 since
// M >= K', and eta = 2 N^{1/(2c)} [c (R K')^{1 - 1/c} T]^{-1/2} with
// R = N/M groups.
inline PolyInfParams polyinf_params(const ProblemDims& dims) {
    dims.validate();
    const double n = static_cast<double>(dims.num_experts);
    const double m = static_cast<double>(dims.advice_budget);
    const double kp = static_cast<double>(effective_arms(dims));
    const double t = static_cast<double>(dims.horizon);
    const double c = std::log(8.0 * m / kp);
    if (!(c > 1.0)) throw ParameterError("polyinf: exponent c must exceed 1");
    const double groups = n / m;
    const double eta = 2.0 * std::pow(n, 1.0 / (2.0 * c)) /
                       std::sqrt(c * std::pow(groups * kp, 1.0 - 1.0 / c) * t);
    return PolyInfParams{c, eta};
}

struct PolyInfState {
    double eta = 0.0;
    double c = 0.0;
    std::vector<double> cum_loss;
    double norm_const = 0.0;  // current C, solved so the weights sum to 1
};

inline constexpr double kPolyInfResidual = 1e-10;
inline constexpr int kPolyInfMaxBisection = 200;

namespace detail {

inline double polyinf_weight_sum(double eta, double c,
                                 const std::vector<double>& cum_loss, double shift) {
    double s = 0.0;
    for (double l : cum_loss) s += std::pow(eta * (l + shift), -c);
    return s;
}

}  // namespace detail

// Solves sum_h [eta (L_h + C)]^{-c} = 1 for C by bisection. Every weight
// must stay in (0, 1], i.e. eta (L_h + C) >= 1 for all h, so the root is
// at or above 1/eta - min_h L_h; that point makes the smallest-loss
// expert's weight exactly 1, hence the sum is >= 1 there and the root is
// bracketed upward by doubling. C itself may be negative once losses
// accumulate past 1/eta.
inline double polyinf_solve_constant(double eta, double c,
                                     const std::vector<double>& cum_loss) {
    if (cum_loss.empty()) throw ValidationError("polyinf: empty loss vector");
    double lmin = *std::min_element(cum_loss.begin(), cum_loss.end());
    double lo = 1.0 / eta - lmin;
    double g_lo = detail::polyinf_weight_sum(eta, c, cum_loss, lo);
    if (g_lo <= 1.0 + kPolyInfResidual) return lo;  // single expert, or ties at the floor
    double step = 1.0;
    double hi = lo + step;
    while (detail::polyinf_weight_sum(eta, c, cum_loss, hi) > 1.0) {
        step *= 2.0;
        hi = lo + step;
        if (!(step < 1e30)) throw Error("polyinf: normalization bracket not found");
    }
    for (int it = 0; it < kPolyInfMaxBisection; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) return mid;  // interval exhausted to ulp
        double g = detail::polyinf_weight_sum(eta, c, cum_loss, mid);
        if (std::abs(g - 1.0) <= kPolyInfResidual) return mid;
        if (g > 1.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline PolyInfState polyinf_init(const ProblemDims& dims, double c, double eta) {
    dims.validate();
    if (!(c > 1.0)) throw ParameterError("polyinf: exponent c must exceed 1");
    if (!(eta > 0.0)) throw ParameterError("polyinf: eta must be positive");
    if (c < 2.0)
        std::cerr << "warning: polyinf exponent c = " << c
                  << " is below 2, outside the tuned regime\n";
    PolyInfState state{eta, c,
                       std::vector<double>(static_cast<std::size_t>(dims.num_experts), 0.0),
                       0.0};
    state.norm_const = polyinf_solve_constant(eta, c, state.cum_loss);
    return state;
}

inline void polyinf_update(PolyInfState& state, const ExpertLossVector& y) {
    detail::check_expert_losses(y, state.cum_loss.size(), "polyinf_update");
    for (std::size_t h = 0; h < y.values.size(); ++h)
        state.cum_loss[h] += y.values[h];
    state.norm_const = polyinf_solve_constant(state.eta, state.c, state.cum_loss);
}

inline ExpertDistribution current_distribution(const PolyInfState& state) {
    std::vector<double> w(state.cum_loss.size());
    double z = 0.0;
    for (std::size_t h = 0; h < w.size(); ++h) {
        w[h] = std::pow(state.eta * (state.cum_loss[h] + state.norm_const), -state.c);
        z += w[h];
    }
    for (double& x : w) x /= z;  // z is 1 within the solver residual
    return ExpertDistribution(std::move(w));
}

// ---------------------------------------------------------------------
// Uniform update entry point used by the episode driver.

inline void forecaster_update(MwState& state, const ExpertLossVector& y) {
    mw_update(state, y);
}

inline void forecaster_update(PolyInfState& state, const ExpertLossVector& y) {
    polyinf_update(state, y);
}

}  // namespace limbandit
