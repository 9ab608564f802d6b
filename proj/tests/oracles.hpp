#pragma once

// Test-side reference implementations, kept independent of the library
// code paths they check: a linear-space multiplicative-weights update, a
// generic bisection root finder, first-principles enumeration of the
// (group, arm) outcome distribution for the estimator identities, and
// small file/statistics helpers.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <limbandit/limbandit.hpp>

namespace oracles {

// Linear-space multiplicative weights; valid for short horizons where
// the raw weights cannot underflow.
struct NaiveMw {
    double eta = 0.0;
    std::vector<double> weights;

    NaiveMw(int num_experts, double eta_in)
        : eta(eta_in), weights(static_cast<std::size_t>(num_experts), 1.0) {}

    void update(const std::vector<double>& y) {
        for (std::size_t h = 0; h < weights.size(); ++h)
            weights[h] *= std::exp(-eta * y[h]);
    }

    std::vector<double> distribution() const {
        double z = 0.0;
        for (double w : weights) z += w;
        std::vector<double> q(weights.size());
        for (std::size_t h = 0; h < q.size(); ++h) q[h] = weights[h] / z;
        return q;
    }
};

// Bisection for a strictly decreasing g; returns x with g(x) = target.
template <typename F>
double bisect_decreasing(F g, double lo, double hi, double target,
                         double tol = 1e-13, int iters = 500) {
    for (int i = 0; i < iters; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) return mid;
        double v = g(mid);
        if (std::abs(v - target) <= tol) return mid;
        if (v > target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// One random estimator instance: dimensions, a strictly positive expert
// distribution, basis advice for every expert, and one loss vector with
// exact-0 and exact-1 entries mixed in.
struct EstimatorInstance {
    limbandit::ProblemDims dims;
    std::vector<double> q;
    limbandit::AdviceMatrix advice;
    std::vector<double> losses;
};

inline EstimatorInstance random_instance(limbandit::RngStream& rng) {
    const int m = 1 + rng.uniform_int(3);
    const int groups = 1 + rng.uniform_int(6 / m);
    const int n = m * groups;
    const int k = 1 + rng.uniform_int(4);
    std::vector<double> q(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& x : q) {
        x = 0.05 + 0.95 * rng.uniform();
        sum += x;
    }
    for (double& x : q) x /= sum;
    limbandit::AdviceMatrix advice;
    advice.reserve(static_cast<std::size_t>(n));
    for (int h = 0; h < n; ++h)
        advice.push_back(limbandit::AdviceVector::basis(k, rng.uniform_int(k)));
    std::vector<double> losses(static_cast<std::size_t>(k));
    for (double& l : losses) {
        double u = rng.uniform();
        l = u < 0.15 ? 0.0 : (u > 0.85 ? 1.0 : rng.uniform());
    }
    return EstimatorInstance{limbandit::ProblemDims{n, k, m, 1}, std::move(q),
                         std::move(advice), std::move(losses)};
}

// The reachable (group, arm) pairs and their sampling probabilities,
// computed directly as weight(i, a) = sum of q over group-i experts
// advising arm a; no library distribution code involved.
struct WeightedPair {
    int group = 0;
    int arm = 0;
    double weight = 0.0;
};

inline std::vector<WeightedPair> enumerate_pairs(const EstimatorInstance& inst,
                                                 const limbandit::GroupPartition& part) {
    std::vector<WeightedPair> out;
    for (int i = 0; i < part.num_groups(); ++i)
        for (int a = 0; a < inst.dims.num_arms; ++a) {
            double w = 0.0;
            for (int h : part.groups[static_cast<std::size_t>(i)])
                if (inst.advice[static_cast<std::size_t>(h)].basis_arm() == a)
                    w += inst.q[static_cast<std::size_t>(h)];
            if (w > 0.0) out.push_back(WeightedPair{i, a, w});
        }
    return out;
}

// Resolves every reachable pair through the production estimator and
// reports the worst errors of the three estimator identities.
struct IdentityReport {
    double unbiasedness_error = 0.0;     // max_h |E[Y_h] - advice_h . losses|
    double loss_identity_error = 0.0;    // |E[played loss] - sum_h q_h E[Y_h]|
    double moment_violation[4] = {0, 0, 0, 0};  // LHS - (R K')^{2-alpha}, alpha in
                                                // {1, 1.25, 1.5, 2}
    double weight_total = 0.0;           // sanity: should be 1
};

inline const double kMomentAlphas[4] = {1.0, 1.25, 1.5, 2.0};

inline IdentityReport check_identities(const EstimatorInstance& inst) {
    using namespace limbandit;
    GroupPartition part = partition_experts(inst.dims);
    ExpertDistribution q(inst.q);
    std::vector<WeightedPair> pairs = enumerate_pairs(inst, part);

    std::vector<RoundOutcome> outcomes;
    outcomes.reserve(pairs.size());
    for (const WeightedPair& pr : pairs) {
        AdviceMatrix group_advice;
        for (int h : part.groups[static_cast<std::size_t>(pr.group)])
            group_advice.push_back(inst.advice[static_cast<std::size_t>(h)]);
        outcomes.push_back(resolve_round(q, part, group_advice, pr.group, pr.arm,
                                         inst.losses[static_cast<std::size_t>(pr.arm)],
                                         inst.dims.num_arms));
    }

    IdentityReport report;
    for (const WeightedPair& pr : pairs) report.weight_total += pr.weight;

    std::vector<double> expected_y(static_cast<std::size_t>(inst.dims.num_experts), 0.0);
    for (std::size_t j = 0; j < pairs.size(); ++j)
        for (int h = 0; h < inst.dims.num_experts; ++h)
            expected_y[static_cast<std::size_t>(h)] +=
                pairs[j].weight *
                outcomes[j].expert_losses.values[static_cast<std::size_t>(h)];
    for (int h = 0; h < inst.dims.num_experts; ++h) {
        double target =
            inst.losses[static_cast<std::size_t>(inst.advice[static_cast<std::size_t>(h)].basis_arm())];
        report.unbiasedness_error = std::max(
            report.unbiasedness_error,
            std::abs(expected_y[static_cast<std::size_t>(h)] - target));
    }

    double expected_played_loss = 0.0;
    for (const WeightedPair& pr : pairs)
        expected_played_loss += pr.weight * inst.losses[static_cast<std::size_t>(pr.arm)];
    double mixture = 0.0;
    for (int h = 0; h < inst.dims.num_experts; ++h)
        mixture += inst.q[static_cast<std::size_t>(h)] * expected_y[static_cast<std::size_t>(h)];
    report.loss_identity_error = std::abs(expected_played_loss - mixture);

    const double rk = static_cast<double>(part.num_groups()) *
                      static_cast<double>(effective_arms(inst.dims));
    for (int ai = 0; ai < 4; ++ai) {
        const double alpha = kMomentAlphas[ai];
        double lhs = 0.0;
        for (std::size_t j = 0; j < pairs.size(); ++j) {
            double inner = 0.0;
            for (int h = 0; h < inst.dims.num_experts; ++h) {
                double y = outcomes[j].expert_losses.values[static_cast<std::size_t>(h)];
                inner += std::pow(inst.q[static_cast<std::size_t>(h)], alpha) * y * y;
            }
            lhs += pairs[j].weight * inner;
        }
        report.moment_violation[ai] = lhs - std::pow(rk, 2.0 - alpha);
    }
    return report;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<std::pair<double, double>>& xy) {
    if (xy.size() < 2) throw std::runtime_error("fit_slope: need two points");
    double xbar = 0.0, ybar = 0.0;
    for (const auto& [x, y] : xy) {
        xbar += x;
        ybar += y;
    }
    xbar /= static_cast<double>(xy.size());
    ybar /= static_cast<double>(xy.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : xy) {
        sxy += (x - xbar) * (y - ybar);
        sxx += (x - xbar) * (x - xbar);
    }
    return sxy / sxx;
}

// Pearson chi-square statistic of observed counts against probs.
inline double chi_square(const std::vector<std::int64_t>& counts,
                         const std::vector<double>& probs, std::int64_t total) {
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (probs[i] == 0.0) continue;
        double expected = probs[i] * static_cast<double>(total);
        double d = static_cast<double>(counts[i]) - expected;
        stat += d * d / expected;
    }
    return stat;
}

inline std::filesystem::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::filesystem::path p =
        std::filesystem::temp_directory_path() /
        ("limbandit_" + tag + "_" + std::to_string(::getpid()) + "_" +
         std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace oracles
