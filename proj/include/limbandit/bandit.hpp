#pragma once

// The two-stage bandit round. Experts are split into R = N/M groups of
// size M; each round the forecaster mass picks a group, the group's
// advice (queried only after that choice, so exactly M rows per round)
// mixes into an arm distribution, one arm is played, and the single
// observed loss is importance-weighted back onto the queried experts.

#include <cassert>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "core.hpp"
#include "environments.hpp"
#include "forecasters.hpp"

namespace limbandit {

struct GroupPartition {
    int group_size = 0;                    // M
    std::vector<std::vector<int>> groups;  // R disjoint blocks covering all experts
    std::vector<int> group_of;             // expert -> group index

    int num_groups() const { return static_cast<int>(groups.size()); }
    int num_experts() const { return static_cast<int>(group_of.size()); }
};

namespace detail {

inline GroupPartition partition_from_order(const ProblemDims& dims,
                                           const std::vector<int>& order) {
    if (dims.num_experts % dims.advice_budget != 0)
        throw ConfigError("partition: advice budget must divide the expert count");
    GroupPartition part;
    part.group_size = dims.advice_budget;
    const int r = dims.num_experts / dims.advice_budget;
    part.groups.resize(static_cast<std::size_t>(r));
    part.group_of.assign(static_cast<std::size_t>(dims.num_experts), -1);
    for (int i = 0; i < r; ++i) {
        auto& group = part.groups[static_cast<std::size_t>(i)];
        group.reserve(static_cast<std::size_t>(dims.advice_budget));
        for (int j = 0; j < dims.advice_budget; ++j) {
            int h = order[static_cast<std::size_t>(i * dims.advice_budget + j)];
            group.push_back(h);
            part.group_of[static_cast<std::size_t>(h)] = i;
        }
    }
    return part;
}

}  // namespace detail

// Contiguous blocks: group i holds experts iM .. iM + M - 1.
inline GroupPartition partition_experts(const ProblemDims& dims) {
    dims.validate();
    std::vector<int> order(static_cast<std::size_t>(dims.num_experts));
    std::iota(order.begin(), order.end(), 0);
    return detail::partition_from_order(dims, order);
}

// Seeded variant: a uniform shuffle decides block membership. Off the
// default paths; grouping is part of the algorithm's state, so the draw
// comes from the algorithm stream.
inline GroupPartition partition_experts(const ProblemDims& dims, RngStream& rng) {
    dims.validate();
    std::vector<int> order(static_cast<std::size_t>(dims.num_experts));
    std::iota(order.begin(), order.end(), 0);
    for (int i = dims.num_experts - 1; i > 0; --i) {
        int j = rng.uniform_int(i + 1);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    return detail::partition_from_order(dims, order);
}

// r(i) = total forecaster mass of group i.
struct GroupDistribution {
    std::vector<double> r;
};

inline GroupDistribution group_distribution(const ExpertDistribution& q,
                                            const GroupPartition& part) {
    if (q.size() != part.num_experts())
        throw ValidationError("group distribution: expert count mismatch");
    GroupDistribution out;
    out.r.resize(static_cast<std::size_t>(part.num_groups()), 0.0);
    for (int i = 0; i < part.num_groups(); ++i)
        for (int h : part.groups[static_cast<std::size_t>(i)])
            out.r[static_cast<std::size_t>(i)] += q[h];
    return out;
}

// Arm distribution of one group: the q-weighted mixture of its members'
// (basis) advice, normalized by the group mass. At most min{K, M} arms
// carry positive probability. A massless group falls back to the uniform
// distribution over the arms its members point at.
struct GroupArmDistribution {
    std::vector<double> p;
};

inline GroupArmDistribution group_arm_distribution(const ExpertDistribution& q,
                                                   std::span<const int> group,
                                                   std::span<const AdviceVector> advice,
                                                   double group_mass, int num_arms) {
    if (group.size() != advice.size())
        throw ValidationError("group arms: advice row count mismatch");
    GroupArmDistribution out;
    out.p.assign(static_cast<std::size_t>(num_arms), 0.0);
    if (group_mass > 0.0) {
        for (std::size_t j = 0; j < group.size(); ++j) {
            const AdviceVector& row = advice[j];
            if (!row.is_basis())
                throw ValidationError("group arms: advice must be rounded to basis vectors");
            out.p[static_cast<std::size_t>(row.basis_arm())] += q[group[j]];
        }
        for (double& x : out.p) x /= group_mass;
    } else {
        int active = 0;
        for (const AdviceVector& row : advice) {
            std::size_t a = static_cast<std::size_t>(row.basis_arm());
            if (out.p[a] == 0.0) ++active;
            out.p[a] = 1.0;
        }
        for (double& x : out.p)
            if (x > 0.0) x = 1.0 / active;
    }
    return out;
}

// Everything one round produces for the learner and the logs.
struct RoundOutcome {
    int sampled_group = -1;
    int played_arm = -1;
    double observed_loss = 0.0;
    std::vector<double> estimated_arm_losses;  // nonzero at the played arm only
    ExpertLossVector expert_losses;            // nonzero inside the sampled group only
};

// Deterministic tail of the round once (group, arm, loss) are fixed:
// the importance-weighted arm-loss estimate loss / (r(i) p_i(arm)) and
// its projection onto the queried experts. The probability the estimate
// divides by is recomputed here from q and the advice, so enumerating
// (group, arm) pairs exercises the exact production estimator.
inline RoundOutcome resolve_round(const ExpertDistribution& q, const GroupPartition& part,
                                  std::span<const AdviceVector> group_advice,
                                  int group_index, int played_arm, double observed_loss,
                                  int num_arms) {
    if (group_index < 0 || group_index >= part.num_groups())
        throw ValidationError("round: group index out of range");
    if (played_arm < 0 || played_arm >= num_arms)
        throw ValidationError("round: arm index out of range");
    if (!(observed_loss >= 0.0) || observed_loss > 1.0)
        throw ValidationError("round: observed loss outside [0, 1]");
    const std::vector<int>& group = part.groups[static_cast<std::size_t>(group_index)];

    double group_mass = 0.0;
    for (int h : group) group_mass += q[h];
    GroupArmDistribution p =
        group_arm_distribution(q, group, group_advice, group_mass, num_arms);

    double pr = group_mass * p.p[static_cast<std::size_t>(played_arm)];
    if (!(pr > 0.0))
        throw Error("round: zero-probability (group, arm) pair cannot be resolved");
    double denom = std::max(pr, 1e-300);  // denormal guard
    assert(denom == pr && "probability floor must not bind at desk scale");

    RoundOutcome out;
    out.sampled_group = group_index;
    out.played_arm = played_arm;
    out.observed_loss = observed_loss;
    out.estimated_arm_losses.assign(static_cast<std::size_t>(num_arms), 0.0);
    double estimate = observed_loss / denom;
    out.estimated_arm_losses[static_cast<std::size_t>(played_arm)] = estimate;
    out.expert_losses.values.assign(static_cast<std::size_t>(q.size()), 0.0);
    for (std::size_t j = 0; j < group.size(); ++j)
        out.expert_losses.values[static_cast<std::size_t>(group[j])] =
            group_advice[j][played_arm] * estimate;
    return out;
}

// One full round against a live environment: sample the group from the
// forecaster mass, query that group's advice only, round it, sample the
// arm from the group mixture, observe the one loss, build the estimates.
inline RoundOutcome play_round(const ExpertDistribution& q, const GroupPartition& part,
                               Environment& env, RngStream& rng) {
    if (q.size() != part.num_experts())
        throw ValidationError("round: forecaster and partition disagree on expert count");
    GroupDistribution r = group_distribution(q, part);
    int group_index = sample_categorical(r.r, rng);
    const std::vector<int>& group = part.groups[static_cast<std::size_t>(group_index)];

    // Advice is queried only now, after the group draw: M rows per round.
    AdviceMatrix advice = env.query_advice(group);
    for (AdviceVector& row : advice) row = randomized_round(row, rng);

    const int num_arms = env.dims().num_arms;
    GroupArmDistribution p = group_arm_distribution(
        q, group, advice, r.r[static_cast<std::size_t>(group_index)], num_arms);
    int arm = sample_categorical(p.p, rng);
    double loss = env.observe_loss(arm);
    return resolve_round(q, part, advice, group_index, arm, loss, num_arms);
}

// ---------------------------------------------------------------------
// Episode driver.

struct RunLogPoint {
    std::int64_t t = 0;
    double alg_cum_loss = 0.0;
    double best_expert_cum_loss = 0.0;
    double regret = 0.0;
    std::int64_t queried_rounds = 0;
    std::int64_t matched_rounds = 0;

    friend bool operator==(const RunLogPoint&, const RunLogPoint&) = default;
};

struct RunRecord {
    int run_index = 0;
    std::vector<RunLogPoint> series;
    std::vector<double> expert_cum_loss;  // true cumulative loss per expert
    double alg_cum_loss = 0.0;
    double final_regret = 0.0;
    Diagnostics diag;
};

struct EpisodeOptions {
    std::int64_t log_stride = 1;        // log every stride-th round (and the last)
    std::optional<int> tracked_expert;  // diagnostics target, e.g. a planted expert
    bool shuffle_partition = false;     // draw group membership from the algorithm stream
};

// Runs T rounds of the grouped algorithm against env. The forecaster
// state and the algorithm stream are owned by the episode; regret is
// measured against the realized best expert via the environment's
// full-disclosure step.
template <typename ForecasterState>
RunRecord run_episode(const ProblemDims& dims, ForecasterState state, Environment& env,
                      RngStream alg_rng, const EpisodeOptions& opts = {}) {
    dims.validate();
    if (env.dims().num_experts != dims.num_experts ||
        env.dims().num_arms != dims.num_arms)
        throw ConfigError("episode: environment dimensions do not match");
    if (env.max_rounds() < dims.horizon)
        throw ConfigError("episode: environment provides only " +
                          std::to_string(env.max_rounds()) + " of " +
                          std::to_string(dims.horizon) + " rounds");
    if (opts.tracked_expert &&
        (*opts.tracked_expert < 0 || *opts.tracked_expert >= dims.num_experts))
        throw ConfigError("episode: tracked expert out of range");

    GroupPartition part =
        opts.shuffle_partition ? partition_experts(dims, alg_rng) : partition_experts(dims);
    const std::int64_t stride = std::max<std::int64_t>(1, opts.log_stride);

    RunRecord rec;
    rec.expert_cum_loss.assign(static_cast<std::size_t>(dims.num_experts), 0.0);
    for (std::int64_t t = 1; t <= dims.horizon; ++t) {
        env.advance();
        ExpertDistribution q = current_distribution(state);
        RoundOutcome outcome = play_round(q, part, env, alg_rng);

        const EnvironmentStep& step = env.full_step();
        for (int h = 0; h < dims.num_experts; ++h)
            rec.expert_cum_loss[static_cast<std::size_t>(h)] +=
                dot(step.advice[static_cast<std::size_t>(h)], step.losses);
        rec.alg_cum_loss += outcome.observed_loss;
        if (opts.tracked_expert)
            record_diagnostics(rec.diag, outcome.sampled_group, outcome.played_arm,
                               step.advice, *opts.tracked_expert,
                               part.group_of[static_cast<std::size_t>(*opts.tracked_expert)]);

        forecaster_update(state, outcome.expert_losses);

        if (t % stride == 0 || t == dims.horizon) {
            double best = *std::min_element(rec.expert_cum_loss.begin(),
                                            rec.expert_cum_loss.end());
            rec.series.push_back(RunLogPoint{t, rec.alg_cum_loss, best,
                                             rec.alg_cum_loss - best,
                                             rec.diag.queried_rounds,
                                             rec.diag.matched_rounds});
        }
    }
    double best = *std::min_element(rec.expert_cum_loss.begin(), rec.expert_cum_loss.end());
    rec.final_regret = rec.alg_cum_loss - best;
    return rec;
}

}  // namespace limbandit
