#pragma once

// Adversary side of the simulator. Environments generate one full round
// (advice for all N experts plus losses for all K arms) but reveal advice
// only through an explicit query surface, so an algorithm cannot read
// more than the rows it pays for. The full step stays available to the
// harness for regret accounting.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include "core.hpp"

namespace limbandit {

// One round of adversary output.
struct EnvironmentStep {
    AdviceMatrix advice;  // N rows
    LossVector losses;    // K entries

    friend bool operator==(const EnvironmentStep&, const EnvironmentStep&) = default;
};

class Environment {
public:
    explicit Environment(const ProblemDims& dims) : dims_(dims) { dims_.validate(); }
    virtual ~Environment() = default;

    Environment(const Environment&) = delete;
    Environment& operator=(const Environment&) = delete;

    // Generates the next round. Advice and losses are fixed before the
    // algorithm acts; queries cannot influence them.
    void advance() {
        EnvironmentStep step = generate_step();
        if (static_cast<int>(step.advice.size()) != dims_.num_experts ||
            step.losses.size() != dims_.num_arms)
            throw ValidationError("environment: step has wrong dimensions");
        for (const AdviceVector& row : step.advice)
            if (row.size() != dims_.num_arms)
                throw ValidationError("environment: advice row has wrong arm count");
        step_ = std::move(step);
        ++round_;
        queried_ = 0;
    }

    // Advice rows of exactly the requested experts. This is the only
    // advice surface exposed to the algorithm.
    AdviceMatrix query_advice(std::span<const int> experts) {
        const EnvironmentStep& step = require_step();
        AdviceMatrix rows;
        rows.reserve(experts.size());
        for (int h : experts) {
            if (h < 0 || h >= dims_.num_experts)
                throw ValidationError("environment: queried expert out of range");
            rows.push_back(step.advice[static_cast<std::size_t>(h)]);
        }
        queried_ += static_cast<int>(experts.size());
        return rows;
    }

    double observe_loss(int arm) {
        const EnvironmentStep& step = require_step();
        if (arm < 0 || arm >= dims_.num_arms)
            throw ValidationError("environment: played arm out of range");
        return step.losses[arm];
    }

    // Full disclosure for the harness (regret, diagnostics); not part of
    // the algorithm's view.
    const EnvironmentStep& full_step() const { return require_step(); }

    std::int64_t round() const { return round_; }
    int queried_this_round() const { return queried_; }
    const ProblemDims& dims() const { return dims_; }

    // Rounds this environment can serve; finite only for scripts.
    virtual std::int64_t max_rounds() const {
        return std::numeric_limits<std::int64_t>::max();
    }

protected:
    // Produces the round at 0-based index round() (i.e. round number
    // round() + 1).
    virtual EnvironmentStep generate_step() = 0;

private:
    const EnvironmentStep& require_step() const {
        if (!step_) throw Error("environment: no round generated yet");
        return *step_;
    }

    ProblemDims dims_;
    std::optional<EnvironmentStep> step_;
    std::int64_t round_ = 0;
    int queried_ = 0;
};

// ---------------------------------------------------------------------
// Hard stochastic instance with one planted good expert.

struct LowerBoundConfig {
    ProblemDims dims;
    int best_expert = 0;   // h*, hidden from the algorithm
    double epsilon = 0.0;  // per-round gap

    void validate() const {
        dims.validate();
        if (best_expert < 0 || best_expert >= dims.num_experts)
            throw ConfigError("lower bound: best expert index out of range");
        if (!(epsilon >= 0.0) || epsilon >= 0.5)
            throw ParameterError("lower bound: epsilon must lie in [0, 1/2)");
    }
};

// Every expert advises a fresh uniform arm; the arm advised by the
// planted expert loses Bernoulli(1/2 - epsilon), every other arm loses
// Bernoulli(1/2). Draw order: advice for experts 0..N-1, then losses for
// arms 0..K-1.
inline EnvironmentStep lower_bound_step(const LowerBoundConfig& cfg, RngStream& rng) {
    const int n = cfg.dims.num_experts;
    const int k = cfg.dims.num_arms;
    AdviceMatrix advice;
    advice.reserve(static_cast<std::size_t>(n));
    int target = -1;
    for (int h = 0; h < n; ++h) {
        int arm = rng.uniform_int(k);
        if (h == cfg.best_expert) target = arm;
        advice.push_back(AdviceVector::basis(k, arm));
    }
    std::vector<double> losses(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) {
        double p = (a == target) ? 0.5 - cfg.epsilon : 0.5;
        losses[static_cast<std::size_t>(a)] = rng.bernoulli(p) ? 1.0 : 0.0;
    }
    return EnvironmentStep{std::move(advice), LossVector(std::move(losses))};
}

// Indistinguishability baseline: same advice law, every arm loses
// Bernoulli(1/2 - epsilon/K). Identical draw order to lower_bound_step,
// so epsilon = 0 reproduces it byte for byte under the same stream.
inline EnvironmentStep null_step(const ProblemDims& dims, double epsilon, RngStream& rng) {
    const int n = dims.num_experts;
    const int k = dims.num_arms;
    AdviceMatrix advice;
    advice.reserve(static_cast<std::size_t>(n));
    for (int h = 0; h < n; ++h)
        advice.push_back(AdviceVector::basis(k, rng.uniform_int(k)));
    const double p = 0.5 - epsilon / k;
    std::vector<double> losses(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a)
        losses[static_cast<std::size_t>(a)] = rng.bernoulli(p) ? 1.0 : 0.0;
    return EnvironmentStep{std::move(advice), LossVector(std::move(losses))};
}

class LowerBoundEnvironment : public Environment {
public:
    // Draws the planted expert uniformly as the stream's first draw.
    LowerBoundEnvironment(const ProblemDims& dims, double epsilon, RngStream rng)
        : Environment(dims), rng_(std::move(rng)) {
        cfg_.dims = dims;
        cfg_.epsilon = epsilon;
        cfg_.best_expert = rng_.uniform_int(dims.num_experts);
        cfg_.validate();
    }

    LowerBoundEnvironment(const LowerBoundConfig& cfg, RngStream rng)
        : Environment(cfg.dims), cfg_(cfg), rng_(std::move(rng)) {
        cfg_.validate();
    }

    int best_expert() const { return cfg_.best_expert; }
    const LowerBoundConfig& config() const { return cfg_; }

protected:
    EnvironmentStep generate_step() override { return lower_bound_step(cfg_, rng_); }

private:
    LowerBoundConfig cfg_;
    RngStream rng_;
};

class NullEnvironment : public Environment {
public:
    NullEnvironment(const ProblemDims& dims, double epsilon, RngStream rng)
        : Environment(dims), epsilon_(epsilon), rng_(std::move(rng)) {
        if (!(epsilon >= 0.0) || epsilon >= 0.5)
            throw ParameterError("null environment: epsilon must lie in [0, 1/2)");
    }

    double epsilon() const { return epsilon_; }

protected:
    EnvironmentStep generate_step() override {
        return null_step(dims(), epsilon_, rng_);
    }

private:
    double epsilon_;
    RngStream rng_;
};

// ---------------------------------------------------------------------
// Scripted environments and their file format.
//
// CSV layout: header "t,a_1,...,a_N,l_1,...,l_K"; one row per round with
// t running 1..T in order, arm indices a_h in 1..K, losses in [0, 1].

struct ScriptData {
    int num_experts = 0;
    int num_arms = 0;
    std::vector<EnvironmentStep> steps;
};

// Step for 1-based round t of a fixed script.
inline const EnvironmentStep& fixed_env_step(const std::vector<EnvironmentStep>& steps,
                                             std::int64_t t) {
    if (t < 1 || t > static_cast<std::int64_t>(steps.size()))
        throw ConfigError("script: round " + std::to_string(t) +
                          " outside the scripted horizon");
    return steps[static_cast<std::size_t>(t - 1)];
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

inline ScriptData parse_script(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("script " + origin + ": missing header");
    std::vector<std::string> header = detail::split_csv_line(detail::strip_cr(line));
    if (header.empty() || header[0] != "t")
        throw ConfigError("script " + origin + ": header must start with 't'");
    int n = 0;
    std::size_t col = 1;
    while (col < header.size() && header[col] == "a_" + std::to_string(n + 1)) {
        ++n;
        ++col;
    }
    int k = 0;
    while (col < header.size() && header[col] == "l_" + std::to_string(k + 1)) {
        ++k;
        ++col;
    }
    if (n < 1 || k < 1 || col != header.size())
        throw ConfigError("script " + origin +
                          ": header must be t,a_1,...,a_N,l_1,...,l_K");

    ScriptData script;
    script.num_experts = n;
    script.num_arms = k;
    std::int64_t expected_t = 1;
    while (std::getline(in, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != header.size())
            throw ConfigError("script " + origin + ": row " +
                              std::to_string(expected_t) + " has wrong field count");
        try {
            if (std::stoll(f[0]) != expected_t)
                throw ConfigError("script " + origin + ": rows must run t = 1.." +
                                  std::to_string(expected_t) + " in order");
            AdviceMatrix advice;
            advice.reserve(static_cast<std::size_t>(n));
            for (int h = 0; h < n; ++h) {
                int arm = static_cast<int>(std::stoll(f[static_cast<std::size_t>(1 + h)]));
                if (arm < 1 || arm > k)
                    throw ConfigError("script " + origin + ": advice arm out of 1.." +
                                      std::to_string(k));
                advice.push_back(AdviceVector::basis(k, arm - 1));
            }
            std::vector<double> losses(static_cast<std::size_t>(k));
            for (int a = 0; a < k; ++a)
                losses[static_cast<std::size_t>(a)] =
                    std::stod(f[static_cast<std::size_t>(1 + n + a)]);
            script.steps.push_back(
                EnvironmentStep{std::move(advice), LossVector(std::move(losses))});
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("script " + origin + ": row " +
                              std::to_string(expected_t) + ": " + e.what());
        }
        ++expected_t;
    }
    if (script.steps.empty())
        throw ConfigError("script " + origin + ": no rounds");
    return script;
}

inline ScriptData load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open script file " + path.string());
    return parse_script(in, path.string());
}

inline void write_script(std::ostream& out, const ScriptData& script) {
    out << "t";
    for (int h = 1; h <= script.num_experts; ++h) out << ",a_" << h;
    for (int a = 1; a <= script.num_arms; ++a) out << ",l_" << a;
    out << "\n";
    for (std::size_t i = 0; i < script.steps.size(); ++i) {
        const EnvironmentStep& step = script.steps[i];
        out << (i + 1);
        for (const AdviceVector& row : step.advice) out << "," << (row.basis_arm() + 1);
        for (int a = 0; a < script.num_arms; ++a)
            out << "," << format_double(step.losses[a]);
        out << "\n";
    }
}

inline void write_script(const std::filesystem::path& path, const ScriptData& script) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write script file " + path.string());
    write_script(out, script);
    if (!out) throw IoError("failed writing script file " + path.string());
}

class ScriptEnvironment : public Environment {
public:
    ScriptEnvironment(const ProblemDims& dims, std::shared_ptr<const ScriptData> script)
        : Environment(dims), script_(std::move(script)) {
        if (!script_) throw ConfigError("script environment: null script");
        if (script_->num_experts != dims.num_experts ||
            script_->num_arms != dims.num_arms)
            throw ConfigError("script environment: script is for " +
                              std::to_string(script_->num_experts) + " experts, " +
                              std::to_string(script_->num_arms) +
                              " arms, which does not match the requested dimensions");
    }

    static ScriptEnvironment from_file(const ProblemDims& dims,
                                       const std::filesystem::path& path) {
        return ScriptEnvironment(dims, std::make_shared<ScriptData>(load_script(path)));
    }

    std::int64_t max_rounds() const override {
        return static_cast<std::int64_t>(script_->steps.size());
    }

protected:
    EnvironmentStep generate_step() override {
        return fixed_env_step(script_->steps, round() + 1);
    }

private:
    std::shared_ptr<const ScriptData> script_;
};

// ---------------------------------------------------------------------
// Balls-into-bins estimate and the tuned gap.

struct MaxLoadEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
};

// Monte-Carlo estimate of f(K, M): the expected maximum bin load after
// throwing M balls into K bins uniformly.
inline MaxLoadEstimate estimate_max_load(int num_arms, int num_balls,
                                         std::int64_t trials, RngStream& rng) {
    if (num_arms < 1) throw ParameterError("max load: need at least one bin");
    if (num_balls < 1) throw ParameterError("max load: need at least one ball");
    if (trials < 1) throw ParameterError("max load: need at least one trial");
    RunningStat stat;
    std::vector<int> bins(static_cast<std::size_t>(num_arms));
    for (std::int64_t trial = 0; trial < trials; ++trial) {
        std::fill(bins.begin(), bins.end(), 0);
        for (int b = 0; b < num_balls; ++b) ++bins[static_cast<std::size_t>(rng.uniform_int(num_arms))];
        stat.add(static_cast<double>(*std::max_element(bins.begin(), bins.end())));
    }
    return MaxLoadEstimate{stat.mean(), stat.std_error(), trials};
}

// Reference growth rate max{ln K, M/K}, reported alongside the estimate.
inline double max_load_asymptotic(int num_arms, int num_balls) {
    return std::max(std::log(static_cast<double>(num_arms)),
                    static_cast<double>(num_balls) / static_cast<double>(num_arms));
}

// Tuned per-round gap (1/8) sqrt(N / (f T)), clamped into (0, 1/4] with a
// warning so short horizons keep Bernoulli parameters valid.
inline double epsilon_setting(const ProblemDims& dims, double max_load_estimate) {
    dims.validate();
    if (!(max_load_estimate > 0.0))
        throw ParameterError("epsilon: max-load estimate must be positive");
    double eps = 0.125 * std::sqrt(static_cast<double>(dims.num_experts) /
                                   (max_load_estimate * static_cast<double>(dims.horizon)));
    if (eps > 0.25) {
        std::cerr << "warning: tuned epsilon " << eps
                  << " exceeds 1/4, clamping (horizon too short for these dims)\n";
        eps = 0.25;
    }
    return eps;
}

// ---------------------------------------------------------------------
// Per-run counters for the planted-expert analysis.

struct Diagnostics {
    std::int64_t queried_rounds = 0;  // rounds whose sampled group contains h*
    std::int64_t matched_rounds = 0;  // of those, rounds where the play equals h*'s arm
};

// Records one round. Advice rows are the environment's full-disclosure
// rows; a match requires the tracked expert's advice to be a basis vector
// pointing at the played arm.
inline void record_diagnostics(Diagnostics& diag, int sampled_group, int played_arm,
                               const AdviceMatrix& advice, int tracked_expert,
                               int tracked_expert_group) {
    if (sampled_group != tracked_expert_group) return;
    ++diag.queried_rounds;
    const AdviceVector& row = advice[static_cast<std::size_t>(tracked_expert)];
    if (row.is_basis() && row.basis_arm() == played_arm) ++diag.matched_rounds;
}

}  // namespace limbandit
