#pragma once

// Monte-Carlo experiment runner: replicated episodes with per-run stream
// pairs, theoretical bound evaluation, CSV serialization, and the
// horizon-scaling study. Output is byte-identical for a fixed config
// regardless of the worker count.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bandit.hpp"

namespace limbandit {

enum class ForecasterKind { mw, polyinf };
enum class EnvironmentKind { lower_bound, null_iid, script };

inline std::string to_string(ForecasterKind kind) {
    return kind == ForecasterKind::mw ? "mw" : "polyinf";
}

inline ForecasterKind forecaster_from_string(const std::string& s) {
    if (s == "mw") return ForecasterKind::mw;
    if (s == "polyinf") return ForecasterKind::polyinf;
    throw ConfigError("unknown algorithm '" + s + "' (expected mw or polyinf)");
}

// Accepts "lower_bound", "null", or "script:<path>".
inline std::pair<EnvironmentKind, std::string> parse_environment_spec(const std::string& s) {
    if (s == "lower_bound") return {EnvironmentKind::lower_bound, ""};
    if (s == "null") return {EnvironmentKind::null_iid, ""};
    if (s.rfind("script:", 0) == 0) {
        std::string path = s.substr(7);
        if (path.empty()) throw ConfigError("environment spec 'script:' needs a path");
        return {EnvironmentKind::script, path};
    }
    throw ConfigError("unknown environment '" + s +
                      "' (expected lower_bound, null, or script:<path>)");
}

// Stream ids: run r draws environment randomness from stream 2r and
// algorithm randomness from stream 2r + 1. Auxiliary estimates use ids
// from the high-bit base so they never collide with run streams.
inline constexpr std::uint64_t kAuxStreamBase = 0x8000000000000000ULL;
inline constexpr std::uint64_t kAuxStreamMaxLoad = kAuxStreamBase + 0;

struct ExperimentConfig {
    ProblemDims dims;
    ForecasterKind algo = ForecasterKind::mw;
    EnvironmentKind env = EnvironmentKind::lower_bound;
    std::string script_path;            // used when env == script
    int runs = 1;
    std::uint64_t seed = 1;
    std::optional<double> eta_override;
    std::optional<double> epsilon_override;
    int workers = 1;
    std::int64_t max_load_trials = 100000;
    std::filesystem::path out_dir;

    void validate() const {
        dims.validate();
        if (dims.num_experts % dims.advice_budget != 0)
            throw ConfigError("config: advice budget must divide the expert count");
        if (runs < 1) throw ConfigError("config: need at least one run");
        if (workers < 1) throw ConfigError("config: need at least one worker");
        if (max_load_trials < 1) throw ConfigError("config: need at least one max-load trial");
        if (out_dir.empty()) throw ConfigError("config: output directory not set");
        if (env == EnvironmentKind::script && script_path.empty())
            throw ConfigError("config: script environment needs a script path");
        if (env != EnvironmentKind::script && !script_path.empty())
            throw ConfigError("config: script path given for a non-script environment");
        if (eta_override && !(*eta_override > 0.0))
            throw ParameterError("config: eta override must be positive");
        if (epsilon_override && (!(*epsilon_override >= 0.0) || *epsilon_override >= 0.5))
            throw ParameterError("config: epsilon override must lie in [0, 1/2)");
    }
};

// Regret scales: the two upper bounds and the planted-instance lower
// bound, all at horizon T with K' = min{K, M} and R = N/M.
struct TheoreticalBounds {
    double mw_bound = 0.0;
    double polyinf_bound = 0.0;
    double lower_bound = 0.0;
};

inline TheoreticalBounds theoretical_bounds(const ProblemDims& dims,
                                            double max_load_estimate) {
    dims.validate();
    if (!(max_load_estimate > 0.0))
        throw ParameterError("bounds: max-load estimate must be positive");
    if (dims.num_experts == 1) return TheoreticalBounds{};  // no comparator gap
    const double n = static_cast<double>(dims.num_experts);
    const double m = static_cast<double>(dims.advice_budget);
    const double kp = static_cast<double>(effective_arms(dims));
    const double t = static_cast<double>(dims.horizon);
    TheoreticalBounds b;
    b.mw_bound = std::sqrt(2.0 * kp * n * std::log(n) / m * t);
    b.polyinf_bound = 4.0 * std::sqrt(kp * n * std::log(8.0 * m / kp) / m * t);
    b.lower_bound = (1.0 / 32.0) * std::sqrt(n / max_load_estimate * t);
    return b;
}

struct ExperimentSummary {
    double mean_regret = 0.0;
    double std_error = 0.0;
    TheoreticalBounds bounds;
    double max_load_estimate = 0.0;
    double epsilon = 0.0;  // 0 for script runs
    double eta = 0.0;
    double polyinf_c = 0.0;  // 0 for mw
    std::vector<RunRecord> records;
};

// Per-round logging up to horizons of 10^4; longer runs log every
// ceil(T / 10^4) rounds plus the final round.
inline std::int64_t log_stride_for(std::int64_t horizon) {
    return std::max<std::int64_t>(1, (horizon + 9999) / 10000);
}

namespace detail {

inline void write_timeseries_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "run,t,alg_cum_loss,best_expert_cum_loss,regret,L_count,N_count\n";
    for (const RunRecord& rec : records)
        for (const RunLogPoint& pt : rec.series)
            out << rec.run_index << ',' << pt.t << ',' << format_double(pt.alg_cum_loss)
                << ',' << format_double(pt.best_expert_cum_loss) << ','
                << format_double(pt.regret) << ',' << pt.queried_rounds << ','
                << pt.matched_rounds << '\n';
}

inline void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg,
                              const ExperimentSummary& summary) {
    out << "algo,N,K,M,T,runs,mean_regret,stderr,mw_bound,polyinf_bound,"
           "lower_bound_estimate\n";
    out << to_string(cfg.algo) << ',' << cfg.dims.num_experts << ',' << cfg.dims.num_arms
        << ',' << cfg.dims.advice_budget << ',' << cfg.dims.horizon << ',' << cfg.runs
        << ',' << format_double(summary.mean_regret) << ','
        << format_double(summary.std_error) << ','
        << format_double(summary.bounds.mw_bound) << ','
        << format_double(summary.bounds.polyinf_bound) << ','
        << format_double(summary.bounds.lower_bound) << '\n';
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace detail

// Runs cfg.runs replicated episodes and writes timeseries.csv and
// summary.csv into cfg.out_dir. Run r is fully determined by
// (cfg.seed, r); workers only affect wall time, never output bytes.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const ProblemDims& dims = cfg.dims;
    partition_experts(dims);  // surfaces infeasible grouping before any run

    ExperimentSummary summary;
    if (cfg.algo == ForecasterKind::mw) {
        summary.eta = cfg.eta_override ? *cfg.eta_override : mw_eta(dims);
    } else {
        PolyInfParams params = polyinf_params(dims);
        summary.polyinf_c = params.c;
        summary.eta = cfg.eta_override.value_or(params.eta);
    }

    {
        RngStream aux(cfg.seed, kAuxStreamMaxLoad);
        summary.max_load_estimate =
            estimate_max_load(dims.num_arms, dims.advice_budget, cfg.max_load_trials, aux)
                .mean;
    }
    summary.bounds = theoretical_bounds(dims, summary.max_load_estimate);

    std::shared_ptr<const ScriptData> script;
    if (cfg.env == EnvironmentKind::script) {
        script = std::make_shared<const ScriptData>(load_script(cfg.script_path));
        if (script->num_experts != dims.num_experts || script->num_arms != dims.num_arms)
            throw ConfigError("config: script dimensions do not match --N/--K");
        if (static_cast<std::int64_t>(script->steps.size()) < dims.horizon)
            throw ConfigError("config: script has " +
                              std::to_string(script->steps.size()) + " rounds, horizon is " +
                              std::to_string(dims.horizon));
    } else {
        summary.epsilon = cfg.epsilon_override
                              ? *cfg.epsilon_override
                              : epsilon_setting(dims, summary.max_load_estimate);
    }

    auto execute_run = [&](int r) -> RunRecord {
        RngStream env_rng(cfg.seed, 2 * static_cast<std::uint64_t>(r));
        RngStream alg_rng(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1);
        std::unique_ptr<Environment> env;
        std::optional<int> tracked;
        switch (cfg.env) {
        case EnvironmentKind::lower_bound: {
            auto e = std::make_unique<LowerBoundEnvironment>(dims, summary.epsilon,
                                                             std::move(env_rng));
            tracked = e->best_expert();
            env = std::move(e);
            break;
        }
        case EnvironmentKind::null_iid:
            env = std::make_unique<NullEnvironment>(dims, summary.epsilon,
                                                    std::move(env_rng));
            break;
        case EnvironmentKind::script:
            env = std::make_unique<ScriptEnvironment>(dims, script);
            break;
        }
        EpisodeOptions opts;
        opts.log_stride = log_stride_for(dims.horizon);
        opts.tracked_expert = tracked;
        RunRecord rec;
        if (cfg.algo == ForecasterKind::mw)
            rec = run_episode(dims, mw_init(dims, summary.eta), *env, std::move(alg_rng),
                              opts);
        else
            rec = run_episode(dims, polyinf_init(dims, summary.polyinf_c, summary.eta),
                              *env, std::move(alg_rng), opts);
        rec.run_index = r;
        return rec;
    };

    std::vector<RunRecord> records(static_cast<std::size_t>(cfg.runs));
    std::atomic<int> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    auto worker_body = [&] {
        try {
            for (;;) {
                int r = next.fetch_add(1);
                if (r >= cfg.runs) return;
                records[static_cast<std::size_t>(r)] = execute_run(r);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(cfg.runs);  // drain remaining work
        }
    };
    const int workers = std::min(cfg.workers, cfg.runs);
    if (workers <= 1) {
        worker_body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_body);
        for (std::thread& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    RunningStat stat;
    for (const RunRecord& rec : records) stat.add(rec.final_regret);
    summary.mean_regret = stat.mean();
    summary.std_error = stat.std_error();
    summary.records = std::move(records);

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string());
    {
        std::ofstream out = detail::open_output(cfg.out_dir / "timeseries.csv");
        detail::write_timeseries_csv(out, summary.records);
        if (!out) throw IoError("failed writing timeseries.csv");
    }
    {
        std::ofstream out = detail::open_output(cfg.out_dir / "summary.csv");
        detail::write_summary_csv(out, cfg, summary);
        if (!out) throw IoError("failed writing summary.csv");
    }
    return summary;
}

// ---------------------------------------------------------------------
// Horizon scaling.

struct ScalingPoint {
    std::int64_t horizon = 0;
    double mean_regret = 0.0;
    double std_error = 0.0;
};

// One experiment per horizon, written under out_dir/T_<horizon>/ plus a
// combined out_dir/scaling.csv. Each horizon runs under a seed salted
// with T (splitmix64(seed XOR T)) so the points are independent.
inline std::vector<ScalingPoint> scaling_study(const ExperimentConfig& base,
                                               std::span<const std::int64_t> horizons) {
    if (horizons.empty()) throw ConfigError("scaling: need at least one horizon");
    for (std::size_t i = 1; i < horizons.size(); ++i)
        if (horizons[i] <= horizons[i - 1])
            throw ConfigError("scaling: horizons must be strictly ascending");
    std::vector<ScalingPoint> points;
    points.reserve(horizons.size());
    for (std::int64_t t : horizons) {
        ExperimentConfig cfg = base;
        cfg.dims.horizon = t;
        cfg.seed = detail::splitmix64(base.seed ^ static_cast<std::uint64_t>(t));
        cfg.out_dir = base.out_dir / ("T_" + std::to_string(t));
        ExperimentSummary s = run_experiment(cfg);
        points.push_back(ScalingPoint{t, s.mean_regret, s.std_error});
    }
    std::error_code ec;
    std::filesystem::create_directories(base.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + base.out_dir.string());
    std::ofstream out = detail::open_output(base.out_dir / "scaling.csv");
    out << "T,mean_regret,stderr\n";
    for (const ScalingPoint& pt : points)
        out << pt.horizon << ',' << format_double(pt.mean_regret) << ','
            << format_double(pt.std_error) << '\n';
    if (!out) throw IoError("failed writing scaling.csv");
    return points;
}

// Least-squares slope of ln(mean regret) against ln(T) over the points
// with positive regret; empty when fewer than two such points exist
// (e.g. all-zero-loss scripts leave the slope undefined).
inline std::optional<double> fit_loglog_slope(std::span<const ScalingPoint> points) {
    std::vector<std::pair<double, double>> xy;
    for (const ScalingPoint& pt : points)
        if (pt.mean_regret > 0.0)
            xy.emplace_back(std::log(static_cast<double>(pt.horizon)),
                            std::log(pt.mean_regret));
    if (xy.size() < 2) return std::nullopt;
    double xbar = 0.0, ybar = 0.0;
    for (auto& [x, y] : xy) {
        xbar += x;
        ybar += y;
    }
    xbar /= static_cast<double>(xy.size());
    ybar /= static_cast<double>(xy.size());
    double sxy = 0.0, sxx = 0.0;
    for (auto& [x, y] : xy) {
        sxy += (x - xbar) * (y - ybar);
        sxx += (x - xbar) * (x - xbar);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

}  // namespace limbandit
