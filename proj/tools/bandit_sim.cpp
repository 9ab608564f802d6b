// Command-line front end for the advice-budgeted bandit simulator.
//
// Subcommands:
//   simulate  run replicated episodes, write timeseries.csv + summary.csv
//   bounds    print the theoretical regret scales for given dimensions
//   maxload   Monte-Carlo estimate of the balls-into-bins maximum load
//   scaling   run one experiment per horizon and fit the log-log slope
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <limbandit/limbandit.hpp>

namespace {

using namespace limbandit;

struct SimArgs {
    int num_experts = 0;
    int num_arms = 0;
    int advice_budget = 0;
    std::int64_t horizon = 0;
    int runs = 1;
    std::uint64_t seed = 1;
    std::string algo = "mw";
    std::string env = "lower_bound";
    double eta = 0.0;
    bool eta_set = false;
    double epsilon = 0.0;
    bool epsilon_set = false;
    int workers = 1;
    std::int64_t f_trials = 100000;
    std::string out_dir;
};

void add_dims_flags(CLI::App& cmd, SimArgs& args, bool with_horizon) {
    cmd.add_option("--N", args.num_experts, "number of experts")->required();
    cmd.add_option("--K", args.num_arms, "number of arms")->required();
    cmd.add_option("--M", args.advice_budget, "experts queried per round")->required();
    if (with_horizon)
        cmd.add_option("--T", args.horizon, "number of rounds")->required();
}

void add_experiment_flags(CLI::App& cmd, SimArgs& args) {
    cmd.add_option("--algo", args.algo, "forecaster: mw or polyinf")
        ->check(CLI::IsMember({"mw", "polyinf"}));
    cmd.add_option("--runs", args.runs, "independent replications");
    cmd.add_option("--seed", args.seed, "master seed");
    cmd.add_option("--env", args.env,
                   "environment: lower_bound, null, or script:<path>");
    cmd.add_option("--eta", args.eta, "learning-rate override")
        ->each([&args](const std::string&) { args.eta_set = true; });
    cmd.add_option("--epsilon", args.epsilon, "per-round gap override")
        ->each([&args](const std::string&) { args.epsilon_set = true; });
    cmd.add_option("--workers", args.workers, "worker threads (output-invariant)");
    cmd.add_option("--f-trials", args.f_trials, "max-load Monte-Carlo trials");
    cmd.add_option("--out", args.out_dir, "output directory")->required();
}

ExperimentConfig build_config(const SimArgs& args) {
    ExperimentConfig cfg;
    cfg.dims = ProblemDims{args.num_experts, args.num_arms, args.advice_budget,
                           args.horizon};
    cfg.algo = forecaster_from_string(args.algo);
    auto [env_kind, script_path] = parse_environment_spec(args.env);
    cfg.env = env_kind;
    cfg.script_path = script_path;
    cfg.runs = args.runs;
    cfg.seed = args.seed;
    if (args.eta_set) cfg.eta_override = args.eta;
    if (args.epsilon_set) cfg.epsilon_override = args.epsilon;
    cfg.workers = args.workers;
    cfg.max_load_trials = args.f_trials;
    cfg.out_dir = args.out_dir;
    return cfg;
}

void print_summary(const ExperimentConfig& cfg, const ExperimentSummary& summary) {
    std::cout << "algo=" << to_string(cfg.algo) << " N=" << cfg.dims.num_experts
              << " K=" << cfg.dims.num_arms << " M=" << cfg.dims.advice_budget
              << " T=" << cfg.dims.horizon << " runs=" << cfg.runs << "\n";
    std::cout << "eta=" << format_double(summary.eta);
    if (cfg.algo == ForecasterKind::polyinf)
        std::cout << " c=" << format_double(summary.polyinf_c);
    if (cfg.env != EnvironmentKind::script)
        std::cout << " epsilon=" << format_double(summary.epsilon);
    std::cout << "\n";
    std::cout << "mean_regret=" << format_double(summary.mean_regret)
              << " stderr=" << format_double(summary.std_error) << "\n";
    std::cout << "mw_bound=" << format_double(summary.bounds.mw_bound)
              << " polyinf_bound=" << format_double(summary.bounds.polyinf_bound)
              << " lower_bound_estimate=" << format_double(summary.bounds.lower_bound)
              << "\n";
    std::cout << "wrote " << (cfg.out_dir / "timeseries.csv").string() << " and "
              << (cfg.out_dir / "summary.csv").string() << "\n";
}

std::vector<std::int64_t> parse_horizon_list(const std::string& csv) {
    std::vector<std::int64_t> out;
    std::istringstream in(csv);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t pos = 0;
            std::int64_t t = std::stoll(field, &pos);
            if (pos != field.size()) throw std::invalid_argument(field);
            out.push_back(t);
        } catch (const std::exception&) {
            throw ConfigError("scaling: bad horizon '" + field + "' in --T-list");
        }
    }
    if (out.empty()) throw ConfigError("scaling: --T-list is empty");
    return out;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Simulator for bandit algorithms that query only M of N experts per round"};
    app.require_subcommand(1);

    SimArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "run replicated episodes");
    add_dims_flags(*simulate, sim_args, true);
    add_experiment_flags(*simulate, sim_args);

    SimArgs bounds_args;
    std::uint64_t bounds_seed = 1;
    CLI::App* bounds = app.add_subcommand("bounds", "print theoretical regret scales");
    add_dims_flags(*bounds, bounds_args, true);
    bounds->add_option("--f-trials", bounds_args.f_trials, "max-load Monte-Carlo trials");
    bounds->add_option("--seed", bounds_seed, "seed for the max-load estimate");

    int ml_arms = 0, ml_balls = 0;
    std::int64_t ml_trials = 100000;
    std::uint64_t ml_seed = 1;
    CLI::App* maxload = app.add_subcommand("maxload", "estimate the expected maximum bin load");
    maxload->add_option("--K", ml_arms, "number of bins")->required();
    maxload->add_option("--M", ml_balls, "number of balls")->required();
    maxload->add_option("--trials", ml_trials, "Monte-Carlo trials");
    maxload->add_option("--seed", ml_seed, "seed");

    SimArgs scaling_args;
    std::string horizon_csv;
    CLI::App* scaling = app.add_subcommand("scaling", "mean regret across horizons");
    scaling->add_option("--T-list", horizon_csv, "comma-separated horizons, ascending")
        ->required();
    add_dims_flags(*scaling, scaling_args, false);
    add_experiment_flags(*scaling, scaling_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the parse diagnostic
        return code == 0 ? 0 : 2;
    }

    if (simulate->parsed()) {
        ExperimentConfig cfg = build_config(sim_args);
        ExperimentSummary summary = run_experiment(cfg);
        print_summary(cfg, summary);
        return 0;
    }
    if (bounds->parsed()) {
        ProblemDims dims{bounds_args.num_experts, bounds_args.num_arms,
                         bounds_args.advice_budget, bounds_args.horizon};
        dims.validate();
        RngStream rng(bounds_seed, kAuxStreamMaxLoad);
        MaxLoadEstimate f = estimate_max_load(dims.num_arms, dims.advice_budget,
                                              bounds_args.f_trials, rng);
        TheoreticalBounds b = theoretical_bounds(dims, f.mean);
        std::cout << "N,K,M,T,f_estimate,f_stderr,mw_bound,polyinf_bound,"
                     "lower_bound_estimate\n";
        std::cout << dims.num_experts << ',' << dims.num_arms << ','
                  << dims.advice_budget << ',' << dims.horizon << ','
                  << format_double(f.mean) << ',' << format_double(f.std_error) << ','
                  << format_double(b.mw_bound) << ',' << format_double(b.polyinf_bound)
                  << ',' << format_double(b.lower_bound) << "\n";
        return 0;
    }
    if (maxload->parsed()) {
        RngStream rng(ml_seed, kAuxStreamMaxLoad);
        MaxLoadEstimate f = estimate_max_load(ml_arms, ml_balls, ml_trials, rng);
        std::cout << "K,M,trials,estimate,stderr,asymptotic\n";
        std::cout << ml_arms << ',' << ml_balls << ',' << ml_trials << ','
                  << format_double(f.mean) << ',' << format_double(f.std_error) << ','
                  << format_double(max_load_asymptotic(ml_arms, ml_balls)) << "\n";
        return 0;
    }
    if (scaling->parsed()) {
        std::vector<std::int64_t> horizons = parse_horizon_list(horizon_csv);
        scaling_args.horizon = horizons.back();  // placeholder; overridden per point
        ExperimentConfig cfg = build_config(scaling_args);
        std::vector<ScalingPoint> points = scaling_study(cfg, horizons);
        for (const ScalingPoint& pt : points)
            std::cout << "T=" << pt.horizon
                      << " mean_regret=" << format_double(pt.mean_regret)
                      << " stderr=" << format_double(pt.std_error) << "\n";
        if (std::optional<double> slope = fit_loglog_slope(points))
            std::cout << "loglog_slope=" << format_double(*slope) << "\n";
        else
            std::cout << "loglog_slope=undefined (fewer than two positive-regret points)\n";
        std::cout << "wrote " << (cfg.out_dir / "scaling.csv").string() << "\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const limbandit::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const limbandit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
