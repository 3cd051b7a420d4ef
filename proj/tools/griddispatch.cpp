#include "griddispatch/commands.hpp"
#include "griddispatch/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
    using namespace griddispatch;

    CLI::App app{"Battery-fleet regulation dispatch: MILP expert, constrained "
                 "soft actor-critic, and SQIL imitation on a linearized feeder model"};
    app.require_subcommand(1);

    commands::GlobalOptions global;
    std::uint64_t seed_opt = 0;
    int threads_opt = -1;
    app.add_option("--seed", seed_opt, "Override every configured seed")
        ->each([&](const std::string&) { global.seed = seed_opt; });
    app.add_option("--threads", threads_opt,
                   "Worker count for the parallel kernels (0 = all cores, 1 = serial)")
        ->each([&](const std::string&) { global.threads = threads_opt; });

    std::string config_path, out_path, checkpoint, scenario_path, injections, feeder_path;
    std::vector<std::string> reports;
    int steps = 450, horizon = 0;
    double step_seconds = 4.0;
    std::uint64_t gen_seed = 7;
    bool sweep = false;

    auto* train = app.add_subcommand("train", "Train a csac or csac-sqil agent");
    train->add_option("-c,--config", config_path, "Run configuration file")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Deterministic evaluation of a policy");
    evaluate->add_option("-c,--config", config_path, "Run configuration file")->required();
    evaluate->add_option("--checkpoint", checkpoint, "Agent checkpoint (learning modes)");
    evaluate->add_option("-o,--out", out_path, "Report CSV path")->required();

    auto* compare = app.add_subcommand("compare", "Tabulate evaluated runs");
    compare->add_option("reports", reports, "Evaluation report CSVs")->required()->expected(-2);
    compare->add_option("-o,--out", out_path, "Comparison CSV path")->required();

    auto* opf = app.add_subcommand("solve-opf", "Solve the multi-step dispatch optimization");
    opf->add_option("-c,--config", config_path, "Run configuration file")->required();
    opf->add_option("--scenario", scenario_path, "Scenario CSV (default: synthesized)");
    opf->add_option("--horizon", horizon, "Steps to schedule (default: episode length)");
    opf->add_option("-o,--out", out_path, "Schedule CSV path")->required();

    auto* pf = app.add_subcommand("powerflow", "Solve one power flow on a feeder");
    pf->add_option("--feeder", feeder_path, "Feeder JSON")->required();
    pf->add_option("--injections", injections, "Injection CSV (node,phase,p_pu,q_pu)");
    pf->add_option("-o,--out", out_path, "Voltage CSV path")->required();
    pf->add_flag("--sweep", sweep, "Use the nonlinear sweep instead of the linear model");

    auto* gen = app.add_subcommand("gen-signal", "Synthesize a regulation scenario CSV");
    gen->add_option("--signal-seed", gen_seed, "Scenario seed");
    gen->add_option("--steps", steps, "Number of steps");
    gen->add_option("--step-seconds", step_seconds, "Step duration in seconds");
    gen->add_option("-o,--out", out_path, "Scenario CSV path")->required();

    auto* demos = app.add_subcommand("gen-demos", "Generate expert demonstrations");
    demos->add_option("-c,--config", config_path, "Run configuration file")->required();
    demos->add_option("-o,--out", out_path, "Demonstration CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (global.threads) set_worker_count(*global.threads);
        if (*train)
            return commands::cmd_train(commands::load_run_config(config_path, global));
        if (*evaluate)
            return commands::cmd_evaluate(commands::load_run_config(config_path, global),
                                          checkpoint, out_path);
        if (*compare) return commands::cmd_compare(reports, out_path);
        if (*opf)
            return commands::cmd_solve_opf(commands::load_run_config(config_path, global),
                                           scenario_path, horizon, out_path,
                                           out_path + ".summary.txt");
        if (*pf) return commands::cmd_powerflow(feeder_path, injections, out_path, sweep);
        if (*gen) {
            const std::uint64_t s = global.seed ? *global.seed : gen_seed;
            return commands::cmd_gen_signal(s, steps, step_seconds, out_path);
        }
        if (*demos)
            return commands::cmd_gen_demos(commands::load_run_config(config_path, global),
                                           out_path);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 0;
}
