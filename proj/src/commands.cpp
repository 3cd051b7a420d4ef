#include "griddispatch/commands.hpp"

#include "griddispatch/csv.hpp"
#include "griddispatch/expert.hpp"
#include "griddispatch/parallel.hpp"
#include "griddispatch/svg_plot.hpp"
#include "griddispatch/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace griddispatch::commands {

using config::RunConfig;
using config::RunMode;

config::RunConfig load_run_config(const std::string& path, const GlobalOptions& g) {
    auto doc = config::Document::load(path);
    doc.apply_env_overrides();
    auto rc = RunConfig::from_document(doc);
    if (g.seed) {
        rc.seed = *g.seed;
        rc.train.seed = *g.seed;
        rc.train.agent.init_seed = *g.seed;
    }
    if (g.threads) rc.threads = *g.threads;
    set_worker_count(rc.threads);
    return rc;
}

int cmd_gen_signal(std::uint64_t seed, int steps, double step_seconds,
                   const std::string& out_path) {
    const auto scenario =
        market::synthesize_scenario(seed, static_cast<std::size_t>(steps), step_seconds);
    csv::write_text_atomic(out_path, market::scenario_to_csv(scenario));
    std::printf("wrote %s (%d steps, %.0f s each)\n", out_path.c_str(), steps, step_seconds);
    return 0;
}

int cmd_powerflow(const std::string& feeder_path, const std::string& injection_csv,
                  const std::string& out_csv, bool nonlinear_sweep) {
    const auto feeder = grid::load_feeder_json(feeder_path);
    grid::InjectionSet inj;
    if (!injection_csv.empty()) {
        const auto table = csv::read_file(injection_csv);
        const int cn = table.column("node");
        const int cp = table.column("phase");
        const int cpp = table.column("p_pu");
        const int cq = table.column("q_pu");
        if (cn < 0 || cp < 0 || cpp < 0 || cq < 0)
            throw std::runtime_error("injection csv: header must be node,phase,p_pu,q_pu");
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const int node = feeder.node_index(table.rows[i][static_cast<std::size_t>(cn)]);
            if (node < 0)
                throw std::runtime_error("injection csv: unknown node '" +
                                         table.rows[i][static_cast<std::size_t>(cn)] + "'");
            inj.add(node, grid::phase_from_char(table.rows[i][static_cast<std::size_t>(cp)][0]),
                    table.num(i, cpp), table.num(i, cq));
        }
    }
    const auto sol = nonlinear_sweep ? grid::solve_nonlinear_sweep(feeder, inj)
                                     : grid::solve_linear(feeder, inj);
    csv::Writer w({"node", "phase", "v_mag_pu"});
    for (std::size_t n = 0; n < feeder.nodes.size(); ++n)
        for (int p = 0; p < grid::kPhases; ++p)
            if (feeder.nodes[n].phases.has(p))
                w.add_row({feeder.nodes[n].id, std::string(1, grid::phase_to_char(p)),
                           csv::format_num(sol.v_mag(static_cast<int>(n), p))});
    w.write_file(out_csv);
    const int violations = grid::count_violations(sol, feeder.v_min, feeder.v_max);
    std::printf("wrote %s (%zu nodes, %d voltage violations)\n", out_csv.c_str(),
                feeder.nodes.size(), violations);
    return violations == 0 ? 0 : 1;
}

int cmd_solve_opf(const RunConfig& rc, const std::string& scenario_path, int horizon,
                  const std::string& out_schedule_csv, const std::string& out_summary) {
    const auto feeder = rc.load_feeder();
    market::RegulationScenario scenario =
        scenario_path.empty() ? rc.make_train_scenarios().front()
                              : market::load_scenario(scenario_path);
    const int h = horizon > 0
                      ? std::min<int>(horizon, static_cast<int>(scenario.size()))
                      : std::min<int>(rc.episode_steps, static_cast<int>(scenario.size()));

    expert::DispatchProblem dp;
    dp.feeder = &feeder;
    dp.fleet = rc.fleet;
    for (const auto& b : rc.fleet)
        dp.initial_energy_kwh.push_back(
            std::clamp(rc.episode_initial_soc, b.soc_min, b.soc_max) * b.energy_kwh);
    dp.horizon = h;
    dp.step_hours = scenario.step_hours();
    for (int t = 0; t < h; ++t) {
        dp.target_kw.push_back(scenario.target_kw(static_cast<std::size_t>(t),
                                                  rc.account.capacity_kw));
        dp.price.push_back(scenario.steps[static_cast<std::size_t>(t)].price);
    }
    dp.account = rc.account;

    const auto sched = expert::solve_dispatch(dp);

    std::ostringstream summary;
    summary << "status: " << lp::status_name(sched.status) << "\n";
    summary << "objective: " << csv::format_num(sched.objective) << "\n";
    summary << "wall_time_s: " << csv::format_num(sched.wall_time_s) << "\n";
    summary << "nodes: " << sched.nodes << "\n";
    if (sched.status == lp::LpStatus::Optimal) {
        int violations = 0;
        for (const auto& f : sched.flows)
            violations += grid::count_violations(f, feeder.v_min, feeder.v_max);
        summary << "voltage_violations: " << violations << "\n";
        summary << "capacity_kw: " << csv::format_num(sched.capacity_kw) << "\n";

        csv::Writer w({"t", "battery", "p_kw"});
        for (int t = 0; t < h; ++t)
            for (std::size_t i = 0; i < rc.fleet.size(); ++i)
                w.add_row({std::to_string(t), rc.fleet[i].id,
                           csv::format_num(sched.p_kw[i][static_cast<std::size_t>(t)])});
        w.write_file(out_schedule_csv);
    }
    if (!out_summary.empty()) csv::write_text_atomic(out_summary, summary.str());
    std::fputs(summary.str().c_str(), stdout);
    return sched.status == lp::LpStatus::Optimal ? 0 : 1;
}

namespace {

std::vector<env::Transition> make_demos(const RunConfig& rc, const grid::Feeder& feeder,
                                        expert::DemoStats* stats) {
    env::Environment e(rc.make_env_config(feeder));
    expert::ExpertPolicy policy(feeder);
    return expert::generate_demonstrations(e, policy, rc.make_train_scenarios(),
                                           rc.demo_episodes_per_scenario, rc.seed ^ 0xdeu,
                                           stats);
}

std::vector<env::Transition> load_or_make_demos(const RunConfig& rc,
                                                const grid::Feeder& feeder) {
    if (!rc.demo_path.empty())
        return expert::demos_from_csv(csv::read_text(rc.demo_path));
    return make_demos(rc, feeder, nullptr);
}

} // namespace

int cmd_gen_demos(const RunConfig& rc, const std::string& out_path) {
    const auto feeder = rc.load_feeder();
    expert::DemoStats stats;
    const auto demos = make_demos(rc, feeder, &stats);
    csv::write_text_atomic(out_path, expert::demos_to_csv(demos));
    std::printf("wrote %s (%d episodes, %d transitions, %d best-effort steps skipped)\n",
                out_path.c_str(), stats.episodes, stats.emitted, stats.skipped);
    return 0;
}

int cmd_train(const RunConfig& rc) {
    if (rc.mode == RunMode::Milp)
        throw config::ConfigError("train applies only to learning modes (csac, csac-sqil)");
    const auto feeder = rc.load_feeder();
    const auto env_cfg = rc.make_env_config(feeder);
    const auto train_scenarios = rc.make_train_scenarios();
    const auto eval_scenarios = rc.make_eval_scenarios();

    std::vector<env::Transition> demos;
    if (rc.mode == RunMode::CsacSqil) demos = load_or_make_demos(rc, feeder);

    const auto result = trainer::train_run(env_cfg, train_scenarios, eval_scenarios, rc.train,
                                           rc.mode == RunMode::CsacSqil ? &demos : nullptr);

    namespace fs = std::filesystem;
    fs::create_directories(rc.out_dir);
    csv::write_text_atomic(rc.out_dir + "/metrics.csv",
                           trainer::metrics_to_csv(result.metrics));
    csv::write_text_atomic(rc.out_dir + "/checkpoint.json",
                           result.agent->to_json(rc.hash()));

    plot::Series reward{"mean reward", "#1f77b4", {}, {}};
    plot::Series cost{"mean cost", "#d62728", {}, {}};
    for (const auto& m : result.metrics) {
        reward.x.push_back(m.episode);
        reward.y.push_back(m.mean_reward);
        cost.x.push_back(m.episode);
        cost.y.push_back(m.mean_cost);
    }
    csv::write_text_atomic(rc.out_dir + "/reward_curve.svg",
                           plot::line_plot_svg("Training reward", "episode", "mean step reward ($)",
                                               {reward}));
    csv::write_text_atomic(rc.out_dir + "/violation_curve.svg",
                           plot::line_plot_svg("Training voltage violations", "episode",
                                               "violations per step", {cost}));
    std::printf("wrote %s/{metrics.csv,checkpoint.json,reward_curve.svg,violation_curve.svg}\n",
                rc.out_dir.c_str());
    return 0;
}

std::string eval_report_to_csv(const EvalOutput& r) {
    csv::Writer w({"algorithm", "mean_profit", "mean_cost_per_step", "mean_step_seconds",
                   "mean_perf", "episodes", "steps"});
    w.add_row({r.algorithm, csv::format_num(r.mean_profit), csv::format_num(r.mean_cost_per_step),
               csv::format_num(r.mean_step_seconds), csv::format_num(r.mean_perf),
               std::to_string(r.episodes), std::to_string(r.steps)});
    return w.str();
}

EvalOutput eval_report_from_csv(const std::string& text) {
    const auto t = csv::parse(text);
    if (t.rows.empty()) throw std::runtime_error("report csv: no rows");
    EvalOutput r;
    r.algorithm = t.rows[0][static_cast<std::size_t>(t.column("algorithm"))];
    r.mean_profit = t.num(0, t.column("mean_profit"));
    r.mean_cost_per_step = t.num(0, t.column("mean_cost_per_step"));
    r.mean_step_seconds = t.num(0, t.column("mean_step_seconds"));
    r.mean_perf = t.num(0, t.column("mean_perf"));
    r.episodes = static_cast<long>(t.num(0, t.column("episodes")));
    r.steps = static_cast<long>(t.num(0, t.column("steps")));
    return r;
}

int cmd_evaluate(const RunConfig& rc, const std::string& checkpoint_path,
                 const std::string& out_report_csv, EvalOutput* out) {
    const auto feeder = rc.load_feeder();
    env::Environment e(rc.make_env_config(feeder));
    const auto eval_scenarios = rc.make_eval_scenarios();
    if (eval_scenarios.empty()) throw std::runtime_error("evaluate: no eval scenarios");

    trainer::Policy policy;
    std::unique_ptr<agent::CsacAgent> loaded;
    expert::ExpertPolicy milp_policy(feeder);
    if (rc.mode == RunMode::Milp) {
        policy = [&milp_policy](const env::Environment& ev) {
            return milp_policy.decide(ev).action;
        };
    } else {
        if (checkpoint_path.empty())
            throw std::runtime_error("evaluate: checkpoint required for learning modes");
        loaded = std::make_unique<agent::CsacAgent>(
            agent::CsacAgent::from_json(csv::read_text(checkpoint_path), rc.hash()));
        if (loaded->obs_dim() != e.obs_dim() || loaded->action_dim() != e.action_dim())
            throw std::runtime_error("evaluate: checkpoint dimensions do not match the config");
        policy = [&loaded](const env::Environment& ev) {
            return loaded->deterministic_action(ev.observation());
        };
    }

    std::vector<trainer::TrajectoryRow> trajectory;
    const auto rep = trainer::evaluate_policy(e, policy, eval_scenarios,
                                              rc.train.eval_episodes_per_scenario, 0x5eedu,
                                              &trajectory);
    EvalOutput r;
    r.algorithm = config::mode_name(rc.mode);
    r.mean_profit = rep.mean_profit;
    r.mean_cost_per_step = rep.mean_cost_per_step;
    r.mean_step_seconds = rep.mean_step_seconds;
    r.mean_perf = rep.mean_perf;
    r.episodes = rep.episodes;
    r.steps = rep.steps;
    if (out) *out = r;

    csv::write_text_atomic(out_report_csv, eval_report_to_csv(r));
    const std::string traj_path =
        out_report_csv.substr(0, out_report_csv.find_last_of('.')) + "_trajectory.csv";
    csv::write_text_atomic(traj_path, trainer::trajectory_to_csv(trajectory));
    std::printf("%s: profit %.4f $/episode, %.4f violations/step, %.6f s/step\n",
                r.algorithm.c_str(), r.mean_profit, r.mean_cost_per_step, r.mean_step_seconds);
    return 0;
}

int cmd_compare(const std::vector<std::string>& report_paths, const std::string& out_path) {
    if (report_paths.size() < 2)
        throw std::runtime_error("compare: need at least two evaluated runs");
    std::vector<EvalOutput> reports;
    for (const auto& p : report_paths)
        reports.push_back(eval_report_from_csv(csv::read_text(p)));

    auto find = [&](const std::string& name) -> const EvalOutput* {
        for (const auto& r : reports)
            if (r.algorithm == name) return &r;
        return nullptr;
    };
    const auto* milp = find("milp");
    const auto* sqil = find("csac-sqil");
    const auto* csac = find("csac");

    std::ostringstream md;
    md << "| algorithm | mean profit ($/episode) | violations/step | s/step |\n";
    md << "|---|---|---|---|\n";
    csv::Writer w({"algorithm", "mean_profit", "mean_cost_per_step", "mean_step_seconds"});
    for (const auto& r : reports) {
        md << "| " << r.algorithm << " | " << csv::format_num(r.mean_profit) << " | "
           << csv::format_num(r.mean_cost_per_step) << " | "
           << csv::format_num(r.mean_step_seconds) << " |\n";
        w.add_row({r.algorithm, csv::format_num(r.mean_profit),
                   csv::format_num(r.mean_cost_per_step),
                   csv::format_num(r.mean_step_seconds)});
    }
    md << "\n";
    auto flag = [&](const std::string& name, bool ok) {
        md << name << ": " << (ok ? "PASS" : "FAIL") << "\n";
    };
    if (milp && sqil) flag("profit milp >= csac-sqil", milp->mean_profit >= sqil->mean_profit);
    if (sqil && csac) flag("profit csac-sqil >= csac", sqil->mean_profit >= csac->mean_profit);
    if (sqil && csac)
        flag("violations csac-sqil <= csac", sqil->mean_cost_per_step <= csac->mean_cost_per_step);

    csv::write_text_atomic(out_path, w.str());
    const std::string md_path = out_path.substr(0, out_path.find_last_of('.')) + ".md";
    csv::write_text_atomic(md_path, md.str());
    std::fputs(md.str().c_str(), stdout);
    return 0;
}

} // namespace griddispatch::commands
