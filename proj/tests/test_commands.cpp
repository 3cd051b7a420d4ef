#include "griddispatch/commands.hpp"

#include "griddispatch/csv.hpp"
#include "griddispatch/expert.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <unistd.h>

using namespace griddispatch;
using namespace griddispatch::commands;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("gd_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string tiny_cfg_text(const std::string& out_dir, const std::string& mode) {
    return "[run]\n"
           "mode = \"" + mode + "\"\n"
           "seed = 3\n"
           "out_dir = \"" + out_dir + "\"\n"
           "[feeder]\n"
           "path = \"" + gdtest::data_dir() + "/feeder_4node.json\"\n"
           "[scenario]\n"
           "seed = 7\ncount = 1\nsteps = 60\nstep_seconds = 900\neval_seed = 11\neval_count = 1\n"
           "[market]\n"
           "capacity_kw = 6\ncapacity_cap_kw = 20\nepsilon_kw = 0.12\n"
           "[env]\n"
           "initial_soc = 0.5\nepisode_steps = 6\nreward_scale = 0.1\n"
           "[agent]\n"
           "hidden = \"8,8\"\nbatch_size = 8\nparam_noise = 0\n"
           "[train]\n"
           "episodes = 3\ntrain_every = 2\nwarmup = 8\nbuffer = 500\n"
           "eval_every = 2\ndemo_episodes_per_scenario = 1\n"
           "[battery.b1]\n"
           "node = \"n3\"\nphase = \"a\"\n"
           "[battery.b2]\n"
           "node = \"n4\"\nphase = \"a\"\n";
}

config::RunConfig tiny_cfg(const TempDir& dir, const std::string& mode) {
    const auto cfg_path = dir.file("run_" + mode + ".cfg");
    csv::write_text_atomic(cfg_path, tiny_cfg_text(dir.file("out_" + mode), mode));
    return load_run_config(cfg_path, {});
}

} // namespace

TEST_CASE("gen-signal output is byte-identical across runs with one seed") {
    TempDir dir;
    const auto p1 = dir.file("a.csv");
    const auto p2 = dir.file("b.csv");
    CHECK(cmd_gen_signal(9, 50, 4.0, p1) == 0);
    CHECK(cmd_gen_signal(9, 50, 4.0, p2) == 0);
    CHECK(csv::read_text(p1) == csv::read_text(p2));
    CHECK(cmd_gen_signal(10, 50, 4.0, p2) == 0);
    CHECK(csv::read_text(p1) != csv::read_text(p2));
    const auto parsed = market::parse_scenario_csv(csv::read_text(p1));
    CHECK(parsed.size() == 50);
}

TEST_CASE("powerflow command writes the voltage csv and matches the library") {
    TempDir dir;
    const auto inj = dir.file("inj.csv");
    csv::write_text_atomic(inj, "node,phase,p_pu,q_pu\nn3,a,0.05,0\n");
    const auto out = dir.file("v.csv");
    CHECK(cmd_powerflow(gdtest::data_dir() + "/feeder_4node.json", inj, out, false) == 0);
    const auto table = csv::read_file(out);
    REQUIRE(table.rows.size() == 4);
    const auto feeder = grid::load_feeder_json(gdtest::data_dir() + "/feeder_4node.json");
    grid::InjectionSet is;
    is.add(feeder.node_index("n3"), 0, 0.05, 0.0);
    const auto sol = grid::solve_linear(feeder, is);
    CHECK(table.num(2, table.column("v_mag_pu")) == doctest::Approx(sol.v_mag(2, 0)).epsilon(1e-9));

    // sweep variant also runs
    CHECK(cmd_powerflow(gdtest::data_dir() + "/feeder_4node.json", inj, out, true) == 0);
}

TEST_CASE("solve-opf writes a schedule and an optimal summary") {
    TempDir dir;
    const auto rc = tiny_cfg(dir, "milp");
    const auto out = dir.file("sched.csv");
    CHECK(cmd_solve_opf(rc, "", 4, out, dir.file("summary.txt")) == 0);
    const auto table = csv::read_file(out);
    CHECK(table.rows.size() == 4 * 2); // h steps x m batteries
    const auto summary = csv::read_text(dir.file("summary.txt"));
    CHECK(summary.find("status: optimal") != std::string::npos);
    CHECK(summary.find("voltage_violations: 0") != std::string::npos);
}

TEST_CASE("train rejects milp mode and missing demo files") {
    TempDir dir;
    auto rc = tiny_cfg(dir, "milp");
    CHECK_THROWS_AS((void)cmd_train(rc), config::ConfigError);

    auto rc2 = tiny_cfg(dir, "csac-sqil");
    rc2.demo_path = dir.file("missing_demos.csv");
    CHECK_THROWS((void)cmd_train(rc2));
}

TEST_CASE("tiny training runs produce the full artifact set") {
    TempDir dir;
    const auto rc = tiny_cfg(dir, "csac");
    CHECK(cmd_train(rc) == 0);
    const auto metrics = csv::read_file(rc.out_dir + "/metrics.csv");
    CHECK(metrics.rows.size() == 3); // one row per episode
    CHECK(metrics.column("episode") == 0);
    CHECK(metrics.column("lambda") >= 0);
    const auto ckpt = csv::read_text(rc.out_dir + "/checkpoint.json");
    const auto agent = agent::CsacAgent::from_json(ckpt, rc.hash());
    CHECK(agent.action_dim() == 2);
    CHECK(csv::read_text(rc.out_dir + "/reward_curve.svg").find("<svg") == 0);
    CHECK(csv::read_text(rc.out_dir + "/violation_curve.svg").find("<svg") == 0);
}

TEST_CASE("sqil training auto-generates demonstrations through the expert") {
    TempDir dir;
    const auto rc = tiny_cfg(dir, "csac-sqil");
    CHECK(cmd_train(rc) == 0);
    const auto metrics = csv::read_file(rc.out_dir + "/metrics.csv");
    CHECK(metrics.rows.size() == 3);
}

TEST_CASE("gen-demos then train from the cached file") {
    TempDir dir;
    auto rc = tiny_cfg(dir, "csac-sqil");
    const auto demo_path = dir.file("demos.csv");
    CHECK(cmd_gen_demos(rc, demo_path) == 0);
    const auto demos = expert::demos_from_csv(csv::read_text(demo_path));
    CHECK(!demos.empty());
    rc.demo_path = demo_path;
    CHECK(cmd_train(rc) == 0);
}

TEST_CASE("evaluate works for milp and trained checkpoints, deterministically") {
    TempDir dir;
    const auto milp_rc = tiny_cfg(dir, "milp");
    EvalOutput milp_out;
    CHECK(cmd_evaluate(milp_rc, "", dir.file("milp.csv"), &milp_out) == 0);
    CHECK(milp_out.algorithm == "milp");
    CHECK(milp_out.steps == 6);

    const auto r2 = eval_report_from_csv(csv::read_text(dir.file("milp.csv")));
    CHECK(r2.mean_profit == doctest::Approx(milp_out.mean_profit));

    // repeat run matches on everything except the wall-time measurement
    EvalOutput repeat;
    CHECK(cmd_evaluate(milp_rc, "", dir.file("milp2.csv"), &repeat) == 0);
    CHECK(repeat.mean_profit == milp_out.mean_profit);
    CHECK(repeat.mean_cost_per_step == milp_out.mean_cost_per_step);
    CHECK(repeat.mean_perf == milp_out.mean_perf);
    // trajectory log carries no timing, so it is byte-identical
    CHECK(csv::read_text(dir.file("milp_trajectory.csv")) ==
          csv::read_text(dir.file("milp2_trajectory.csv")));
    const auto traj = csv::read_file(dir.file("milp_trajectory.csv"));
    CHECK(traj.column("p_target") >= 0);
    CHECK(traj.column("max_v") >= 0);

    const auto train_rc = tiny_cfg(dir, "csac");
    CHECK(cmd_train(train_rc) == 0);
    EvalOutput csac_out;
    CHECK(cmd_evaluate(train_rc, train_rc.out_dir + "/checkpoint.json", dir.file("csac.csv"),
                       &csac_out) == 0);
    CHECK(csac_out.algorithm == "csac");

    // checkpoint against a different config is refused
    auto other = tiny_cfg(dir, "csac");
    other.account.capacity_kw += 1.0;
    CHECK_THROWS((void)cmd_evaluate(other, train_rc.out_dir + "/checkpoint.json",
                                    dir.file("bad.csv"), nullptr));
}

TEST_CASE("zero-episode training yields the initial parameters only") {
    TempDir dir;
    const auto rc = tiny_cfg(dir, "csac");
    auto tc = rc.train;
    tc.episodes = 0;
    const auto feeder = rc.load_feeder();
    const auto result = trainer::train_run(rc.make_env_config(feeder),
                                           rc.make_train_scenarios(),
                                           rc.make_eval_scenarios(), tc, nullptr);
    CHECK(result.metrics.empty());
    env::Environment e(rc.make_env_config(feeder));
    agent::AgentConfig acfg = tc.agent;
    acfg.episode_steps = rc.episode_steps;
    const agent::CsacAgent fresh(e.obs_dim(), e.action_dim(), acfg);
    CHECK(result.agent->net_params("policy") == fresh.net_params("policy"));
    // header-only metrics file still round-trips
    const auto t = csv::parse(trainer::metrics_to_csv(result.metrics));
    CHECK(t.rows.empty());
    CHECK(t.column("eval_profit") >= 0);
}

TEST_CASE("evaluation demands a non-empty scenario list") {
    TempDir dir;
    auto rc = tiny_cfg(dir, "milp");
    rc.eval_scenario_count = 0;
    CHECK_THROWS((void)cmd_evaluate(rc, "", dir.file("r.csv"), nullptr));
}

TEST_CASE("compare tabulates reports and flags the orderings") {
    TempDir dir;
    EvalOutput a{"milp", 10.0, 0.0, 0.01, 0.99, 3, 18};
    EvalOutput b{"csac-sqil", 8.0, 0.1, 0.0001, 0.9, 3, 18};
    EvalOutput c{"csac", 6.0, 0.2, 0.0001, 0.8, 3, 18};
    csv::write_text_atomic(dir.file("a.csv"), eval_report_to_csv(a));
    csv::write_text_atomic(dir.file("b.csv"), eval_report_to_csv(b));
    csv::write_text_atomic(dir.file("c.csv"), eval_report_to_csv(c));
    CHECK(cmd_compare({dir.file("a.csv"), dir.file("b.csv"), dir.file("c.csv")},
                      dir.file("cmp.csv")) == 0);
    const auto table = csv::read_file(dir.file("cmp.csv"));
    CHECK(table.rows.size() == 3);
    const auto md = csv::read_text(dir.file("cmp.md"));
    CHECK(md.find("profit milp >= csac-sqil: PASS") != std::string::npos);
    CHECK(md.find("violations csac-sqil <= csac: PASS") != std::string::npos);
    CHECK_THROWS((void)cmd_compare({dir.file("a.csv")}, dir.file("x.csv")));
}
