#include "griddispatch/env.hpp"

#include "griddispatch/rng.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace griddispatch;
using namespace griddispatch::env;

namespace {

EnvConfig config_13(int m = 2, int steps = 16) {
    EnvConfig ec;
    ec.feeder = grid::load_feeder_json(gdtest::data_dir() + "/feeder_13node.json");
    const char* nodes[] = {"675", "646", "611", "634"};
    const char phases[] = {'a', 'b', 'c', 'a'};
    for (int i = 0; i < m; ++i) {
        bess::BatterySpec b;
        b.id = "b" + std::to_string(i + 1);
        b.node = nodes[i % 4];
        b.phase = phases[i % 4];
        ec.fleet.push_back(b);
    }
    ec.account.capacity_kw = 10.0;
    ec.account.epsilon_kw = 0.2;
    ec.episode_steps = steps;
    return ec;
}

market::RegulationScenario constant_scenario(double r, double price, std::size_t n,
                                             double step_s = 900.0) {
    market::RegulationScenario s;
    s.id = "const";
    s.step_seconds = step_s;
    s.steps.assign(n, {r, price});
    return s;
}

} // namespace

TEST_CASE("reset is deterministic and seeds the SoC at the initial fraction") {
    Environment e(config_13());
    const auto scenario = market::synthesize_scenario(11, 300, 900.0);
    const auto o1 = e.reset(scenario, 123);
    const auto soc = e.soc_kwh();
    for (std::size_t i = 0; i < soc.size(); ++i)
        CHECK(soc[i] == doctest::Approx(0.5 * e.config().fleet[i].energy_kwh));
    Environment e2(config_13());
    const auto o2 = e2.reset(scenario, 123);
    CHECK(o1 == o2);
    const auto o3 = e2.reset(scenario, 124);
    CHECK(o1 != o3);
}

TEST_CASE("observation layout has the documented size and entries") {
    auto cfg = config_13(3);
    Environment e(cfg);
    const auto scenario = constant_scenario(0.25, 0.5, 40);
    const auto obs = e.reset(scenario, 5);
    const std::size_t phases = cfg.feeder.phase_count() -
                               static_cast<std::size_t>(cfg.feeder.nodes[0].phases.count());
    CHECK(obs.size() == 3 + 1 + 3 * phases);
    CHECK(static_cast<int>(obs.size()) == e.obs_dim());
    for (int i = 0; i < 3; ++i) CHECK(obs[static_cast<std::size_t>(i)] == doctest::Approx(0.5));
    CHECK(obs[3] == doctest::Approx(0.25)); // upcoming instruction
    for (double v : obs) CHECK(std::isfinite(v));
}

TEST_CASE("zero action at zero instruction earns the full capacity payment") {
    Environment e(config_13());
    // 4-second steps keep the feasible range power-limited and symmetric,
    // so the zero action maps to exactly zero power
    const auto scenario = constant_scenario(0.0, 0.5, 40, 4.0);
    e.reset(scenario, 7);
    const auto res = e.step({0.0, 0.0});
    CHECK(res.response_kw == doctest::Approx(0.0));
    CHECK(res.perf == doctest::Approx(1.0));
    CHECK(res.cost == 0);
    CHECK(res.aging == doctest::Approx(0.0));
    CHECK(res.reward == doctest::Approx(0.5 * 10.0 * (4.0 / 3600.0)));
}

TEST_CASE("a full fleet cannot charge: the action map clips to zero") {
    auto cfg = config_13();
    cfg.initial_soc_frac = cfg.fleet[0].soc_max;
    Environment e(cfg);
    e.reset(constant_scenario(0.0, 0.5, 40), 3);
    const auto res = e.step({1.0, 1.0}); // max-charge request
    for (double p : res.applied_kw) CHECK(p <= 0.0 + 1e-12);
}

TEST_CASE("exact tracking at C*r = 5 kW composes the market formulas") {
    auto cfg = config_13(1);
    cfg.account.capacity_kw = 15.0;
    Environment e(cfg);
    const auto scenario = constant_scenario(1.0 / 3.0, 0.5, 40);
    e.reset(scenario, 1);
    CHECK(e.current_target_kw() == doctest::Approx(5.0));
    const auto action = e.action_for_power({-5.0}); // discharge 5 kW
    const auto res = e.step(action);
    CHECK(res.response_kw == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(res.perf == doctest::Approx(1.0));
    const double d = scenario.step_hours();
    CHECK(res.reward == doctest::Approx(0.5 * 15.0 * d - 0.05 * 5.0 * d));
}

TEST_CASE("discounted return handles the edge discounts") {
    CHECK(discounted_return({3.0, 100.0, 100.0}, 0.0) == doctest::Approx(3.0));
    CHECK(discounted_return({1.0, 1.0, 1.0}, 1.0) == doctest::Approx(3.0));
    CHECK(discounted_return({1.0, 2.0, 4.0}, 0.5) == doctest::Approx(3.0));
    CHECK_THROWS((void)discounted_return({1.0}, 1.5));
}

TEST_CASE("episode bookkeeping terminates exactly at the configured length") {
    Environment e(config_13(2, 5));
    e.reset(constant_scenario(0.1, 0.5, 40), 2);
    int n = 0;
    while (!e.done()) {
        const auto res = e.step({0.1, -0.1});
        ++n;
        CHECK(res.done == (n == 5));
    }
    CHECK(n == 5);
    CHECK_THROWS((void)e.step({0.0, 0.0}));
}

TEST_CASE("SoC stays inside the envelope under random extreme actions") {
    Environment e(config_13(2, 64));
    Rng rng(9);
    const auto scenario = market::synthesize_scenario(2, 500, 900.0);
    e.reset(scenario, 19);
    while (!e.done()) {
        const auto res = e.step({rng.uniform(-1.0, 1.0) * 1.0, rng.uniform() < 0.5 ? -1.0 : 1.0});
        for (std::size_t i = 0; i < e.config().fleet.size(); ++i) {
            const auto& b = e.config().fleet[i];
            CHECK(e.soc_kwh()[i] >= b.e_min() - 1e-9);
            CHECK(e.soc_kwh()[i] <= b.e_max() + 1e-9);
        }
        CHECK(res.cost >= 0);
    }
}

TEST_CASE("cost agrees with an independent recount of the power flow") {
    auto cfg = config_13(2);
    Environment e(cfg);
    e.reset(constant_scenario(0.5, 0.5, 40), 21);
    const auto res = e.step({-1.0, -1.0});
    grid::InjectionSet inj;
    for (std::size_t i = 0; i < cfg.fleet.size(); ++i)
        inj.add(cfg.feeder.node_index(cfg.fleet[i].node),
                grid::phase_from_char(cfg.fleet[i].phase),
                -res.applied_kw[i] / cfg.feeder.base_kva, 0.0);
    const auto sol = grid::solve_linear(cfg.feeder, inj);
    CHECK(res.cost == grid::count_violations(sol, cfg.feeder.v_min, cfg.feeder.v_max));
    CHECK(res.min_v == doctest::Approx(grid::min_voltage(sol)));
}

TEST_CASE("action map is monotone per component") {
    Environment e(config_13(2));
    e.reset(constant_scenario(0.0, 0.5, 40), 4);
    double prev = -1e18;
    for (double a = -1.0; a <= 1.0; a += 0.125) {
        const auto p = e.applied_power({a, 0.0});
        CHECK(p[0] >= prev - 1e-12);
        prev = p[0];
    }
    // out-of-range actions are clipped, not rejected
    const auto lo = e.applied_power({-5.0, 0.0});
    const auto hi = e.applied_power({5.0, 0.0});
    CHECK(lo[0] == e.applied_power({-1.0, 0.0})[0]);
    CHECK(hi[0] == e.applied_power({1.0, 0.0})[0]);
}

TEST_CASE("identical seeds and actions give bitwise-identical trajectories") {
    auto run = [&](std::vector<double>& rewards) {
        Environment e(config_13(2, 12));
        const auto scenario = market::synthesize_scenario(31, 300, 900.0);
        e.reset(scenario, 77);
        Rng rng(5);
        while (!e.done()) {
            const auto res = e.step({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
            rewards.push_back(res.reward);
        }
    };
    std::vector<double> r1, r2;
    run(r1);
    run(r2);
    CHECK(r1 == r2);
}

TEST_CASE("misplaced fleet members are rejected at construction") {
    auto cfg = config_13(1);
    cfg.fleet[0].node = "unknown";
    CHECK_THROWS(Environment{cfg});
    auto cfg2 = config_13(1);
    cfg2.fleet[0].node = "611"; // c-only node
    cfg2.fleet[0].phase = 'a';
    CHECK_THROWS_AS(Environment{cfg2}, grid::PhaseError);
}
