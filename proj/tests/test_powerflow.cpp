#include "griddispatch/powerflow.hpp"

#include "griddispatch/parallel.hpp"
#include "griddispatch/rng.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace griddispatch;
using namespace griddispatch::grid;

TEST_CASE("zero load and zero injection leave every voltage at the source") {
    auto f = gdtest::two_node_feeder(0.01, 0.01, 0.0, 0.0);
    const auto sol = solve_linear(f, {});
    CHECK(sol.v_sq[0][0] == doctest::Approx(1.0));
    CHECK(sol.v_sq[1][0] == doctest::Approx(1.0));
    const auto sweep = solve_nonlinear_sweep(f, {});
    CHECK(sweep.v_sq[1][0] == doctest::Approx(1.0));
}

TEST_CASE("two-node feeder matches the hand-evaluated drop") {
    auto f = gdtest::two_node_feeder(); // z = 0.01 + j0.01, load 0.1 + j0.05
    const auto sol = solve_linear(f, {});
    CHECK(sol.edge_p[0][0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(sol.edge_q[0][0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(sol.v_sq[1][0] == doctest::Approx(0.9970).epsilon(1e-12));
    CHECK(sol.v_mag(1, 0) == doctest::Approx(0.99850).epsilon(1e-4));
}

TEST_CASE("battery injection cancels load flow") {
    auto f = gdtest::two_node_feeder();
    InjectionSet inj;
    inj.add(1, 0, +0.1, 0.0); // discharge 0.1 pu at the load node
    const auto sol = solve_linear(f, inj);
    CHECK(sol.edge_p[0][0] == doctest::Approx(0.0));
    CHECK(sol.v_sq[1][0] == doctest::Approx(0.9990).epsilon(1e-12));
}

TEST_CASE("sweep agrees with the linear model on the two-node feeder") {
    auto f = gdtest::two_node_feeder();
    const auto lin = solve_linear(f, {});
    const auto swp = solve_nonlinear_sweep(f, {}, 1e-10, 200);
    CHECK(std::abs(lin.v_mag(1, 0) - swp.v_mag(1, 0)) < 5e-3);
}

TEST_CASE("severe overload makes the sweep fail loudly") {
    // loading beyond the two-bus loadability limit:
    // (2(rP + xQ) - v0^2)^2 < 4 |z|^2 |S|^2 has no real voltage solution
    SUBCASE("x50 load on a stiff 0.05 pu line") {
        auto f = gdtest::two_node_feeder(0.05, 0.05, 5.0, 2.5);
        CHECK_THROWS_AS((void)solve_nonlinear_sweep(f, {}, 1e-10, 200), ConvergenceError);
    }
    SUBCASE("x200 load on the 0.01 pu line") {
        auto f = gdtest::two_node_feeder(0.01, 0.01, 20.0, 10.0);
        CHECK_THROWS_AS((void)solve_nonlinear_sweep(f, {}, 1e-10, 200), ConvergenceError);
    }
}

TEST_CASE("violation counting excludes the source and counts both sides") {
    auto f = gdtest::two_node_feeder(0.01, 0.01, 0.0, 0.0);
    auto sol = solve_linear(f, {});
    CHECK(count_violations(sol, 0.95, 1.05) == 0);

    sol.v_sq[1][0] = 0.93 * 0.93;
    CHECK(count_violations(sol, 0.95, 1.05) == 1);

    // three nodes at 1.06, 1.07, 0.94
    Feeder chain;
    for (int i = 0; i < 4; ++i) {
        Node n;
        n.id = "n" + std::to_string(i);
        n.phases.add(0);
        chain.nodes.push_back(n);
    }
    for (int i = 0; i < 3; ++i) {
        Edge e;
        e.parent = i;
        e.child = i + 1;
        e.phases.add(0);
        e.z[0][0] = Complex(0.01, 0.01);
        chain.edges.push_back(e);
    }
    chain.source = 0;
    auto s2 = solve_linear(chain, {});
    s2.v_sq[1][0] = 1.06 * 1.06;
    s2.v_sq[2][0] = 1.07 * 1.07;
    s2.v_sq[3][0] = 0.94 * 0.94;
    CHECK(count_violations(s2, 0.95, 1.05) == 3);
}

TEST_CASE("feeder validation rejects broken topologies") {
    auto f = gdtest::two_node_feeder();
    SUBCASE("cycle") {
        Edge back;
        back.parent = 1;
        back.child = 0;
        back.phases.add(0);
        f.edges.push_back(back);
        CHECK_THROWS_AS(f.validate(), TopologyError);
    }
    SUBCASE("edge phase missing at endpoint") {
        f.edges[0].phases.add(1);
        CHECK_THROWS_AS(f.validate(), PhaseError);
    }
    SUBCASE("injection on absent phase") {
        InjectionSet inj;
        inj.add(1, 2, 0.1);
        CHECK_THROWS_AS((void)solve_linear(f, inj), PhaseError);
    }
    SUBCASE("crossed limits") {
        f.v_min = 1.1;
        f.v_max = 0.9;
        CHECK_THROWS(f.validate());
    }
}

TEST_CASE("superposition holds for the linear map at zero load") {
    auto f = load_feeder_json(gdtest::data_dir() + "/feeder_13node.json");
    for (auto& n : f.nodes) n.load = {};
    Rng rng(5);
    InjectionSet i1, i2, mix;
    for (std::size_t n = 1; n < f.nodes.size(); ++n)
        for (int p = 0; p < kPhases; ++p)
            if (f.nodes[n].phases.has(p)) {
                const double a = rng.uniform(-0.05, 0.05);
                const double b = rng.uniform(-0.05, 0.05);
                i1.add(static_cast<int>(n), p, a, 0.3 * a);
                i2.add(static_cast<int>(n), p, b, -0.2 * b);
                mix.add(static_cast<int>(n), p, 2.0 * a + 0.5 * b, 2.0 * 0.3 * a - 0.5 * 0.2 * b);
            }
    const double v0 = f.source_v_pu * f.source_v_pu;
    const auto s1 = solve_linear(f, i1);
    const auto s2 = solve_linear(f, i2);
    const auto sm = solve_linear(f, mix);
    for (std::size_t n = 0; n < f.nodes.size(); ++n)
        for (int p = 0; p < kPhases; ++p)
            if (f.nodes[n].phases.has(p)) {
                const double dev = sm.v_sq[n][static_cast<std::size_t>(p)] - v0;
                const double expect = 2.0 * (s1.v_sq[n][static_cast<std::size_t>(p)] - v0) +
                                      0.5 * (s2.v_sq[n][static_cast<std::size_t>(p)] - v0);
                CHECK(dev == doctest::Approx(expect).epsilon(1e-9));
            }
}

TEST_CASE("linear model conserves power at every node") {
    auto f = load_feeder_json(gdtest::data_dir() + "/feeder_13node.json");
    Rng rng(6);
    InjectionSet inj;
    inj.add(f.node_index("675"), 0, rng.uniform(-0.1, 0.1), 0.01);
    inj.add(f.node_index("646"), 1, rng.uniform(-0.1, 0.1), -0.01);
    const auto sol = solve_linear(f, inj);
    auto ch = f.children();
    for (std::size_t e = 0; e < f.edges.size(); ++e) {
        const int j = f.edges[e].child;
        for (int p = 0; p < kPhases; ++p) {
            if (!f.edges[e].phases.has(p)) continue;
            double net = sol.edge_p[e][static_cast<std::size_t>(p)] -
                         f.nodes[static_cast<std::size_t>(j)].load[static_cast<std::size_t>(p)].real();
            for (const auto& en : inj.entries)
                if (en.node == j && en.phase == p) net += en.p_pu;
            for (int k : ch[static_cast<std::size_t>(j)])
                if (f.edges[static_cast<std::size_t>(k)].phases.has(p))
                    net -= sol.edge_p[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)];
            CHECK(std::abs(net) < 1e-9);
        }
    }
}

TEST_CASE("active withdrawal at a leaf never raises downstream voltage") {
    auto f = load_feeder_json(gdtest::data_dir() + "/feeder_13node.json");
    const int leaf = f.node_index("675");
    InjectionSet inj;
    inj.add(leaf, 0, -0.08, 0.0); // pure active withdrawal, phase a

    SUBCASE("every phase, decoupled impedances") {
        // zero the mutual terms; with them, a withdrawal on one phase can
        // legitimately raise a coupled phase
        for (auto& e : f.edges)
            for (int p = 0; p < kPhases; ++p)
                for (int q = 0; q < kPhases; ++q)
                    if (p != q) e.z[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = {};
        const auto base = solve_linear(f, {});
        const auto sol = solve_linear(f, inj);
        for (std::size_t n = 0; n < f.nodes.size(); ++n)
            for (int p = 0; p < kPhases; ++p)
                if (f.nodes[n].phases.has(p))
                    CHECK(sol.v_sq[n][static_cast<std::size_t>(p)] <=
                          base.v_sq[n][static_cast<std::size_t>(p)] + 1e-12);
    }
    SUBCASE("same phase, full coupling") {
        const auto base = solve_linear(f, {});
        const auto sol = solve_linear(f, inj);
        for (std::size_t n = 0; n < f.nodes.size(); ++n)
            if (f.nodes[n].phases.has(0))
                CHECK(sol.v_sq[n][0] <= base.v_sq[n][0] + 1e-12);
    }
}

TEST_CASE("bundled feeders load, validate, and sit inside ANSI limits") {
    for (const char* name : {"/feeder_4node.json", "/feeder_13node.json"}) {
        auto f = load_feeder_json(gdtest::data_dir() + name);
        const auto sol = solve_linear(f, {});
        CHECK(count_violations(sol, f.v_min, f.v_max) == 0);
        CHECK(min_voltage(sol) > f.v_min);
        CHECK(max_voltage(sol) < f.v_max);
    }
}

TEST_CASE("feeder json round trip preserves the solution") {
    auto f = load_feeder_json(gdtest::data_dir() + "/feeder_13node.json");
    auto f2 = parse_feeder_json(feeder_to_json(f));
    const auto s1 = solve_linear(f, {});
    const auto s2 = solve_linear(f2, {});
    for (std::size_t n = 0; n < f.nodes.size(); ++n)
        for (int p = 0; p < kPhases; ++p)
            CHECK(s1.v_sq[n][static_cast<std::size_t>(p)] ==
                  doctest::Approx(s2.v_sq[n][static_cast<std::size_t>(p)]).epsilon(1e-12));
}

TEST_CASE("linear vs sweep stays within 5e-3 pu at half loading") {
    auto f = load_feeder_json(gdtest::data_dir() + "/feeder_13node.json");
    for (auto& n : f.nodes)
        for (auto& l : n.load) l *= 0.5;
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        InjectionSet inj;
        for (std::size_t n = 1; n < f.nodes.size(); ++n)
            for (int p = 0; p < kPhases; ++p)
                if (f.nodes[n].phases.has(p) && rng.uniform() < 0.3)
                    inj.add(static_cast<int>(n), p, rng.uniform(-0.1, 0.1),
                            rng.uniform(-0.05, 0.05));
        const auto lin = solve_linear(f, inj);
        const auto swp = solve_nonlinear_sweep(f, inj, 1e-10, 300);
        for (std::size_t n = 0; n < f.nodes.size(); ++n)
            for (int p = 0; p < kPhases; ++p)
                if (f.nodes[n].phases.has(p))
                    CHECK(std::abs(lin.v_mag(static_cast<int>(n), p) -
                                   swp.v_mag(static_cast<int>(n), p)) < 5e-3);
    }
}

TEST_CASE("batch solve equals one-at-a-time solve for any worker count") {
    auto f = load_feeder_json(gdtest::data_dir() + "/feeder_13node.json");
    Rng rng(23);
    std::vector<InjectionSet> sets(64);
    for (auto& s : sets)
        s.add(f.node_index("671"), 0, rng.uniform(-0.1, 0.1), rng.uniform(-0.02, 0.02));
    set_worker_count(0);
    const auto batch = solve_linear_batch(f, sets);
    set_worker_count(1);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto one = solve_linear(f, sets[i]);
        for (std::size_t n = 0; n < f.nodes.size(); ++n)
            for (int p = 0; p < kPhases; ++p)
                CHECK(batch[i].v_sq[n][static_cast<std::size_t>(p)] ==
                      one.v_sq[n][static_cast<std::size_t>(p)]);
    }
}
