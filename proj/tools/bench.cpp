// Compares the serial reference implementations against the OpenMP kernels:
// batch MLP gradients, batch linear power flow, and batch dispatch solves.

#include "griddispatch/expert.hpp"
#include "griddispatch/mlp.hpp"
#include "griddispatch/parallel.hpp"
#include "griddispatch/powerflow.hpp"
#include "griddispatch/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

using namespace griddispatch;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

grid::Feeder bench_feeder() {
    // 13-node three-phase feeder bundled with the repo
    const char* dir = std::getenv("GD_DATA_DIR");
    const std::string path = std::string(dir ? dir : "data") + "/feeder_13node.json";
    return grid::load_feeder_json(path);
}

struct Timing {
    double serial = 0.0;
    double parallel = 0.0;
};

void report(const char* name, const Timing& t, double max_diff) {
    std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %5.2fx   max|diff| %g\n",
                name, t.serial, t.parallel, t.serial / t.parallel, max_diff);
}

Timing bench_mlp_gradient(double& max_diff) {
    Rng rng(42);
    learn::Mlp net = learn::Mlp::make({110, 64, 32, 5}, learn::Activation::Relu,
                                      learn::Activation::Identity, rng);
    const std::size_t n = 4096;
    std::vector<std::vector<double>> inputs(n, std::vector<double>(110));
    std::vector<std::vector<double>> targets(n, std::vector<double>(5));
    for (auto& v : inputs)
        for (auto& x : v) x = rng.normal();
    for (auto& v : targets)
        for (auto& x : v) x = rng.normal();

    Timing t;
    set_worker_count(1);
    (void)learn::mse_batch_gradient_serial(net, inputs, targets); // warm up
    double t0 = now_s();
    const auto g_serial = learn::mse_batch_gradient_serial(net, inputs, targets);
    t.serial = now_s() - t0;
    set_worker_count(0);
    (void)learn::mse_batch_gradient(net, inputs, targets);
    t0 = now_s();
    const auto g_parallel = learn::mse_batch_gradient(net, inputs, targets);
    t.parallel = now_s() - t0;
    max_diff = 0.0;
    for (std::size_t i = 0; i < g_serial.size(); ++i)
        max_diff = std::max(max_diff, std::abs(g_serial[i] - g_parallel[i]));
    return t;
}

Timing bench_powerflow(double& max_diff) {
    // the fidelity-check workload: one linear solve plus one converged
    // sweep per injection set
    const auto feeder = bench_feeder();
    Rng rng(7);
    const std::size_t n = 3000;
    std::vector<grid::InjectionSet> sets(n);
    for (auto& s : sets)
        for (std::size_t node = 1; node < feeder.nodes.size(); ++node)
            for (int p = 0; p < grid::kPhases; ++p)
                if (feeder.nodes[node].phases.has(p))
                    s.add(static_cast<int>(node), p, rng.uniform(-0.05, 0.05),
                          rng.uniform(-0.02, 0.02));

    auto run = [&](std::vector<double>& gaps) {
        parallel_for(n, [&](std::size_t i) {
            const auto lin = grid::solve_linear(feeder, sets[i]);
            const auto swp = grid::solve_nonlinear_sweep(feeder, sets[i], 1e-10, 300);
            double g = 0.0;
            for (std::size_t node = 0; node < feeder.nodes.size(); ++node)
                for (int p = 0; p < grid::kPhases; ++p)
                    if (feeder.nodes[node].phases.has(p))
                        g = std::max(g, std::abs(lin.v_mag(static_cast<int>(node), p) -
                                                 swp.v_mag(static_cast<int>(node), p)));
            gaps[i] = g;
        });
    };
    std::vector<double> gap_serial(n), gap_parallel(n);
    Timing t;
    set_worker_count(1);
    double t0 = now_s();
    run(gap_serial);
    t.serial = now_s() - t0;
    set_worker_count(0);
    t0 = now_s();
    run(gap_parallel);
    t.parallel = now_s() - t0;
    max_diff = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        max_diff = std::max(max_diff, std::abs(gap_serial[i] - gap_parallel[i]));
    return t;
}

Timing bench_dispatch(double& max_diff) {
    const auto feeder = bench_feeder();
    Rng rng(11);
    const int instances = 96;
    std::vector<expert::DispatchProblem> problems;
    for (int k = 0; k < instances; ++k) {
        expert::DispatchProblem dp;
        dp.feeder = &feeder;
        const char* nodes[] = {"634", "671", "675", "680", "652"};
        for (int i = 0; i < 5; ++i) {
            bess::BatterySpec b;
            b.id = "b" + std::to_string(i);
            b.node = nodes[i];
            b.phase = 'a';
            dp.fleet.push_back(b);
            dp.initial_energy_kwh.push_back(0.5 * b.energy_kwh);
        }
        dp.horizon = 1;
        dp.step_hours = 0.25;
        dp.target_kw = {rng.uniform(-12.0, 12.0)};
        dp.price = {0.5};
        dp.account.capacity_kw = 15.0;
        dp.account.epsilon_kw = 0.3;
        problems.push_back(std::move(dp));
    }

    std::vector<double> obj_serial(problems.size()), obj_parallel(problems.size());
    Timing t;
    set_worker_count(1);
    double t0 = now_s();
    for (std::size_t k = 0; k < problems.size(); ++k)
        obj_serial[k] = expert::solve_dispatch(problems[k]).objective;
    t.serial = now_s() - t0;
    set_worker_count(0);
    t0 = now_s();
    parallel_for(problems.size(), [&](std::size_t k) {
        obj_parallel[k] = expert::solve_dispatch(problems[k]).objective;
    });
    t.parallel = now_s() - t0;
    max_diff = 0.0;
    for (std::size_t k = 0; k < problems.size(); ++k)
        max_diff = std::max(max_diff, std::abs(obj_serial[k] - obj_parallel[k]));
    return t;
}

} // namespace

int main() {
    std::printf("griddispatch kernel benchmark (workers: serial vs all cores)\n\n");
    double diff = 0.0;
    auto t = bench_mlp_gradient(diff);
    report("mlp batch gradient", t, diff);
    t = bench_powerflow(diff);
    report("power-flow fidelity batch", t, diff);
    t = bench_dispatch(diff);
    report("dispatch MILP batch", t, diff);
    return 0;
}
