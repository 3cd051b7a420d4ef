#pragma once

#include "griddispatch/bess.hpp"
#include "griddispatch/env.hpp"
#include "griddispatch/feeder.hpp"
#include "griddispatch/lp.hpp"
#include "griddispatch/market.hpp"
#include "griddispatch/powerflow.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace griddispatch::expert {

// Raised when the previous-interval performance index fails the market's
// minimum, which makes the whole dispatch infeasible by construction.
struct PerformanceGateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PlacementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DispatchProblem {
    const grid::Feeder* feeder = nullptr;
    std::vector<bess::BatterySpec> fleet;
    std::vector<double> initial_energy_kwh; // per battery
    int horizon = 1;
    double step_hours = 4.0 / 3600.0;
    std::vector<double> target_kw; // per step, signed (discharge direction positive)
    std::vector<double> price;     // clearing price per step, $/kW
    market::MarketAccount account;
    // squared-voltage guard band keeping optimal schedules strictly inside
    // the box after re-simulation
    double v_margin = 1e-6;

    void validate() const;
};

// Variable indices of a built dispatch LP, exposed for tests and for
// schedule extraction.
struct VarMap {
    int num_batteries = 0;
    int horizon = 0;
    int discharge0 = 0; // P+ block, battery-major then step
    int charge0 = 0;    // P- block
    int energy0 = 0;    // e block
    int capacity = 0;   // C
    int flow0 = 0;      // per-step network blocks start here

    int discharge(int i, int t) const { return discharge0 + i * horizon + t; }
    int charge(int i, int t) const { return charge0 + i * horizon + t; }
    int energy(int i, int t) const { return energy0 + i * horizon + t; }
};

struct BuiltProblem {
    lp::LpProblem problem;
    std::vector<lp::ComplementarityPair> pairs;
    VarMap map;
};

// Encodes the dispatch optimization: tracking band, availability-scaled
// ratings, throughput budget, SoC recursion with split-variable
// efficiency, linear power flow on every step, and the squared-voltage box.
BuiltProblem build_problem(const DispatchProblem& dp);

struct DispatchSchedule {
    lp::LpStatus status = lp::LpStatus::Infeasible;
    // per battery per step, grid sign convention (discharge positive)
    std::vector<std::vector<double>> p_kw;
    std::vector<std::vector<double>> energy_kwh; // solver's internal SoC path
    double capacity_kw = 0.0;
    double objective = 0.0;
    double wall_time_s = 0.0;
    long nodes = 0;
    // predicted per-step flows from re-simulating the schedule
    std::vector<grid::PowerFlowSolution> flows;

    // battery-convention powers (charge positive) for step t
    std::vector<double> battery_kw(int t) const;
};

DispatchSchedule solve_dispatch(const DispatchProblem& dp,
                                const lp::SolveOptions& opts = {});

// Receding-horizon (h = 1) expert usable as an environment policy. When the
// strict problem is infeasible (e.g. a depleted fleet cannot reach the
// band), falls back to a best-effort variant that pushes the response as
// close to the target as physics allows.
class ExpertPolicy {
public:
    ExpertPolicy(const grid::Feeder& feeder, lp::SolveOptions opts = {});

    struct Decision {
        std::vector<double> action;     // env normalized convention
        std::vector<double> battery_kw; // charge positive
        bool strict_optimal = false;    // true when the banded problem solved
        double solve_seconds = 0.0;
    };
    Decision decide(const env::Environment& e) const;

    long fallback_count() const { return fallbacks_; }

private:
    const grid::Feeder* feeder_;
    lp::SolveOptions opts_;
    mutable long fallbacks_ = 0;
};

struct DemoStats {
    int episodes = 0;
    int emitted = 0;
    int skipped = 0; // steps where only the best-effort problem solved
};

// Rolls the expert through the environment and emits SQIL demonstration
// transitions (reward +1, demo flag set). Steps where the strict problem
// was infeasible are applied best-effort but not emitted.
std::vector<env::Transition> generate_demonstrations(
    env::Environment& e, const ExpertPolicy& policy,
    const std::vector<market::RegulationScenario>& scenarios, int episodes_per_scenario,
    std::uint64_t seed, DemoStats* stats = nullptr);

// demo file schema helpers (CSV with flattened vectors)
std::string demos_to_csv(const std::vector<env::Transition>& demos);
std::vector<env::Transition> demos_from_csv(const std::string& text);

} // namespace griddispatch::expert
