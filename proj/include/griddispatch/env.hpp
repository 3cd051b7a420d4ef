#pragma once

#include "griddispatch/bess.hpp"
#include "griddispatch/feeder.hpp"
#include "griddispatch/market.hpp"
#include "griddispatch/powerflow.hpp"
#include "griddispatch/rng.hpp"

#include <cstdint>
#include <vector>

namespace griddispatch::env {

struct EnvConfig {
    grid::Feeder feeder;
    std::vector<bess::BatterySpec> fleet;
    market::MarketAccount account;
    double initial_soc_frac = 0.5;
    int episode_steps = 450;

    void validate() const;
};

// One (s, a, r, c, s') tuple; demo marks expert-generated samples.
struct Transition {
    std::vector<double> state;
    std::vector<double> action;
    std::vector<double> next_state;
    double reward = 0.0;
    double cost = 0.0; // violation count, integer-valued
    bool done = false;
    bool demo = false;
};

struct StepResult {
    double reward = 0.0;   // revenue - aging, $
    int cost = 0;          // voltage violations this step
    bool done = false;
    // diagnostics
    double target_kw = 0.0;
    double response_kw = 0.0;
    double perf = 0.0;
    double revenue = 0.0;
    double aging = 0.0;
    double min_v = 0.0;
    double max_v = 0.0;
    std::vector<double> applied_kw; // battery convention (charge positive)
};

// The constrained MDP: battery SoC dynamics + linear power flow + market
// scoring, driven by a regulation scenario.
//
// Observation layout (all entries documented normalizations):
//   [0, m)            battery SoC fractions e_i / E_i, in [0, 1]
//   [m]               upcoming normalized instruction r_t, in [-1, 1]
//   then for every non-source (node, phase) in node-major order:
//     net active injection, pu; net reactive injection, pu;
//     (|V| - 1) * 10, dimensionless
// from the most recent power flow (the baseline flow right after reset).
class Environment {
public:
    explicit Environment(EnvConfig cfg);

    int action_dim() const { return static_cast<int>(cfg_.fleet.size()); }
    int obs_dim() const;

    const std::vector<double>& reset(const market::RegulationScenario& scenario,
                                     std::uint64_t seed);
    // action: per-battery normalized values in [-1, 1], mapped affinely onto
    // the feasible power range (so any finite input is safe).
    StepResult step(const std::vector<double>& action);

    const std::vector<double>& observation() const { return obs_; }
    const EnvConfig& config() const { return cfg_; }
    const std::vector<double>& soc_kwh() const { return energy_kwh_; }
    int steps_taken() const { return steps_taken_; }
    bool done() const { return steps_taken_ >= cfg_.episode_steps; }

    // scenario step about to be applied
    double current_instruction() const;
    double current_price() const;
    double current_target_kw() const;
    double step_hours() const { return scenario_->step_hours(); }

    // normalized action that realizes the requested battery-side powers
    // (charge positive) under the current feasible ranges
    std::vector<double> action_for_power(const std::vector<double>& p_kw) const;
    std::vector<double> applied_power(const std::vector<double>& action) const;

private:
    EnvConfig cfg_;
    const market::RegulationScenario* scenario_ = nullptr;
    market::RegulationScenario owned_scenario_;
    std::vector<int> battery_node_;
    std::vector<int> battery_phase_;
    std::vector<double> energy_kwh_;
    std::vector<double> obs_;
    std::size_t cursor_ = 0;
    int steps_taken_ = 0;
    Rng rng_{0};

    void assemble_observation(const grid::PowerFlowSolution& sol,
                              const grid::InjectionSet& inj);
    grid::InjectionSet injections_for(const std::vector<double>& applied_kw) const;
};

// Sum of gamma^i * rewards[i] over the remaining horizon.
double discounted_return(const std::vector<double>& rewards, double gamma);

} // namespace griddispatch::env
