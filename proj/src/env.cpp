#include "griddispatch/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace griddispatch::env {

void EnvConfig::validate() const {
    feeder.validate();
    account.validate();
    if (fleet.empty()) throw std::runtime_error("env: fleet is empty");
    for (const auto& b : fleet) b.validate();
    if (initial_soc_frac < 0.0 || initial_soc_frac > 1.0)
        throw std::runtime_error("env: initial SoC fraction outside [0, 1]");
    if (episode_steps <= 0) throw std::runtime_error("env: episode_steps must be > 0");
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    battery_node_.reserve(cfg_.fleet.size());
    battery_phase_.reserve(cfg_.fleet.size());
    for (const auto& b : cfg_.fleet) {
        const int ni = cfg_.feeder.node_index(b.node);
        if (ni < 0)
            throw std::runtime_error("env: battery '" + b.id + "' placed on unknown node '" +
                                     b.node + "'");
        const int ph = grid::phase_from_char(b.phase);
        if (!cfg_.feeder.nodes[static_cast<std::size_t>(ni)].phases.has(ph))
            throw grid::PhaseError("env: battery '" + b.id + "' placed on absent phase");
        battery_node_.push_back(ni);
        battery_phase_.push_back(ph);
    }
    energy_kwh_.assign(cfg_.fleet.size(), 0.0);
}

int Environment::obs_dim() const {
    const std::size_t phases = cfg_.feeder.phase_count() -
        static_cast<std::size_t>(cfg_.feeder.nodes[static_cast<std::size_t>(cfg_.feeder.source)]
                                     .phases.count());
    return static_cast<int>(cfg_.fleet.size() + 1 + 3 * phases);
}

double Environment::current_instruction() const {
    return scenario_->steps[cursor_].r;
}

double Environment::current_price() const {
    return scenario_->steps[cursor_].price;
}

double Environment::current_target_kw() const {
    return cfg_.account.capacity_kw * current_instruction();
}

const std::vector<double>& Environment::reset(const market::RegulationScenario& scenario,
                                              std::uint64_t seed) {
    scenario.validate();
    owned_scenario_ = scenario;
    scenario_ = &owned_scenario_;
    rng_ = Rng(seed);
    cursor_ = static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<std::int64_t>(scenario_->size()) - 1));
    steps_taken_ = 0;
    for (std::size_t i = 0; i < cfg_.fleet.size(); ++i) {
        const auto& b = cfg_.fleet[i];
        const double frac = std::clamp(cfg_.initial_soc_frac, b.soc_min, b.soc_max);
        energy_kwh_[i] = frac * b.energy_kwh;
    }
    grid::InjectionSet none;
    const auto sol = grid::solve_linear(cfg_.feeder, none);
    assemble_observation(sol, none);
    return obs_;
}

grid::InjectionSet Environment::injections_for(const std::vector<double>& applied_kw) const {
    grid::InjectionSet inj;
    for (std::size_t i = 0; i < cfg_.fleet.size(); ++i) {
        // charge positive battery-side; grid injection is the negation
        const double p_pu = -applied_kw[i] / cfg_.feeder.base_kva;
        inj.add(battery_node_[i], battery_phase_[i], p_pu, 0.0);
    }
    return inj;
}

std::vector<double> Environment::applied_power(const std::vector<double>& action) const {
    if (action.size() != cfg_.fleet.size())
        throw std::runtime_error("env: action length != battery count");
    std::vector<double> p(cfg_.fleet.size());
    const double d = scenario_->step_hours();
    for (std::size_t i = 0; i < cfg_.fleet.size(); ++i) {
        const auto range = bess::feasible_power_range(cfg_.fleet[i], energy_kwh_[i], d);
        const double a = std::clamp(action[i], -1.0, 1.0);
        p[i] = range.mid() + a * range.half();
    }
    return p;
}

std::vector<double> Environment::action_for_power(const std::vector<double>& p_kw) const {
    if (p_kw.size() != cfg_.fleet.size())
        throw std::runtime_error("env: power vector length != battery count");
    std::vector<double> a(cfg_.fleet.size(), 0.0);
    const double d = scenario_->step_hours();
    for (std::size_t i = 0; i < cfg_.fleet.size(); ++i) {
        const auto range = bess::feasible_power_range(cfg_.fleet[i], energy_kwh_[i], d);
        if (range.half() > 1e-12)
            a[i] = std::clamp((range.clip(p_kw[i]) - range.mid()) / range.half(), -1.0, 1.0);
    }
    return a;
}

StepResult Environment::step(const std::vector<double>& action) {
    if (scenario_ == nullptr) throw std::runtime_error("env: step before reset");
    if (done()) throw std::runtime_error("env: episode already finished");

    StepResult out;
    const double d = scenario_->step_hours();
    const double r = current_instruction();
    const double price = current_price();
    out.target_kw = current_target_kw();

    out.applied_kw = applied_power(action);
    for (std::size_t i = 0; i < cfg_.fleet.size(); ++i)
        energy_kwh_[i] = bess::step_soc(cfg_.fleet[i], energy_kwh_[i], out.applied_kw[i], d);

    const auto inj = injections_for(out.applied_kw);
    const auto sol = grid::solve_linear(cfg_.feeder, inj);

    double response = 0.0; // grid injection, kW (discharge positive)
    for (double p : out.applied_kw) response -= p;
    out.response_kw = response;

    out.perf = market::performance_index(cfg_.account.capacity_kw, r, response, price,
                                         cfg_.account.epsilon_kw);
    out.revenue = market::step_revenue(out.perf, price, cfg_.account.capacity_kw, d);
    out.aging = market::aging_cost(out.applied_kw, d, cfg_.account.aging_cost_per_kwh);
    out.reward = out.revenue - out.aging;
    out.cost = grid::count_violations(sol, cfg_.feeder.v_min, cfg_.feeder.v_max);
    out.min_v = grid::min_voltage(sol);
    out.max_v = grid::max_voltage(sol);

    ++steps_taken_;
    cursor_ = (cursor_ + 1) % scenario_->size();
    out.done = done();

    assemble_observation(sol, inj);
    return out;
}

void Environment::assemble_observation(const grid::PowerFlowSolution& sol,
                                       const grid::InjectionSet& inj) {
    obs_.clear();
    obs_.reserve(static_cast<std::size_t>(obs_dim()));
    for (std::size_t i = 0; i < cfg_.fleet.size(); ++i)
        obs_.push_back(energy_kwh_[i] / cfg_.fleet[i].energy_kwh);
    obs_.push_back(current_instruction());

    // net nodal injection = controllable injection - load
    for (std::size_t n = 0; n < cfg_.feeder.nodes.size(); ++n) {
        if (static_cast<int>(n) == cfg_.feeder.source) continue;
        for (int p = 0; p < grid::kPhases; ++p) {
            if (!cfg_.feeder.nodes[n].phases.has(p)) continue;
            double pi = -cfg_.feeder.nodes[n].load[static_cast<std::size_t>(p)].real();
            double qi = -cfg_.feeder.nodes[n].load[static_cast<std::size_t>(p)].imag();
            for (const auto& e : inj.entries)
                if (e.node == static_cast<int>(n) && e.phase == p) {
                    pi += e.p_pu;
                    qi += e.q_pu;
                }
            obs_.push_back(pi);
            obs_.push_back(qi);
            obs_.push_back((sol.v_mag(static_cast<int>(n), p) - 1.0) * 10.0);
        }
    }
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
    if (gamma < 0.0 || gamma > 1.0)
        throw std::runtime_error("discounted_return: gamma outside [0, 1]");
    double acc = 0.0;
    double g = 1.0;
    for (double r : rewards) {
        acc += g * r;
        g *= gamma;
    }
    return acc;
}

} // namespace griddispatch::env
