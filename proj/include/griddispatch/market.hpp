#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace griddispatch::market {

// One normalized regulation step: instruction in [-1, 1] and the clearing
// price in $/kW for that interval.
struct RegulationStep {
    double r = 0.0;
    double price = 0.5;
};

struct RegulationScenario {
    std::string id;
    double step_seconds = 4.0;
    std::vector<RegulationStep> steps;

    double step_hours() const { return step_seconds / 3600.0; }
    std::size_t size() const { return steps.size(); }
    double target_kw(std::size_t t, double capacity_kw) const {
        return capacity_kw * steps[t].r;
    }
    void validate() const;
};

struct MarketAccount {
    double capacity_kw = 15.0;     // committed regulation capacity C
    double capacity_cap_kw = 50.0; // B, upper bound on C
    double rho_min = 0.4;          // minimum performance index
    double epsilon_kw = 0.3;       // dispatch tolerance (default 2% of C)
    double perf_prev = 1.0;        // previous-interval performance index
    double aging_cost_per_kwh = 0.05;

    void validate() const;
};

// Tracking-quality score 1 - (|C r - b| / (C |r|)) * delta, clamped to
// [0, 1]. For r == 0 the score is 1 when |b| <= eps_kw and 0 otherwise.
double performance_index(double capacity_kw, double instruction, double response_kw,
                         double price_weight, double eps_kw);

// Capacity payment for one step: perf * price * C, prorated over the hour.
double step_revenue(double perf, double price_per_kw, double capacity_kw, double hours);

// Linear throughput aging proxy: c_age * sum |p_i| * d.
double aging_cost(const std::vector<double>& dispatch_kw, double d_hours,
                  double cost_per_kwh);

// CSV schema: header "t,r,price".
RegulationScenario load_scenario(const std::string& path);
RegulationScenario parse_scenario_csv(const std::string& text);
std::string scenario_to_csv(const RegulationScenario& s);

// Mean-reverting synthetic instruction series
//   r_{t+1} = clamp(0.95 r_t + 0.15 noise, -1, 1)
// with a positive mean-reverting price series; reproducible from the seed.
RegulationScenario synthesize_scenario(std::uint64_t seed, std::size_t steps,
                                       double step_seconds = 4.0);

} // namespace griddispatch::market
