#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace griddispatch::bess {

struct SocError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Battery ratings and placement. Sign convention throughout this module:
// positive power charges the battery (withdrawal from the grid).
struct BatterySpec {
    std::string id;
    std::string node;      // feeder node id
    char phase = 'a';
    double power_kw = 10.0;     // symmetric +/- rating
    double energy_kwh = 4.21;
    double efficiency = 0.9;    // single-trip, in (0, 1]
    double soc_min = 0.1;       // fraction of energy_kwh
    double soc_max = 0.9;
    double priority = 1.0;      // dispatch priority weight in [0, 1]
    bool available = true;      // availability interval AI
    double energy_budget_kwh = -1.0; // per-interval throughput cap; <0 = unlimited

    void validate() const;
    double e_min() const { return soc_min * energy_kwh; }
    double e_max() const { return soc_max * energy_kwh; }
};

struct FleetState {
    std::vector<double> energy_kwh; // per battery, aligned with the spec list
    double step_hours = 4.0 / 3600.0;
    long step = 0;
};

// SoC recursion: e' = e + d*eta*max(p,0) - d*max(-p,0)/eta.
// Throws SocError when the result leaves [soc_min, soc_max]*E (beyond a
// 1e-9 numerical slack); clip through feasible_power_range to avoid that.
double step_soc(const BatterySpec& spec, double e_prev_kwh, double p_kw, double d_hours);

struct PowerRange {
    double lo_kw = 0.0;
    double hi_kw = 0.0;
    double clip(double p_kw) const;
    double mid() const { return 0.5 * (lo_kw + hi_kw); }
    double half() const { return 0.5 * (hi_kw - lo_kw); }
};

// Tightest power interval that keeps step_soc inside the SoC envelope and
// the rating box; (0, 0) when the battery is unavailable.
PowerRange feasible_power_range(const BatterySpec& spec, double e_kwh, double d_hours);

} // namespace griddispatch::bess
