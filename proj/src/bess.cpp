#include "griddispatch/bess.hpp"

#include <algorithm>
#include <cmath>

namespace griddispatch::bess {

void BatterySpec::validate() const {
    if (!(power_kw > 0.0)) throw std::runtime_error("battery '" + id + "': power rating must be > 0");
    if (!(energy_kwh > 0.0)) throw std::runtime_error("battery '" + id + "': energy rating must be > 0");
    if (!(efficiency > 0.0) || efficiency > 1.0)
        throw std::runtime_error("battery '" + id + "': efficiency must be in (0, 1]");
    if (!(soc_min < soc_max) || soc_min < 0.0 || soc_max > 1.0)
        throw std::runtime_error("battery '" + id + "': need 0 <= soc_min < soc_max <= 1");
    if (priority < 0.0 || priority > 1.0)
        throw std::runtime_error("battery '" + id + "': priority must be in [0, 1]");
}

double step_soc(const BatterySpec& spec, double e_prev_kwh, double p_kw, double d_hours) {
    const double charge = std::max(p_kw, 0.0);
    const double discharge = std::max(-p_kw, 0.0);
    const double e = e_prev_kwh + d_hours * spec.efficiency * charge -
                     d_hours * discharge / spec.efficiency;
    constexpr double slack = 1e-9;
    if (e < spec.e_min() - slack || e > spec.e_max() + slack)
        throw SocError("battery '" + spec.id + "': step leaves SoC envelope (" +
                       std::to_string(e) + " kWh)");
    return e;
}

double PowerRange::clip(double p_kw) const {
    return std::clamp(p_kw, lo_kw, hi_kw);
}

PowerRange feasible_power_range(const BatterySpec& spec, double e_kwh, double d_hours) {
    if (!spec.available) return {0.0, 0.0};
    const double headroom = std::max(0.0, spec.e_max() - e_kwh);
    const double reserve = std::max(0.0, e_kwh - spec.e_min());
    PowerRange r;
    // charging raises e by d*eta*p; discharging lowers it by d*p/eta
    r.hi_kw = std::min(spec.power_kw, headroom / (d_hours * spec.efficiency));
    r.lo_kw = std::max(-spec.power_kw, -reserve * spec.efficiency / d_hours);
    if (r.hi_kw < 0.0) r.hi_kw = 0.0;
    if (r.lo_kw > 0.0) r.lo_kw = 0.0;
    return r;
}

} // namespace griddispatch::bess
