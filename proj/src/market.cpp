#include "griddispatch/market.hpp"

#include "griddispatch/csv.hpp"
#include "griddispatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace griddispatch::market {

void RegulationScenario::validate() const {
    if (steps.empty()) throw std::runtime_error("scenario '" + id + "' has no steps");
    if (!(step_seconds > 0.0)) throw std::runtime_error("scenario step duration must be > 0");
    for (std::size_t t = 0; t < steps.size(); ++t) {
        if (std::abs(steps[t].r) > 1.0)
            throw std::runtime_error("scenario '" + id + "': |r| > 1 at step " + std::to_string(t));
        if (steps[t].price < 0.0)
            throw std::runtime_error("scenario '" + id + "': negative price at step " + std::to_string(t));
    }
}

void MarketAccount::validate() const {
    if (capacity_kw < 0.0 || capacity_kw > capacity_cap_kw)
        throw std::runtime_error("market: need 0 <= C <= B");
    if (rho_min < 0.0 || rho_min > 1.0) throw std::runtime_error("market: rho_min outside [0, 1]");
    if (epsilon_kw < 0.0) throw std::runtime_error("market: epsilon must be >= 0");
    if (perf_prev < 0.0 || perf_prev > 1.0)
        throw std::runtime_error("market: previous performance outside [0, 1]");
}

double performance_index(double capacity_kw, double instruction, double response_kw,
                         double price_weight, double eps_kw) {
    if (!(capacity_kw > 0.0)) throw std::runtime_error("performance_index: capacity must be > 0");
    if (std::abs(instruction) < 1e-12)
        return std::abs(response_kw) <= eps_kw ? 1.0 : 0.0;
    const double err = std::abs(capacity_kw * instruction - response_kw) /
                       (capacity_kw * std::abs(instruction));
    return std::clamp(1.0 - err * price_weight, 0.0, 1.0);
}

double step_revenue(double perf, double price_per_kw, double capacity_kw, double hours) {
    return perf * price_per_kw * capacity_kw * hours;
}

double aging_cost(const std::vector<double>& dispatch_kw, double d_hours,
                  double cost_per_kwh) {
    if (cost_per_kwh < 0.0) throw std::runtime_error("aging cost coefficient must be >= 0");
    double throughput = 0.0;
    for (double p : dispatch_kw) throughput += std::abs(p);
    return cost_per_kwh * throughput * d_hours;
}

RegulationScenario parse_scenario_csv(const std::string& text) {
    const auto table = csv::parse(text);
    const int ct = table.column("t");
    const int cr = table.column("r");
    const int cp = table.column("price");
    if (ct < 0 || cr < 0 || cp < 0)
        throw std::runtime_error("scenario csv: header must contain t,r,price");
    RegulationScenario s;
    s.id = "file";
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        s.steps.push_back({table.num(i, cr), table.num(i, cp)});
    s.validate();
    return s;
}

RegulationScenario load_scenario(const std::string& path) {
    auto s = parse_scenario_csv(csv::read_text(path));
    s.id = path;
    return s;
}

std::string scenario_to_csv(const RegulationScenario& s) {
    csv::Writer w({"t", "r", "price"});
    for (std::size_t t = 0; t < s.steps.size(); ++t)
        w.add_row({std::to_string(t), csv::format_num(s.steps[t].r),
                   csv::format_num(s.steps[t].price)});
    return w.str();
}

RegulationScenario synthesize_scenario(std::uint64_t seed, std::size_t steps,
                                       double step_seconds) {
    if (steps == 0) throw std::runtime_error("synthesize_scenario: steps must be > 0");
    Rng rng(seed);
    RegulationScenario s;
    s.id = "synth-" + std::to_string(seed);
    s.step_seconds = step_seconds;
    s.steps.reserve(steps);
    double r = 0.0;
    double price = 0.5;
    for (std::size_t t = 0; t < steps; ++t) {
        r = std::clamp(0.95 * r + 0.15 * rng.normal(), -1.0, 1.0);
        price = std::max(0.0, 0.9 * price + 0.1 * 0.5 + 0.05 * rng.normal());
        s.steps.push_back({r, price});
    }
    s.validate();
    return s;
}

} // namespace griddispatch::market
