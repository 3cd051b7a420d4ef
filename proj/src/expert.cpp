#include "griddispatch/expert.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace griddispatch::expert {

using grid::Complex;

void DispatchProblem::validate() const {
    if (feeder == nullptr) throw std::runtime_error("dispatch: feeder not set");
    feeder->validate();
    account.validate();
    if (horizon < 1) throw std::runtime_error("dispatch: horizon must be >= 1");
    if (!(step_hours > 0.0)) throw std::runtime_error("dispatch: step duration must be > 0");
    if (static_cast<int>(target_kw.size()) != horizon)
        throw std::runtime_error("dispatch: target count != horizon");
    if (static_cast<int>(price.size()) != horizon)
        throw std::runtime_error("dispatch: price count != horizon");
    for (double t : target_kw)
        if (!std::isfinite(t)) throw std::runtime_error("dispatch: non-finite target");
    if (fleet.empty()) throw std::runtime_error("dispatch: fleet is empty");
    if (initial_energy_kwh.size() != fleet.size())
        throw std::runtime_error("dispatch: initial energy count != fleet size");
    for (const auto& b : fleet) b.validate();
}

namespace {

// per-feeder slot tables for the network variables of one step
struct NetworkLayout {
    int edge_phase_count = 0;
    int node_phase_count = 0; // non-source
    std::vector<std::array<int, grid::kPhases>> edge_slot;
    std::vector<std::array<int, grid::kPhases>> node_slot;
    std::vector<int> upstream_edge; // per node, -1 at source

    explicit NetworkLayout(const grid::Feeder& f) {
        edge_slot.assign(f.edges.size(), {-1, -1, -1});
        node_slot.assign(f.nodes.size(), {-1, -1, -1});
        upstream_edge.assign(f.nodes.size(), -1);
        for (std::size_t e = 0; e < f.edges.size(); ++e) {
            upstream_edge[static_cast<std::size_t>(f.edges[e].child)] = static_cast<int>(e);
            for (int p = 0; p < grid::kPhases; ++p)
                if (f.edges[e].phases.has(p))
                    edge_slot[e][static_cast<std::size_t>(p)] = edge_phase_count++;
        }
        for (std::size_t n = 0; n < f.nodes.size(); ++n) {
            if (static_cast<int>(n) == f.source) continue;
            for (int p = 0; p < grid::kPhases; ++p)
                if (f.nodes[n].phases.has(p))
                    node_slot[n][static_cast<std::size_t>(p)] = node_phase_count++;
        }
    }

    int step_block() const { return 2 * edge_phase_count + node_phase_count; }
};

struct Indexer {
    VarMap map;
    NetworkLayout net;
    int block;

    Indexer(const DispatchProblem& dp) : net(*dp.feeder) {
        const int m = static_cast<int>(dp.fleet.size());
        map.num_batteries = m;
        map.horizon = dp.horizon;
        map.discharge0 = 0;
        map.charge0 = m * dp.horizon;
        map.energy0 = 2 * m * dp.horizon;
        map.capacity = 3 * m * dp.horizon;
        map.flow0 = map.capacity + 1;
        block = net.step_block();
    }

    int flow_p(int t, int e, int p) const {
        return map.flow0 + t * block + net.edge_slot[static_cast<std::size_t>(e)][static_cast<std::size_t>(p)];
    }
    int flow_q(int t, int e, int p) const {
        return flow_p(t, e, p) + net.edge_phase_count;
    }
    int vsq(int t, int n, int p) const {
        return map.flow0 + t * block + 2 * net.edge_phase_count +
               net.node_slot[static_cast<std::size_t>(n)][static_cast<std::size_t>(p)];
    }
    int total_vars() const { return map.flow0 + map.horizon * block; }
};

struct BatteryPlacement {
    int node = -1;
    int phase = 0;
};

std::vector<BatteryPlacement> place_fleet(const DispatchProblem& dp) {
    std::vector<BatteryPlacement> out;
    out.reserve(dp.fleet.size());
    for (const auto& b : dp.fleet) {
        const int ni = dp.feeder->node_index(b.node);
        if (ni < 0)
            throw PlacementError("battery '" + b.id + "' references unknown node '" + b.node + "'");
        const int ph = grid::phase_from_char(b.phase);
        if (!dp.feeder->nodes[static_cast<std::size_t>(ni)].phases.has(ph))
            throw PlacementError("battery '" + b.id + "' references absent phase at node '" +
                                 b.node + "'");
        out.push_back({ni, ph});
    }
    return out;
}

} // namespace

BuiltProblem build_problem(const DispatchProblem& dp) {
    dp.validate();
    if (dp.account.perf_prev < dp.account.rho_min)
        throw PerformanceGateError("previous performance index " +
                                   std::to_string(dp.account.perf_prev) +
                                   " below market minimum " + std::to_string(dp.account.rho_min));
    const auto placement = place_fleet(dp);
    const grid::Feeder& f = *dp.feeder;
    Indexer ix(dp);
    const int m = static_cast<int>(dp.fleet.size());
    const int h = dp.horizon;
    const double d = dp.step_hours;

    double mean_price = 0.0;
    for (double pr : dp.price) mean_price += pr;
    mean_price /= static_cast<double>(h);

    BuiltProblem out;
    lp::LpProblem& p = out.problem;

    for (int i = 0; i < m; ++i) {
        const auto& b = dp.fleet[static_cast<std::size_t>(i)];
        const double cap = b.available ? b.power_kw : 0.0;
        for (int t = 0; t < h; ++t)
            p.add_variable("Pdis[" + b.id + "," + std::to_string(t) + "]", 0.0, cap, b.priority);
    }
    for (int i = 0; i < m; ++i) {
        const auto& b = dp.fleet[static_cast<std::size_t>(i)];
        const double cap = b.available ? b.power_kw : 0.0;
        for (int t = 0; t < h; ++t)
            p.add_variable("Pch[" + b.id + "," + std::to_string(t) + "]", 0.0, cap, b.priority);
    }
    for (int i = 0; i < m; ++i) {
        const auto& b = dp.fleet[static_cast<std::size_t>(i)];
        for (int t = 0; t < h; ++t)
            p.add_variable("e[" + b.id + "," + std::to_string(t) + "]", b.e_min(), b.e_max());
    }
    p.add_variable("C", 0.0, dp.account.capacity_cap_kw, dp.account.perf_prev * mean_price);

    const double v_lo = f.v_min * f.v_min + dp.v_margin;
    const double v_hi = f.v_max * f.v_max - dp.v_margin;
    for (int t = 0; t < h; ++t) {
        for (std::size_t e = 0; e < f.edges.size(); ++e)
            for (int ph = 0; ph < grid::kPhases; ++ph)
                if (f.edges[e].phases.has(ph))
                    p.add_variable("P[" + std::to_string(t) + "," + std::to_string(e) + "," +
                                       std::string(1, grid::phase_to_char(ph)) + "]",
                                   -lp::kInf, lp::kInf);
        for (std::size_t e = 0; e < f.edges.size(); ++e)
            for (int ph = 0; ph < grid::kPhases; ++ph)
                if (f.edges[e].phases.has(ph))
                    p.add_variable("Q[" + std::to_string(t) + "," + std::to_string(e) + "," +
                                       std::string(1, grid::phase_to_char(ph)) + "]",
                                   -lp::kInf, lp::kInf);
        for (std::size_t n = 0; n < f.nodes.size(); ++n) {
            if (static_cast<int>(n) == f.source) continue;
            for (int ph = 0; ph < grid::kPhases; ++ph)
                if (f.nodes[n].phases.has(ph))
                    p.add_variable("v[" + std::to_string(t) + "," + f.nodes[n].id + "," +
                                       std::string(1, grid::phase_to_char(ph)) + "]",
                                   v_lo, v_hi);
        }
    }

    // tracking band per step: total response magnitude capped above, and
    // the signed net response held near the target from below
    for (int t = 0; t < h; ++t) {
        const double tgt = dp.target_kw[static_cast<std::size_t>(t)];
        const double s = tgt < 0.0 ? -1.0 : 1.0;
        std::vector<std::pair<int, double>> mag, net;
        for (int i = 0; i < m; ++i) {
            mag.emplace_back(ix.map.discharge(i, t), 1.0);
            mag.emplace_back(ix.map.charge(i, t), 1.0);
            net.emplace_back(ix.map.discharge(i, t), s);
            net.emplace_back(ix.map.charge(i, t), -s);
        }
        p.add_row_sparse(mag, lp::Relation::LessEq, std::abs(tgt) + dp.account.epsilon_kw);
        p.add_row_sparse(net, lp::Relation::GreaterEq, std::abs(tgt) - dp.account.epsilon_kw);
    }

    // SoC recursion with split-variable efficiency
    for (int i = 0; i < m; ++i) {
        const auto& b = dp.fleet[static_cast<std::size_t>(i)];
        for (int t = 0; t < h; ++t) {
            std::vector<std::pair<int, double>> terms;
            terms.emplace_back(ix.map.energy(i, t), 1.0);
            if (t > 0) terms.emplace_back(ix.map.energy(i, t - 1), -1.0);
            terms.emplace_back(ix.map.charge(i, t), -d * b.efficiency);
            terms.emplace_back(ix.map.discharge(i, t), d / b.efficiency);
            p.add_row_sparse(terms, lp::Relation::Equal,
                             t == 0 ? dp.initial_energy_kwh[static_cast<std::size_t>(i)] : 0.0);
        }
    }

    // throughput budget (battery-side energy moved, both directions)
    for (int i = 0; i < m; ++i) {
        const auto& b = dp.fleet[static_cast<std::size_t>(i)];
        if (b.energy_budget_kwh < 0.0) continue;
        std::vector<std::pair<int, double>> terms;
        for (int t = 0; t < h; ++t) {
            terms.emplace_back(ix.map.charge(i, t), d * b.efficiency);
            terms.emplace_back(ix.map.discharge(i, t), d / b.efficiency);
        }
        p.add_row_sparse(terms, lp::Relation::LessEq, b.energy_budget_kwh);
    }

    // network: nodal balance and voltage drops on every step
    const double v0 = f.source_v_pu * f.source_v_pu;
    auto ch = f.children();
    for (int t = 0; t < h; ++t) {
        for (std::size_t n = 0; n < f.nodes.size(); ++n) {
            if (static_cast<int>(n) == f.source) continue;
            const int up = ix.net.upstream_edge[n];
            for (int ph = 0; ph < grid::kPhases; ++ph) {
                if (!f.nodes[n].phases.has(ph)) continue;
                const bool fed = up >= 0 && f.edges[static_cast<std::size_t>(up)].phases.has(ph);
                std::vector<std::pair<int, double>> prow, qrow;
                if (fed) {
                    prow.emplace_back(ix.flow_p(t, up, ph), 1.0);
                    qrow.emplace_back(ix.flow_q(t, up, ph), 1.0);
                }
                for (int e : ch[n])
                    if (f.edges[static_cast<std::size_t>(e)].phases.has(ph)) {
                        prow.emplace_back(ix.flow_p(t, e, ph), -1.0);
                        qrow.emplace_back(ix.flow_q(t, e, ph), -1.0);
                    }
                for (int i = 0; i < m; ++i)
                    if (placement[static_cast<std::size_t>(i)].node == static_cast<int>(n) &&
                        placement[static_cast<std::size_t>(i)].phase == ph) {
                        prow.emplace_back(ix.map.discharge(i, t), 1.0 / f.base_kva);
                        prow.emplace_back(ix.map.charge(i, t), -1.0 / f.base_kva);
                    }
                p.add_row_sparse(prow, lp::Relation::Equal,
                                 f.nodes[n].load[static_cast<std::size_t>(ph)].real());
                p.add_row_sparse(qrow, lp::Relation::Equal,
                                 f.nodes[n].load[static_cast<std::size_t>(ph)].imag());
            }
        }
        for (std::size_t e = 0; e < f.edges.size(); ++e) {
            const auto& edge = f.edges[e];
            const bool parent_is_source = edge.parent == f.source;
            for (int ph = 0; ph < grid::kPhases; ++ph) {
                if (!edge.phases.has(ph)) continue;
                std::vector<std::pair<int, double>> row;
                double rhs = 0.0;
                if (parent_is_source) rhs = -v0;
                else row.emplace_back(ix.vsq(t, edge.parent, ph), 1.0);
                row.emplace_back(ix.vsq(t, edge.child, ph), -1.0);
                for (int q = 0; q < grid::kPhases; ++q) {
                    if (!edge.phases.has(q)) continue;
                    const Complex w = grid::phase_rotation(ph, q) *
                                      std::conj(edge.z[static_cast<std::size_t>(ph)][static_cast<std::size_t>(q)]);
                    row.emplace_back(ix.flow_p(t, static_cast<int>(e), q), -2.0 * w.real());
                    row.emplace_back(ix.flow_q(t, static_cast<int>(e), q), 2.0 * w.imag());
                }
                p.add_row_sparse(row, lp::Relation::Equal, rhs);
            }
            // node phases not fed through this edge copy the parent voltage
            const auto& child_node = f.nodes[static_cast<std::size_t>(edge.child)];
            for (int ph = 0; ph < grid::kPhases; ++ph) {
                if (!child_node.phases.has(ph) || edge.phases.has(ph)) continue;
                std::vector<std::pair<int, double>> row;
                double rhs = 0.0;
                row.emplace_back(ix.vsq(t, edge.child, ph), 1.0);
                if (parent_is_source ||
                    !f.nodes[static_cast<std::size_t>(edge.parent)].phases.has(ph))
                    rhs = v0;
                else row.emplace_back(ix.vsq(t, edge.parent, ph), -1.0);
                p.add_row_sparse(row, lp::Relation::Equal, rhs);
            }
        }
    }

    for (int i = 0; i < m; ++i)
        for (int t = 0; t < h; ++t)
            out.pairs.push_back({ix.map.discharge(i, t), ix.map.charge(i, t)});
    out.map = ix.map;
    return out;
}

namespace {

DispatchSchedule extract_schedule(const DispatchProblem& dp, const BuiltProblem& built,
                                  const lp::LpSolution& sol) {
    DispatchSchedule sched;
    sched.status = sol.status;
    sched.objective = sol.objective;
    sched.nodes = sol.nodes;
    if (sol.status != lp::LpStatus::Optimal) return sched;

    const int m = built.map.num_batteries;
    const int h = built.map.horizon;
    sched.p_kw.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(h), 0.0));
    sched.energy_kwh = sched.p_kw;
    for (int i = 0; i < m; ++i)
        for (int t = 0; t < h; ++t) {
            sched.p_kw[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] =
                sol.x[static_cast<std::size_t>(built.map.discharge(i, t))] -
                sol.x[static_cast<std::size_t>(built.map.charge(i, t))];
            sched.energy_kwh[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] =
                sol.x[static_cast<std::size_t>(built.map.energy(i, t))];
        }
    sched.capacity_kw = sol.x[static_cast<std::size_t>(built.map.capacity)];

    // re-simulate each step through the linear solver
    const auto placement = place_fleet(dp);
    for (int t = 0; t < h; ++t) {
        grid::InjectionSet inj;
        for (int i = 0; i < m; ++i)
            inj.add(placement[static_cast<std::size_t>(i)].node,
                    placement[static_cast<std::size_t>(i)].phase,
                    sched.p_kw[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] /
                        dp.feeder->base_kva,
                    0.0);
        sched.flows.push_back(grid::solve_linear(*dp.feeder, inj));
    }
    return sched;
}

} // namespace

std::vector<double> DispatchSchedule::battery_kw(int t) const {
    std::vector<double> out(p_kw.size());
    for (std::size_t i = 0; i < p_kw.size(); ++i)
        out[i] = -p_kw[i][static_cast<std::size_t>(t)];
    return out;
}

DispatchSchedule solve_dispatch(const DispatchProblem& dp, const lp::SolveOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto built = build_problem(dp);
    const auto sol = lp::solve_milp(built.problem, built.pairs, opts);
    auto sched = extract_schedule(dp, built, sol);
    sched.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sched;
}

ExpertPolicy::ExpertPolicy(const grid::Feeder& feeder, lp::SolveOptions opts)
    : feeder_(&feeder), opts_(opts) {}

ExpertPolicy::Decision ExpertPolicy::decide(const env::Environment& e) const {
    DispatchProblem dp;
    dp.feeder = feeder_;
    dp.fleet = e.config().fleet;
    dp.initial_energy_kwh = e.soc_kwh();
    dp.horizon = 1;
    dp.step_hours = e.step_hours();
    dp.target_kw = {e.current_target_kw()};
    dp.price = {e.current_price()};
    dp.account = e.config().account;

    Decision out;
    const auto t0 = std::chrono::steady_clock::now();
    auto sched = solve_dispatch(dp, opts_);
    if (sched.status == lp::LpStatus::Optimal) {
        out.strict_optimal = true;
        out.battery_kw = sched.battery_kw(0);
    } else {
        // best effort: push the signed response toward the target without
        // crossing it, keeping every physical constraint
        ++fallbacks_;
        auto built = build_problem(dp);
        const double tgt = dp.target_kw[0];
        const double s = tgt < 0.0 ? -1.0 : 1.0;
        auto& p = built.problem;
        // drop the strict band (build_problem emits those two rows first)
        p.rows.erase(p.rows.begin(), p.rows.begin() + 2);
        for (double& c : p.objective) c = 0.0;
        std::vector<std::pair<int, double>> net;
        for (int i = 0; i < built.map.num_batteries; ++i) {
            p.objective[static_cast<std::size_t>(built.map.discharge(i, 0))] = s;
            p.objective[static_cast<std::size_t>(built.map.charge(i, 0))] = -s;
            net.emplace_back(built.map.discharge(i, 0), s);
            net.emplace_back(built.map.charge(i, 0), -s);
        }
        p.add_row_sparse(net, lp::Relation::LessEq, std::abs(tgt));
        const auto sol = lp::solve_milp(p, built.pairs, opts_);
        if (sol.status == lp::LpStatus::Optimal) {
            auto sub = extract_schedule(dp, built, sol);
            out.battery_kw = sub.battery_kw(0);
        } else {
            out.battery_kw.assign(dp.fleet.size(), 0.0);
        }
    }
    out.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.action = e.action_for_power(out.battery_kw);
    return out;
}

std::vector<env::Transition> generate_demonstrations(
    env::Environment& e, const ExpertPolicy& policy,
    const std::vector<market::RegulationScenario>& scenarios, int episodes_per_scenario,
    std::uint64_t seed, DemoStats* stats) {
    if (scenarios.empty()) throw std::runtime_error("generate_demonstrations: no scenarios");
    std::vector<env::Transition> demos;
    std::uint64_t sm = seed;
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        for (int ep = 0; ep < episodes_per_scenario; ++ep) {
            const std::uint64_t ep_seed = splitmix64(sm);
            std::vector<double> obs = e.reset(scenarios[si], ep_seed);
            if (stats) stats->episodes++;
            while (!e.done()) {
                const auto decision = policy.decide(e);
                auto res = e.step(decision.action);
                if (decision.strict_optimal) {
                    env::Transition tr;
                    tr.state = obs;
                    tr.action = decision.action;
                    tr.next_state = e.observation();
                    tr.reward = 1.0;
                    tr.cost = res.cost;
                    tr.done = res.done;
                    tr.demo = true;
                    demos.push_back(std::move(tr));
                    if (stats) stats->emitted++;
                } else if (stats) {
                    stats->skipped++;
                }
                obs = e.observation();
            }
        }
    }
    return demos;
}

static std::string join_vec(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        s += buf;
    }
    return s;
}

static std::vector<double> split_vec(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ';'))
        if (!cell.empty()) out.push_back(std::stod(cell));
    return out;
}

std::string demos_to_csv(const std::vector<env::Transition>& demos) {
    std::string out = "state,action,next_state,reward,cost,done\n";
    for (const auto& d : demos) {
        out += join_vec(d.state) + "," + join_vec(d.action) + "," + join_vec(d.next_state) + "," +
               std::to_string(d.reward) + "," + std::to_string(d.cost) + "," +
               (d.done ? "1" : "0") + "\n";
    }
    return out;
}

std::vector<env::Transition> demos_from_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw std::runtime_error("demo csv: empty");
    if (line.rfind("state,action,next_state", 0) != 0)
        throw std::runtime_error("demo csv: unexpected header");
    std::vector<env::Transition> out;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw std::runtime_error("demo csv: bad row");
        env::Transition tr;
        tr.state = split_vec(cells[0]);
        tr.action = split_vec(cells[1]);
        tr.next_state = split_vec(cells[2]);
        tr.reward = std::stod(cells[3]);
        tr.cost = std::stod(cells[4]);
        tr.done = cells[5] == "1";
        tr.demo = true;
        out.push_back(std::move(tr));
    }
    return out;
}

} // namespace griddispatch::expert
