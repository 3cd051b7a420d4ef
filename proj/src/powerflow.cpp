#include "griddispatch/powerflow.hpp"

#include "griddispatch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace griddispatch::grid {

namespace {

// a^k with a = exp(-j 2pi/3); index k = (p - q) mod 3
const Complex kRot[3] = {
    Complex(1.0, 0.0),
    Complex(-0.5, -0.8660254037844386),
    Complex(-0.5, 0.8660254037844386),
};

inline const Complex& rot(int p, int q) {
    return kRot[((p - q) % 3 + 3) % 3];
}

} // namespace

Complex phase_rotation(int p, int q) {
    return rot(p, q);
}

namespace {

// nominal phase angles at the source: 0, -120, +120 degrees
const Complex kPhaseRef[3] = {
    Complex(1.0, 0.0),
    Complex(-0.5, -0.8660254037844386),
    Complex(-0.5, 0.8660254037844386),
};

// net complex demand (load minus controllable injection) per node/phase
std::vector<std::array<Complex, kPhases>> net_demand(const Feeder& f,
                                                     const InjectionSet& inj) {
    std::vector<std::array<Complex, kPhases>> demand(f.nodes.size());
    for (std::size_t n = 0; n < f.nodes.size(); ++n)
        for (int p = 0; p < kPhases; ++p)
            demand[n][static_cast<std::size_t>(p)] =
                f.nodes[n].load[static_cast<std::size_t>(p)];
    for (const auto& e : inj.entries) {
        if (e.node < 0 || static_cast<std::size_t>(e.node) >= f.nodes.size())
            throw PhaseError("injection references unknown node");
        if (e.phase < 0 || e.phase >= kPhases ||
            !f.nodes[static_cast<std::size_t>(e.node)].phases.has(e.phase))
            throw PhaseError("injection references absent phase at node '" +
                             f.nodes[static_cast<std::size_t>(e.node)].id + "'");
        demand[static_cast<std::size_t>(e.node)][static_cast<std::size_t>(e.phase)] -=
            Complex(e.p_pu, e.q_pu);
    }
    return demand;
}

PowerFlowSolution make_empty(const Feeder& f) {
    PowerFlowSolution s;
    s.edge_p.assign(f.edges.size(), {});
    s.edge_q.assign(f.edges.size(), {});
    s.v_sq.assign(f.nodes.size(), {});
    s.node_phase_bits.resize(f.nodes.size());
    for (std::size_t n = 0; n < f.nodes.size(); ++n)
        s.node_phase_bits[n] = f.nodes[n].phases.bits;
    s.source = f.source;
    return s;
}

} // namespace

double PowerFlowSolution::v_mag(int node, int phase) const {
    return std::sqrt(v_sq[static_cast<std::size_t>(node)][static_cast<std::size_t>(phase)]);
}

PowerFlowSolution solve_linear(const Feeder& feeder, const InjectionSet& injections) {
    feeder.validate();
    auto demand = net_demand(feeder, injections);
    auto order = feeder.downstream_edge_order();
    PowerFlowSolution sol = make_empty(feeder);

    // upstream accumulation: flow on (i->j) = demand at j plus child flows
    std::vector<std::array<Complex, kPhases>> flow(feeder.edges.size());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Edge& e = feeder.edges[static_cast<std::size_t>(*it)];
        std::array<Complex, kPhases> acc = demand[static_cast<std::size_t>(e.child)];
        for (std::size_t k = 0; k < feeder.edges.size(); ++k)
            if (feeder.edges[k].parent == e.child)
                for (int p = 0; p < kPhases; ++p)
                    acc[static_cast<std::size_t>(p)] += flow[k][static_cast<std::size_t>(p)];
        for (int p = 0; p < kPhases; ++p) {
            if (!e.phases.has(p) && std::abs(acc[static_cast<std::size_t>(p)]) > 1e-12)
                throw PhaseError("power on phase " + std::string(1, phase_to_char(p)) +
                                 " has no path through edge into '" +
                                 feeder.nodes[static_cast<std::size_t>(e.child)].id + "'");
            flow[static_cast<std::size_t>(*it)][static_cast<std::size_t>(p)] =
                e.phases.has(p) ? acc[static_cast<std::size_t>(p)] : Complex(0, 0);
        }
    }

    for (std::size_t ei = 0; ei < feeder.edges.size(); ++ei)
        for (int p = 0; p < kPhases; ++p) {
            sol.edge_p[ei][static_cast<std::size_t>(p)] = flow[ei][static_cast<std::size_t>(p)].real();
            sol.edge_q[ei][static_cast<std::size_t>(p)] = flow[ei][static_cast<std::size_t>(p)].imag();
        }

    // downstream pass: squared voltage drops
    const double v0 = feeder.source_v_pu * feeder.source_v_pu;
    for (int p = 0; p < kPhases; ++p)
        if (feeder.nodes[static_cast<std::size_t>(feeder.source)].phases.has(p))
            sol.v_sq[static_cast<std::size_t>(feeder.source)][static_cast<std::size_t>(p)] = v0;

    for (int eidx : order) {
        const Edge& e = feeder.edges[static_cast<std::size_t>(eidx)];
        const auto& vi = sol.v_sq[static_cast<std::size_t>(e.parent)];
        auto& vj = sol.v_sq[static_cast<std::size_t>(e.child)];
        for (int p = 0; p < kPhases; ++p) {
            if (!feeder.nodes[static_cast<std::size_t>(e.child)].phases.has(p)) continue;
            double drop = 0.0;
            if (e.phases.has(p)) {
                for (int q = 0; q < kPhases; ++q) {
                    if (!e.phases.has(q)) continue;
                    const Complex s = flow[static_cast<std::size_t>(eidx)][static_cast<std::size_t>(q)];
                    const Complex z = e.z[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
                    drop += 2.0 * (rot(p, q) * s * std::conj(z)).real();
                }
            }
            vj[static_cast<std::size_t>(p)] = vi[static_cast<std::size_t>(p)] - drop;
            if (!(vj[static_cast<std::size_t>(p)] > 0.0))
                throw ConvergenceError("linear model out of range: non-positive squared voltage at '" +
                                       feeder.nodes[static_cast<std::size_t>(e.child)].id + "'");
        }
    }
    return sol;
}

PowerFlowSolution solve_nonlinear_sweep(const Feeder& feeder, const InjectionSet& injections,
                                        double tol, int max_iter) {
    feeder.validate();
    if (!(tol > 0.0)) throw std::runtime_error("sweep tolerance must be positive");
    auto demand = net_demand(feeder, injections);
    auto order = feeder.downstream_edge_order();

    std::vector<std::array<Complex, kPhases>> volt(feeder.nodes.size());
    for (std::size_t n = 0; n < feeder.nodes.size(); ++n)
        for (int p = 0; p < kPhases; ++p)
            volt[n][static_cast<std::size_t>(p)] =
                feeder.source_v_pu * kPhaseRef[static_cast<std::size_t>(p)];

    std::vector<std::array<Complex, kPhases>> branch_i(feeder.edges.size());
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        // backward: aggregate constant-power load currents at present voltages
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const Edge& e = feeder.edges[static_cast<std::size_t>(*it)];
            std::array<Complex, kPhases> acc{};
            const std::size_t j = static_cast<std::size_t>(e.child);
            for (int p = 0; p < kPhases; ++p) {
                const Complex s = demand[j][static_cast<std::size_t>(p)];
                if (std::abs(s) > 0.0) {
                    const Complex v = volt[j][static_cast<std::size_t>(p)];
                    if (std::abs(v) < 0.2)
                        throw ConvergenceError("sweep voltage collapse (overloaded feeder)");
                    acc[static_cast<std::size_t>(p)] += std::conj(s / v);
                }
            }
            for (std::size_t k = 0; k < feeder.edges.size(); ++k)
                if (feeder.edges[k].parent == e.child)
                    for (int p = 0; p < kPhases; ++p)
                        acc[static_cast<std::size_t>(p)] += branch_i[k][static_cast<std::size_t>(p)];
            for (int p = 0; p < kPhases; ++p) {
                if (!e.phases.has(p) && std::abs(acc[static_cast<std::size_t>(p)]) > 1e-12)
                    throw PhaseError("current on phase with no path");
                branch_i[static_cast<std::size_t>(*it)][static_cast<std::size_t>(p)] =
                    e.phases.has(p) ? acc[static_cast<std::size_t>(p)] : Complex(0, 0);
            }
        }
        // forward: branch drops V_j = V_i - z I
        double delta = 0.0;
        for (int eidx : order) {
            const Edge& e = feeder.edges[static_cast<std::size_t>(eidx)];
            for (int p = 0; p < kPhases; ++p) {
                if (!feeder.nodes[static_cast<std::size_t>(e.child)].phases.has(p)) continue;
                Complex v = volt[static_cast<std::size_t>(e.parent)][static_cast<std::size_t>(p)];
                if (e.phases.has(p))
                    for (int q = 0; q < kPhases; ++q)
                        if (e.phases.has(q))
                            v -= e.z[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] *
                                 branch_i[static_cast<std::size_t>(eidx)][static_cast<std::size_t>(q)];
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw ConvergenceError("sweep diverged (non-finite voltage)");
                delta = std::max(delta,
                                 std::abs(v - volt[static_cast<std::size_t>(e.child)][static_cast<std::size_t>(p)]));
                volt[static_cast<std::size_t>(e.child)][static_cast<std::size_t>(p)] = v;
            }
        }
        if (delta < tol) break;
    }
    if (iter >= max_iter)
        throw ConvergenceError("sweep did not converge in " + std::to_string(max_iter) +
                               " iterations");

    PowerFlowSolution sol = make_empty(feeder);
    sol.iterations = iter + 1;
    for (std::size_t n = 0; n < feeder.nodes.size(); ++n)
        for (int p = 0; p < kPhases; ++p)
            if (feeder.nodes[n].phases.has(p)) {
                const double m = std::abs(volt[n][static_cast<std::size_t>(p)]);
                sol.v_sq[n][static_cast<std::size_t>(p)] = m * m;
            }
    // branch power at the sending end
    for (std::size_t ei = 0; ei < feeder.edges.size(); ++ei) {
        const Edge& e = feeder.edges[ei];
        for (int p = 0; p < kPhases; ++p)
            if (e.phases.has(p)) {
                const Complex s = volt[static_cast<std::size_t>(e.parent)][static_cast<std::size_t>(p)] *
                                  std::conj(branch_i[ei][static_cast<std::size_t>(p)]);
                sol.edge_p[ei][static_cast<std::size_t>(p)] = s.real();
                sol.edge_q[ei][static_cast<std::size_t>(p)] = s.imag();
            }
    }
    return sol;
}

int count_violations(const PowerFlowSolution& solution, double v_min, double v_max) {
    int count = 0;
    for (std::size_t n = 0; n < solution.v_sq.size(); ++n) {
        if (static_cast<int>(n) == solution.source) continue;
        for (int p = 0; p < kPhases; ++p) {
            if (!solution.has_phase(static_cast<int>(n), p)) continue;
            const double v = solution.v_mag(static_cast<int>(n), p);
            if (v > v_max || v < v_min) ++count;
        }
    }
    return count;
}

double min_voltage(const PowerFlowSolution& solution) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < solution.v_sq.size(); ++n) {
        if (static_cast<int>(n) == solution.source) continue;
        for (int p = 0; p < kPhases; ++p)
            if (solution.has_phase(static_cast<int>(n), p))
                m = std::min(m, solution.v_mag(static_cast<int>(n), p));
    }
    return m;
}

double max_voltage(const PowerFlowSolution& solution) {
    double m = 0.0;
    for (std::size_t n = 0; n < solution.v_sq.size(); ++n) {
        if (static_cast<int>(n) == solution.source) continue;
        for (int p = 0; p < kPhases; ++p)
            if (solution.has_phase(static_cast<int>(n), p))
                m = std::max(m, solution.v_mag(static_cast<int>(n), p));
    }
    return m;
}

std::vector<PowerFlowSolution> solve_linear_batch(const Feeder& feeder,
                                                  const std::vector<InjectionSet>& injections) {
    std::vector<PowerFlowSolution> out(injections.size());
    parallel_for(injections.size(),
                 [&](std::size_t i) { out[i] = solve_linear(feeder, injections[i]); });
    return out;
}

} // namespace griddispatch::grid
