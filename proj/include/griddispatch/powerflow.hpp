#pragma once

#include "griddispatch/feeder.hpp"

namespace griddispatch::grid {

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Indexed consistently with the Feeder that produced it: edge arrays by edge
// index, voltage arrays by node index, phase slot p meaningful only where
// the phase exists.
struct PowerFlowSolution {
    std::vector<std::array<double, kPhases>> edge_p; // active flow, pu
    std::vector<std::array<double, kPhases>> edge_q; // reactive flow, pu
    std::vector<std::array<double, kPhases>> v_sq;   // squared voltage magnitude, pu^2
    std::vector<unsigned> node_phase_bits;
    int source = 0;
    int iterations = 0; // sweep only

    double v_mag(int node, int phase) const;
    bool has_phase(int node, int phase) const {
        return (node_phase_bits[static_cast<std::size_t>(node)] >> phase) & 1u;
    }
};

// Balanced-approximation rotation a^(p-q) with a = exp(-j 2pi/3), shared by
// the linear solver and the dispatch LP rows.
Complex phase_rotation(int p, int q);

// Linearized radial flow: one upstream accumulation pass for lossless
// P/Q balance, then a downstream pass applying the phase-coupled squared
// voltage drop  v_j^p = v_i^p - sum_q 2 Re[a^(p-q) S_ij^q conj(z_ij^pq)]
// with a = exp(-j 2pi/3).
PowerFlowSolution solve_linear(const Feeder& feeder, const InjectionSet& injections);

// Full nonlinear backward/forward sweep with complex phasors and
// constant-power loads; the validation oracle for solve_linear.
// Throws ConvergenceError after max_iter or on voltage collapse.
PowerFlowSolution solve_nonlinear_sweep(const Feeder& feeder, const InjectionSet& injections,
                                        double tol = 1e-10, int max_iter = 200);

// Number of (node, phase) voltage magnitudes outside (v_min, v_max),
// source node excluded.
int count_violations(const PowerFlowSolution& solution, double v_min, double v_max);

double min_voltage(const PowerFlowSolution& solution); // over non-source nodes
double max_voltage(const PowerFlowSolution& solution);

// Independent solves fanned across workers; results identical to looping
// solve_linear serially.
std::vector<PowerFlowSolution> solve_linear_batch(const Feeder& feeder,
                                                  const std::vector<InjectionSet>& injections);

} // namespace griddispatch::grid
