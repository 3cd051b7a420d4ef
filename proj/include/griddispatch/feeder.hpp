#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace griddispatch::grid {

using Complex = std::complex<double>;

inline constexpr int kPhases = 3; // a, b, c

struct TopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PhaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Phase set as a 3-bit mask; bit p set means phase p exists.
struct PhaseMask {
    unsigned bits = 0;
    bool has(int p) const { return (bits >> p) & 1u; }
    void add(int p) { bits |= 1u << p; }
    int count() const { return (bits & 1) + ((bits >> 1) & 1) + ((bits >> 2) & 1); }
};

int phase_from_char(char c);   // 'a'/'b'/'c' -> 0/1/2
char phase_to_char(int p);

struct Node {
    std::string id;
    PhaseMask phases;
    // complex load per phase, per-unit; zero on absent phases
    std::array<Complex, kPhases> load{};
};

struct Edge {
    int parent = -1;
    int child = -1;
    PhaseMask phases;
    // 3x3 complex series impedance, per-unit; entries outside the edge's
    // phase set are ignored
    std::array<std::array<Complex, kPhases>, kPhases> z{};
};

// Radial three-phase feeder. Immutable after load; all solver entry points
// treat it as read-only, so concurrent solves over one instance are safe.
struct Feeder {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    int source = 0;
    double source_v_pu = 1.0; // voltage magnitude at the source, per-unit
    double v_min = 0.95;
    double v_max = 1.05;
    double base_kva = 100.0;  // per-phase power base
    double base_kv = 4.16;

    int node_index(const std::string& id) const; // -1 when absent
    // children[i] lists edge indices whose parent is node i
    std::vector<std::vector<int>> children() const;
    // edge order such that parents appear before children (BFS from source)
    std::vector<int> downstream_edge_order() const;

    // Validates radiality, connectivity, phase consistency and limits.
    // Throws TopologyError / PhaseError / std::runtime_error.
    void validate() const;

    std::size_t phase_count() const; // total (node, phase) pairs
};

// Net controllable injection, per-unit, grid sign convention:
// positive = injection into the grid (battery discharge).
struct InjectionSet {
    struct Entry {
        int node = -1;
        int phase = 0;
        double p_pu = 0.0;
        double q_pu = 0.0;
    };
    std::vector<Entry> entries;

    void add(int node, int phase, double p_pu, double q_pu = 0.0);
};

Feeder load_feeder_json(const std::string& path);
Feeder parse_feeder_json(const std::string& text);
std::string feeder_to_json(const Feeder& f);

} // namespace griddispatch::grid
