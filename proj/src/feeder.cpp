#include "griddispatch/feeder.hpp"

#include "griddispatch/csv.hpp"

#include <json.hpp>

#include <queue>
#include <stdexcept>

namespace griddispatch::grid {

using nlohmann::json;

int phase_from_char(char c) {
    switch (c) {
        case 'a': case 'A': return 0;
        case 'b': case 'B': return 1;
        case 'c': case 'C': return 2;
        default: throw PhaseError(std::string("unknown phase '") + c + "'");
    }
}

char phase_to_char(int p) {
    static const char tab[3] = {'a', 'b', 'c'};
    if (p < 0 || p >= kPhases) throw PhaseError("phase index out of range");
    return tab[p];
}

static PhaseMask parse_phases(const std::string& s) {
    PhaseMask m;
    for (char c : s) m.add(phase_from_char(c));
    return m;
}

static std::string phases_to_string(PhaseMask m) {
    std::string s;
    for (int p = 0; p < kPhases; ++p)
        if (m.has(p)) s += phase_to_char(p);
    return s;
}

int Feeder::node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<std::vector<int>> Feeder::children() const {
    std::vector<std::vector<int>> ch(nodes.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
        ch[static_cast<std::size_t>(edges[e].parent)].push_back(static_cast<int>(e));
    return ch;
}

std::vector<int> Feeder::downstream_edge_order() const {
    auto ch = children();
    std::vector<int> order;
    order.reserve(edges.size());
    std::queue<int> q;
    q.push(source);
    while (!q.empty()) {
        int n = q.front();
        q.pop();
        for (int e : ch[static_cast<std::size_t>(n)]) {
            order.push_back(e);
            q.push(edges[static_cast<std::size_t>(e)].child);
        }
    }
    return order;
}

void Feeder::validate() const {
    if (nodes.empty()) throw TopologyError("feeder has no nodes");
    if (edges.size() != nodes.size() - 1)
        throw TopologyError("feeder not radial: edge count " + std::to_string(edges.size()) +
                            " != node count - 1 (" + std::to_string(nodes.size() - 1) + ")");
    if (source < 0 || static_cast<std::size_t>(source) >= nodes.size())
        throw TopologyError("source node index out of range");
    if (!(v_min > 0.0) || !(v_max > v_min))
        throw std::runtime_error("voltage limits must satisfy 0 < v_min < v_max");
    if (!(base_kva > 0.0) || !(base_kv > 0.0))
        throw std::runtime_error("bases must be positive");
    if (!(source_v_pu > 0.0))
        throw std::runtime_error("source voltage must be positive");

    std::vector<int> parent_count(nodes.size(), 0);
    for (const auto& e : edges) {
        if (e.parent < 0 || static_cast<std::size_t>(e.parent) >= nodes.size() ||
            e.child < 0 || static_cast<std::size_t>(e.child) >= nodes.size())
            throw TopologyError("edge endpoint out of range");
        if (e.child == source) throw TopologyError("source node has a parent");
        parent_count[static_cast<std::size_t>(e.child)]++;
        const PhaseMask pp = nodes[static_cast<std::size_t>(e.parent)].phases;
        const PhaseMask cp = nodes[static_cast<std::size_t>(e.child)].phases;
        for (int p = 0; p < kPhases; ++p)
            if (e.phases.has(p) && (!pp.has(p) || !cp.has(p)))
                throw PhaseError("edge phase " + std::string(1, phase_to_char(p)) +
                                 " missing at an endpoint");
        if (e.phases.count() == 0) throw PhaseError("edge with empty phase set");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (static_cast<int>(i) == source) continue;
        if (parent_count[i] != 1)
            throw TopologyError("node '" + nodes[i].id + "' has " +
                                std::to_string(parent_count[i]) + " parents (need 1)");
    }
    // connectivity: BFS must reach every node
    if (downstream_edge_order().size() != edges.size())
        throw TopologyError("feeder graph is not connected from the source");
    for (const auto& n : nodes) {
        if (n.phases.count() == 0) throw PhaseError("node '" + n.id + "' has no phases");
        for (int p = 0; p < kPhases; ++p)
            if (!n.phases.has(p) && std::abs(n.load[static_cast<std::size_t>(p)]) != 0.0)
                throw PhaseError("load on absent phase at node '" + n.id + "'");
    }
}

std::size_t Feeder::phase_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) n += static_cast<std::size_t>(node.phases.count());
    return n;
}

void InjectionSet::add(int node, int phase, double p_pu, double q_pu) {
    entries.push_back({node, phase, p_pu, q_pu});
}

Feeder parse_feeder_json(const std::string& text) {
    json j = json::parse(text);
    Feeder f;

    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.id = jn.at("id").get<std::string>();
        n.phases = parse_phases(jn.at("phases").get<std::string>());
        f.nodes.push_back(std::move(n));
    }
    if (j.contains("loads")) {
        for (const auto& jl : j.at("loads")) {
            const int ni = f.node_index(jl.at("node").get<std::string>());
            if (ni < 0) throw TopologyError("load references unknown node");
            const int p = phase_from_char(jl.at("phase").get<std::string>().at(0));
            if (!f.nodes[static_cast<std::size_t>(ni)].phases.has(p))
                throw PhaseError("load references absent phase");
            f.nodes[static_cast<std::size_t>(ni)].load[static_cast<std::size_t>(p)] =
                Complex(jl.at("p_pu").get<double>(), jl.at("q_pu").get<double>());
        }
    }
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.parent = f.node_index(je.at("from").get<std::string>());
        e.child = f.node_index(je.at("to").get<std::string>());
        if (e.parent < 0 || e.child < 0) throw TopologyError("edge references unknown node");
        e.phases = parse_phases(je.at("phases").get<std::string>());
        if (je.contains("z")) {
            // full matrix: rows of [r, x] pairs, 3x3
            const auto& zm = je.at("z");
            for (int p = 0; p < kPhases; ++p)
                for (int q = 0; q < kPhases; ++q)
                    e.z[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] =
                        Complex(zm.at(p).at(q).at(0).get<double>(),
                                zm.at(p).at(q).at(1).get<double>());
        } else {
            // diagonal shorthand: self impedance on each present phase
            const double r = je.at("r_pu").get<double>();
            const double x = je.at("x_pu").get<double>();
            for (int p = 0; p < kPhases; ++p)
                if (e.phases.has(p))
                    e.z[static_cast<std::size_t>(p)][static_cast<std::size_t>(p)] = Complex(r, x);
        }
        f.edges.push_back(std::move(e));
    }

    const auto& js = j.at("source");
    f.source = f.node_index(js.at("node").get<std::string>());
    if (f.source < 0) throw TopologyError("source references unknown node");
    f.source_v_pu = js.value("v_pu", 1.0);

    if (j.contains("limits")) {
        f.v_min = j.at("limits").at("v_min").get<double>();
        f.v_max = j.at("limits").at("v_max").get<double>();
    }
    if (j.contains("bases")) {
        f.base_kva = j.at("bases").at("s_kva").get<double>();
        f.base_kv = j.at("bases").at("v_kv").get<double>();
    }

    f.validate();
    return f;
}

Feeder load_feeder_json(const std::string& path) {
    return parse_feeder_json(csv::read_text(path));
}

std::string feeder_to_json(const Feeder& f) {
    json j;
    for (const auto& n : f.nodes)
        j["nodes"].push_back({{"id", n.id}, {"phases", phases_to_string(n.phases)}});
    j["loads"] = json::array();
    for (const auto& n : f.nodes)
        for (int p = 0; p < kPhases; ++p) {
            const Complex s = n.load[static_cast<std::size_t>(p)];
            if (std::abs(s) != 0.0)
                j["loads"].push_back({{"node", n.id},
                                      {"phase", std::string(1, phase_to_char(p))},
                                      {"p_pu", s.real()},
                                      {"q_pu", s.imag()}});
        }
    for (const auto& e : f.edges) {
        json zm = json::array();
        for (int p = 0; p < kPhases; ++p) {
            json row = json::array();
            for (int q = 0; q < kPhases; ++q) {
                const Complex z = e.z[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
                row.push_back({z.real(), z.imag()});
            }
            zm.push_back(row);
        }
        j["edges"].push_back({{"from", f.nodes[static_cast<std::size_t>(e.parent)].id},
                              {"to", f.nodes[static_cast<std::size_t>(e.child)].id},
                              {"phases", phases_to_string(e.phases)},
                              {"z", zm}});
    }
    j["source"] = {{"node", f.nodes[static_cast<std::size_t>(f.source)].id},
                   {"v_pu", f.source_v_pu}};
    j["limits"] = {{"v_min", f.v_min}, {"v_max", f.v_max}};
    j["bases"] = {{"s_kva", f.base_kva}, {"v_kv", f.base_kv}};
    return j.dump(2);
}

} // namespace griddispatch::grid
