#pragma once

#include "griddispatch/feeder.hpp"

#include <cstdlib>
#include <string>

namespace gdtest {

inline std::string data_dir() {
    const char* d = std::getenv("GD_DATA_DIR");
    return d ? d : "data";
}

inline griddispatch::grid::Feeder two_node_feeder(double r = 0.01, double x = 0.01,
                                                  double p_load = 0.1, double q_load = 0.05) {
    using namespace griddispatch::grid;
    Feeder f;
    Node n1;
    n1.id = "s";
    n1.phases.add(0);
    Node n2;
    n2.id = "l";
    n2.phases.add(0);
    n2.load[0] = Complex(p_load, q_load);
    f.nodes = {n1, n2};
    Edge e;
    e.parent = 0;
    e.child = 1;
    e.phases.add(0);
    e.z[0][0] = Complex(r, x);
    f.edges = {e};
    f.source = 0;
    return f;
}

} // namespace gdtest
