#pragma once

#include <limits>
#include <string>
#include <vector>

namespace griddispatch::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// fixed solver tolerances
inline constexpr double kFeasTol = 1e-7;   // row / bound feasibility
inline constexpr double kCompTol = 1e-9;   // complementarity
inline constexpr double kPivotTol = 1e-10; // degeneracy threshold

enum class Relation { LessEq, Equal, GreaterEq };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

const char* status_name(LpStatus s);

// Dense LP in the form: maximize c^T x subject to rows (<=, =, >=) and
// per-variable bounds (infinities allowed).
struct LpProblem {
    struct Row {
        std::vector<double> coeffs;
        Relation rel = Relation::LessEq;
        double rhs = 0.0;
    };

    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> names;
    std::vector<Row> rows;

    int num_vars() const { return static_cast<int>(objective.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }

    int add_variable(const std::string& name, double lo, double hi, double obj = 0.0);
    void add_row(const std::vector<double>& coeffs, Relation rel, double rhs);
    // sparse convenience: (index, coefficient) terms
    void add_row_sparse(const std::vector<std::pair<int, double>>& terms, Relation rel,
                        double rhs);

    void validate() const; // throws on dimension mismatch / crossed bounds
    std::string dump() const;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
    long nodes = 0; // branch-and-bound nodes explored
};

// Split-variable pair (x+, x-) that must satisfy x+ * x- = 0. Both
// variables need a zero lower bound.
struct ComplementarityPair {
    int plus = -1;
    int minus = -1;
};

struct SolveOptions {
    int iteration_limit = 0; // 0 = automatic from problem size
    long node_limit = 20000;
};

// Bounded-variable primal simplex (two-phase, Dantzig pricing with a Bland
// anti-cycling fallback, dense basis inverse with product-form updates).
LpSolution solve_lp(const LpProblem& problem, const SolveOptions& opts = {});

// Best-first branch-and-bound on the complementarity pairs: branch on the
// pair with the largest min(x+, x-) by forcing one side to zero.
LpSolution solve_milp(const LpProblem& problem, const std::vector<ComplementarityPair>& pairs,
                      const SolveOptions& opts = {});

// Independent feasibility check: largest row residual / bound violation of
// a candidate point. Deliberately shares no state with the solver.
double max_violation(const LpProblem& problem, const std::vector<double>& x);

double objective_value(const LpProblem& problem, const std::vector<double>& x);

} // namespace griddispatch::lp
