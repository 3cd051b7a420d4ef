#include "griddispatch/lp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace griddispatch::lp {

const char* status_name(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration_limit";
        case LpStatus::NodeLimit: return "node_limit";
    }
    return "?";
}

int LpProblem::add_variable(const std::string& name, double lo, double hi, double obj) {
    objective.push_back(obj);
    lower.push_back(lo);
    upper.push_back(hi);
    names.push_back(name);
    return num_vars() - 1;
}

void LpProblem::add_row(const std::vector<double>& coeffs, Relation rel, double rhs) {
    if (static_cast<int>(coeffs.size()) != num_vars())
        throw std::runtime_error("lp: row width " + std::to_string(coeffs.size()) +
                                 " != variable count " + std::to_string(num_vars()));
    rows.push_back({coeffs, rel, rhs});
}

void LpProblem::add_row_sparse(const std::vector<std::pair<int, double>>& terms, Relation rel,
                               double rhs) {
    std::vector<double> coeffs(static_cast<std::size_t>(num_vars()), 0.0);
    for (const auto& [idx, c] : terms) {
        if (idx < 0 || idx >= num_vars()) throw std::runtime_error("lp: sparse term index out of range");
        coeffs[static_cast<std::size_t>(idx)] += c;
    }
    rows.push_back({std::move(coeffs), rel, rhs});
}

void LpProblem::validate() const {
    const std::size_t n = objective.size();
    if (lower.size() != n || upper.size() != n)
        throw std::runtime_error("lp: bounds size mismatch");
    for (std::size_t j = 0; j < n; ++j)
        if (lower[j] > upper[j])
            throw std::runtime_error("lp: crossed bounds on variable " +
                                     (j < names.size() && !names[j].empty() ? names[j] : std::to_string(j)));
    for (const auto& r : rows)
        if (r.coeffs.size() != n) throw std::runtime_error("lp: row width mismatch");
}

std::string LpProblem::dump() const {
    std::ostringstream os;
    auto vname = [&](int j) {
        return (static_cast<std::size_t>(j) < names.size() && !names[static_cast<std::size_t>(j)].empty())
                   ? names[static_cast<std::size_t>(j)]
                   : "x" + std::to_string(j);
    };
    os << "maximize";
    for (int j = 0; j < num_vars(); ++j)
        if (objective[static_cast<std::size_t>(j)] != 0.0)
            os << " " << std::showpos << objective[static_cast<std::size_t>(j)] << std::noshowpos
               << "*" << vname(j);
    os << "\n";
    for (const auto& r : rows) {
        os << " ";
        bool any = false;
        for (int j = 0; j < num_vars(); ++j)
            if (r.coeffs[static_cast<std::size_t>(j)] != 0.0) {
                os << " " << std::showpos << r.coeffs[static_cast<std::size_t>(j)] << std::noshowpos
                   << "*" << vname(j);
                any = true;
            }
        if (!any) os << " 0";
        os << (r.rel == Relation::LessEq ? " <= " : r.rel == Relation::Equal ? " = " : " >= ")
           << r.rhs << "\n";
    }
    for (int j = 0; j < num_vars(); ++j)
        os << " " << lower[static_cast<std::size_t>(j)] << " <= " << vname(j) << " <= "
           << upper[static_cast<std::size_t>(j)] << "\n";
    return os.str();
}

double max_violation(const LpProblem& problem, const std::vector<double>& x) {
    double worst = 0.0;
    for (int j = 0; j < problem.num_vars(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        worst = std::max(worst, problem.lower[ju] - x[ju]);
        worst = std::max(worst, x[ju] - problem.upper[ju]);
    }
    for (const auto& r : problem.rows) {
        double lhs = 0.0;
        for (int j = 0; j < problem.num_vars(); ++j)
            lhs += r.coeffs[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
        switch (r.rel) {
            case Relation::LessEq: worst = std::max(worst, lhs - r.rhs); break;
            case Relation::GreaterEq: worst = std::max(worst, r.rhs - lhs); break;
            case Relation::Equal: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
        }
    }
    return worst;
}

double objective_value(const LpProblem& problem, const std::vector<double>& x) {
    double v = 0.0;
    for (int j = 0; j < problem.num_vars(); ++j)
        v += problem.objective[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    return v;
}

namespace {

// Computational form: structurals, then one slack per row, then any
// phase-1 artificials. Slack and artificial columns are unit vectors so
// only structural columns are stored densely.
class Simplex {
public:
    Simplex(const LpProblem& p, int iteration_limit)
        : p_(p),
          m_(p.num_rows()),
          n_(p.num_vars()),
          iter_limit_(iteration_limit) {}

    LpSolution run() {
        setup();
        LpSolution out;
        if (needs_phase1_) {
            phase1_ = true;
            const auto st = iterate();
            phase1_ = false;
            if (st == LpStatus::IterationLimit) return finish(out, st);
            double infeas = 0.0;
            for (int a : artificials_) infeas += value_[static_cast<std::size_t>(a)];
            if (infeas > kFeasTol) return finish(out, LpStatus::Infeasible);
            // pin artificials at zero for phase 2
            for (int a : artificials_) {
                lo_[static_cast<std::size_t>(a)] = 0.0;
                hi_[static_cast<std::size_t>(a)] = 0.0;
                value_[static_cast<std::size_t>(a)] = 0.0;
            }
        }
        const auto st = iterate();
        return finish(out, st);
    }

private:
    const LpProblem& p_;
    int m_;
    int n_;
    int total_ = 0;
    int iter_limit_;
    bool phase1_ = false;
    bool needs_phase1_ = false;
    int iterations_ = 0;

    std::vector<double> lo_, hi_, value_, obj_;
    std::vector<char> at_upper_;   // meaningful for nonbasic variables
    std::vector<int> basis_;       // variable basic in each row
    std::vector<int> pos_in_basis_; // -1 for nonbasic
    std::vector<double> binv_;     // m x m row-major
    std::vector<int> artificials_;
    std::vector<double> art_sign_; // per row, 0 when no artificial
    int pivots_since_refactor_ = 0;
    int degenerate_streak_ = 0;

    double& binv(int r, int c) { return binv_[static_cast<std::size_t>(r * m_ + c)]; }
    double binv_at(int r, int c) const { return binv_[static_cast<std::size_t>(r * m_ + c)]; }

    bool fixed(int j) const {
        return lo_[static_cast<std::size_t>(j)] == hi_[static_cast<std::size_t>(j)];
    }

    // column j of the computational-form matrix, entry for row i
    double col_entry(int j, int i) const {
        if (j < n_) return p_.rows[static_cast<std::size_t>(i)].coeffs[static_cast<std::size_t>(j)];
        if (j < n_ + m_) return j - n_ == i ? 1.0 : 0.0;
        const int k = j - n_ - m_; // artificial ordinal
        return artificials_row_[static_cast<std::size_t>(k)] == i
                   ? art_sign_[static_cast<std::size_t>(i)]
                   : 0.0;
    }

    std::vector<int> artificials_row_;

    double objective_coeff(int j) const {
        if (phase1_) return j >= n_ + m_ ? -1.0 : 0.0;
        if (j < n_) return p_.objective[static_cast<std::size_t>(j)];
        return 0.0;
    }

    void setup() {
        p_.validate();
        lo_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
        hi_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
        value_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
        at_upper_.assign(static_cast<std::size_t>(n_ + m_), 0);
        for (int j = 0; j < n_; ++j) {
            lo_[static_cast<std::size_t>(j)] = p_.lower[static_cast<std::size_t>(j)];
            hi_[static_cast<std::size_t>(j)] = p_.upper[static_cast<std::size_t>(j)];
        }
        for (int i = 0; i < m_; ++i) {
            switch (p_.rows[static_cast<std::size_t>(i)].rel) {
                case Relation::LessEq:
                    lo_[static_cast<std::size_t>(n_ + i)] = 0.0;
                    hi_[static_cast<std::size_t>(n_ + i)] = kInf;
                    break;
                case Relation::GreaterEq:
                    lo_[static_cast<std::size_t>(n_ + i)] = -kInf;
                    hi_[static_cast<std::size_t>(n_ + i)] = 0.0;
                    break;
                case Relation::Equal:
                    lo_[static_cast<std::size_t>(n_ + i)] = 0.0;
                    hi_[static_cast<std::size_t>(n_ + i)] = 0.0;
                    break;
            }
        }
        // nonbasic structurals at the finite bound nearest zero
        for (int j = 0; j < n_; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            double v = 0.0;
            bool upper = false;
            if (std::isfinite(lo_[ju]) && std::isfinite(hi_[ju])) {
                if (std::abs(hi_[ju]) < std::abs(lo_[ju])) { v = hi_[ju]; upper = true; }
                else v = lo_[ju];
            } else if (std::isfinite(lo_[ju])) {
                v = lo_[ju];
            } else if (std::isfinite(hi_[ju])) {
                v = hi_[ju];
                upper = true;
            }
            value_[ju] = v;
            at_upper_[ju] = upper ? 1 : 0;
        }
        // residual per row decides slack vs artificial start
        basis_.assign(static_cast<std::size_t>(m_), -1);
        art_sign_.assign(static_cast<std::size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) {
            const auto& row = p_.rows[static_cast<std::size_t>(i)];
            double r = row.rhs;
            for (int j = 0; j < n_; ++j)
                r -= row.coeffs[static_cast<std::size_t>(j)] * value_[static_cast<std::size_t>(j)];
            const auto si = static_cast<std::size_t>(n_ + i);
            if (r >= lo_[si] - kFeasTol && r <= hi_[si] + kFeasTol) {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
                value_[si] = std::clamp(r, lo_[si], hi_[si]);
            } else {
                // slack parked at its violated-side bound, artificial absorbs the rest
                const double parked = r > hi_[si] ? hi_[si] : lo_[si];
                value_[si] = parked;
                at_upper_[si] = r > hi_[si] ? 1 : 0;
                const double resid = r - parked;
                const int aj = n_ + m_ + static_cast<int>(artificials_.size());
                artificials_.push_back(aj);
                artificials_row_.push_back(i);
                art_sign_[static_cast<std::size_t>(i)] = resid > 0 ? 1.0 : -1.0;
                lo_.push_back(0.0);
                hi_.push_back(kInf);
                value_.push_back(std::abs(resid));
                at_upper_.push_back(0);
                basis_[static_cast<std::size_t>(i)] = aj;
                needs_phase1_ = true;
            }
        }
        total_ = n_ + m_ + static_cast<int>(artificials_.size());
        pos_in_basis_.assign(static_cast<std::size_t>(total_), -1);
        for (int i = 0; i < m_; ++i)
            pos_in_basis_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = i;
        binv_.assign(static_cast<std::size_t>(m_ * m_), 0.0);
        refactorize();
        if (iter_limit_ <= 0) iter_limit_ = 2000 + 200 * (m_ + n_);
    }

    // rebuild binv_ from the basis by Gauss-Jordan with partial pivoting
    void refactorize() {
        std::vector<double> b(static_cast<std::size_t>(m_ * m_), 0.0);
        for (int c = 0; c < m_; ++c)
            for (int r = 0; r < m_; ++r)
                b[static_cast<std::size_t>(r * m_ + c)] = col_entry(basis_[static_cast<std::size_t>(c)], r);
        std::fill(binv_.begin(), binv_.end(), 0.0);
        for (int i = 0; i < m_; ++i) binv(i, i) = 1.0;
        for (int c = 0; c < m_; ++c) {
            int piv = -1;
            double best = 0.0;
            for (int r = c; r < m_; ++r) {
                const double a = std::abs(b[static_cast<std::size_t>(r * m_ + c)]);
                if (a > best) { best = a; piv = r; }
            }
            if (piv < 0 || best < 1e-12) throw std::runtime_error("lp: singular basis");
            if (piv != c) {
                for (int k = 0; k < m_; ++k) {
                    std::swap(b[static_cast<std::size_t>(piv * m_ + k)], b[static_cast<std::size_t>(c * m_ + k)]);
                    std::swap(binv(piv, k), binv(c, k));
                }
            }
            const double d = b[static_cast<std::size_t>(c * m_ + c)];
            for (int k = 0; k < m_; ++k) {
                b[static_cast<std::size_t>(c * m_ + k)] /= d;
                binv(c, k) /= d;
            }
            for (int r = 0; r < m_; ++r) {
                if (r == c) continue;
                const double f = b[static_cast<std::size_t>(r * m_ + c)];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) {
                    b[static_cast<std::size_t>(r * m_ + k)] -= f * b[static_cast<std::size_t>(c * m_ + k)];
                    binv(r, k) -= f * binv(c, k);
                }
            }
        }
        pivots_since_refactor_ = 0;
        recompute_basics();
    }

    void recompute_basics() {
        // x_B = Binv (b - sum over nonbasic columns)
        std::vector<double> rhs(static_cast<std::size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) rhs[static_cast<std::size_t>(i)] = p_.rows[static_cast<std::size_t>(i)].rhs;
        for (int j = 0; j < total_; ++j) {
            if (pos_in_basis_[static_cast<std::size_t>(j)] >= 0) continue;
            const double v = value_[static_cast<std::size_t>(j)];
            if (v == 0.0) continue;
            if (j < n_) {
                for (int i = 0; i < m_; ++i)
                    rhs[static_cast<std::size_t>(i)] -=
                        p_.rows[static_cast<std::size_t>(i)].coeffs[static_cast<std::size_t>(j)] * v;
            } else if (j < n_ + m_) {
                rhs[static_cast<std::size_t>(j - n_)] -= v;
            } else {
                rhs[static_cast<std::size_t>(artificials_row_[static_cast<std::size_t>(j - n_ - m_)])] -=
                    art_sign_[static_cast<std::size_t>(artificials_row_[static_cast<std::size_t>(j - n_ - m_)])] * v;
            }
        }
        for (int i = 0; i < m_; ++i) {
            double v = 0.0;
            for (int k = 0; k < m_; ++k) v += binv_at(i, k) * rhs[static_cast<std::size_t>(k)];
            value_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = v;
        }
    }

    std::vector<double> ftran(int j) const {
        std::vector<double> w(static_cast<std::size_t>(m_), 0.0);
        if (j < n_) {
            for (int i = 0; i < m_; ++i) {
                double v = 0.0;
                for (int k = 0; k < m_; ++k) {
                    const double a = p_.rows[static_cast<std::size_t>(k)].coeffs[static_cast<std::size_t>(j)];
                    if (a != 0.0) v += binv_at(i, k) * a;
                }
                w[static_cast<std::size_t>(i)] = v;
            }
        } else if (j < n_ + m_) {
            const int c = j - n_;
            for (int i = 0; i < m_; ++i) w[static_cast<std::size_t>(i)] = binv_at(i, c);
        } else {
            const int r = artificials_row_[static_cast<std::size_t>(j - n_ - m_)];
            const double s = art_sign_[static_cast<std::size_t>(r)];
            for (int i = 0; i < m_; ++i) w[static_cast<std::size_t>(i)] = s * binv_at(i, r);
        }
        return w;
    }

    LpStatus iterate() {
        while (true) {
            if (iterations_ >= iter_limit_) return LpStatus::IterationLimit;
            ++iterations_;

            // duals y^T = c_B^T Binv
            std::vector<double> y(static_cast<std::size_t>(m_), 0.0);
            for (int k = 0; k < m_; ++k) {
                const double cb = objective_coeff(basis_[static_cast<std::size_t>(k)]);
                if (cb == 0.0) continue;
                for (int i = 0; i < m_; ++i) y[static_cast<std::size_t>(i)] += cb * binv_at(k, i);
            }

            const bool bland = degenerate_streak_ > 40;
            int enter = -1;
            double best_score = 0.0;
            int enter_dir = +1;
            for (int j = 0; j < total_; ++j) {
                if (pos_in_basis_[static_cast<std::size_t>(j)] >= 0 || fixed(j)) continue;
                // reduced cost
                double d = objective_coeff(j);
                if (j < n_) {
                    for (int i = 0; i < m_; ++i) {
                        const double a = p_.rows[static_cast<std::size_t>(i)].coeffs[static_cast<std::size_t>(j)];
                        if (a != 0.0) d -= y[static_cast<std::size_t>(i)] * a;
                    }
                } else if (j < n_ + m_) {
                    d -= y[static_cast<std::size_t>(j - n_)];
                } else {
                    const int r = artificials_row_[static_cast<std::size_t>(j - n_ - m_)];
                    d -= y[static_cast<std::size_t>(r)] * art_sign_[static_cast<std::size_t>(r)];
                }
                const auto ju = static_cast<std::size_t>(j);
                const bool free_var = !std::isfinite(lo_[ju]) && !std::isfinite(hi_[ju]);
                int dir = 0;
                if (free_var) {
                    if (std::abs(d) > 1e-9) dir = d > 0 ? +1 : -1;
                } else if (!at_upper_[ju] && d > 1e-9) {
                    dir = +1;
                } else if (at_upper_[ju] && d < -1e-9) {
                    dir = -1;
                }
                if (dir == 0) continue;
                if (bland) { enter = j; enter_dir = dir; break; }
                if (std::abs(d) > best_score) {
                    best_score = std::abs(d);
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            const auto w = ftran(enter);
            const auto eu = static_cast<std::size_t>(enter);

            // ratio test
            double t = kInf;
            bool flip = false;
            if (std::isfinite(lo_[eu]) && std::isfinite(hi_[eu])) {
                t = hi_[eu] - lo_[eu];
                flip = true;
            }
            int leave_row = -1;
            double leave_to_upper = 0.0;
            for (int k = 0; k < m_; ++k) {
                const double wk = w[static_cast<std::size_t>(k)];
                if (std::abs(wk) <= kPivotTol) continue;
                const int bj = basis_[static_cast<std::size_t>(k)];
                const auto bju = static_cast<std::size_t>(bj);
                const double xb = value_[bju];
                const double delta = enter_dir * wk; // basic moves at rate -delta
                double limit = kInf;
                bool to_upper = false;
                if (delta > 0 && std::isfinite(lo_[bju])) {
                    limit = (xb - lo_[bju]) / delta;
                } else if (delta < 0 && std::isfinite(hi_[bju])) {
                    limit = (hi_[bju] - xb) / -delta;
                    to_upper = true;
                }
                if (limit < -1e-12) limit = 0.0;
                if (limit < t - 1e-12 ||
                    (leave_row >= 0 && limit < t + 1e-12 &&
                     (bland ? bj < basis_[static_cast<std::size_t>(leave_row)]
                            : std::abs(wk) > std::abs(w[static_cast<std::size_t>(leave_row)])))) {
                    t = std::max(limit, 0.0);
                    leave_row = k;
                    leave_to_upper = to_upper;
                    flip = false;
                } else if (limit < t) {
                    // equal within tolerance but not preferred; keep bound flip only if strictly larger
                    if (flip && limit < t) { t = std::max(limit, 0.0); leave_row = k; leave_to_upper = to_upper; flip = false; }
                }
            }
            if (!std::isfinite(t)) return phase1_ ? LpStatus::Infeasible : LpStatus::Unbounded;

            degenerate_streak_ = t < 1e-11 ? degenerate_streak_ + 1 : 0;

            if (flip) {
                // entering variable moves across to its other bound
                const double step = enter_dir * t;
                for (int k = 0; k < m_; ++k)
                    value_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)])] -=
                        step * w[static_cast<std::size_t>(k)];
                value_[eu] = at_upper_[eu] ? lo_[eu] : hi_[eu];
                at_upper_[eu] = at_upper_[eu] ? 0 : 1;
                continue;
            }

            // pivot
            const double step = enter_dir * t;
            for (int k = 0; k < m_; ++k)
                value_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)])] -=
                    step * w[static_cast<std::size_t>(k)];
            value_[eu] += step;

            const int leave_var = basis_[static_cast<std::size_t>(leave_row)];
            const auto lu = static_cast<std::size_t>(leave_var);
            value_[lu] = leave_to_upper ? hi_[lu] : lo_[lu];
            at_upper_[lu] = leave_to_upper ? 1 : 0;
            pos_in_basis_[lu] = -1;
            basis_[static_cast<std::size_t>(leave_row)] = enter;
            pos_in_basis_[eu] = leave_row;

            // product-form update of Binv
            const double piv = w[static_cast<std::size_t>(leave_row)];
            for (int k = 0; k < m_; ++k) binv(leave_row, k) /= piv;
            for (int r = 0; r < m_; ++r) {
                if (r == leave_row) continue;
                const double f = w[static_cast<std::size_t>(r)];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) binv(r, k) -= f * binv_at(leave_row, k);
            }

            if (++pivots_since_refactor_ >= 80) refactorize();
        }
    }

    LpSolution finish(LpSolution& out, LpStatus st) {
        out.status = st;
        out.iterations = iterations_;
        if (st != LpStatus::Optimal) return out;
        refactorize(); // fresh inverse before extraction keeps residuals tiny
        out.x.assign(static_cast<std::size_t>(n_), 0.0);
        for (int j = 0; j < n_; ++j) {
            double v = value_[static_cast<std::size_t>(j)];
            v = std::clamp(v, p_.lower[static_cast<std::size_t>(j)], p_.upper[static_cast<std::size_t>(j)]);
            out.x[static_cast<std::size_t>(j)] = v;
        }
        out.objective = objective_value(p_, out.x);
        if (max_violation(p_, out.x) > kFeasTol)
            throw std::runtime_error("lp: solution failed the independent feasibility check");
        return out;
    }
};

} // namespace

LpSolution solve_lp(const LpProblem& problem, const SolveOptions& opts) {
    Simplex s(problem, opts.iteration_limit);
    return s.run();
}

LpSolution solve_milp(const LpProblem& problem, const std::vector<ComplementarityPair>& pairs,
                      const SolveOptions& opts) {
    problem.validate();
    for (const auto& pr : pairs) {
        if (pr.plus < 0 || pr.minus < 0 || pr.plus >= problem.num_vars() ||
            pr.minus >= problem.num_vars() || pr.plus == pr.minus)
            throw std::runtime_error("milp: bad complementarity pair");
        if (problem.lower[static_cast<std::size_t>(pr.plus)] < 0.0 ||
            problem.lower[static_cast<std::size_t>(pr.minus)] < 0.0)
            throw std::runtime_error("milp: pair variables need nonnegative lower bounds");
    }
    if (pairs.empty()) return solve_lp(problem, opts);

    struct Node {
        std::vector<int> forced_zero; // variables pinned to zero on this path
        double bound = 0.0;
        long id = 0;
    };
    struct NodeOrder {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound < b.bound; // max-heap on bound
            return a.id > b.id;                               // deterministic tie-break
        }
    };

    auto solve_with = [&](const std::vector<int>& forced) {
        LpProblem sub = problem;
        for (int v : forced) sub.upper[static_cast<std::size_t>(v)] = 0.0;
        return solve_lp(sub, opts);
    };

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 0;
    long nodes = 0;

    LpSolution best;
    best.status = LpStatus::Infeasible;
    bool have_incumbent = false;
    bool any_iter_limit = false;

    auto consider = [&](const Node& node) -> bool {
        // returns true when the tree is exhausted by budget
        ++nodes;
        auto sol = solve_with(node.forced_zero);
        sol.nodes = nodes;
        if (sol.status == LpStatus::Unbounded) {
            best = sol;
            have_incumbent = true;
            return true;
        }
        if (sol.status == LpStatus::IterationLimit) {
            any_iter_limit = true;
            return false;
        }
        if (sol.status != LpStatus::Optimal) return false;
        if (have_incumbent && sol.objective <= best.objective + 1e-9) return false;

        // most-violated pair
        int worst = -1;
        double worst_v = kCompTol;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const double a = sol.x[static_cast<std::size_t>(pairs[k].plus)];
            const double b = sol.x[static_cast<std::size_t>(pairs[k].minus)];
            const double v = std::min(a, b);
            if (v > worst_v) { worst_v = v; worst = static_cast<int>(k); }
        }
        if (worst < 0) {
            if (!have_incumbent || sol.objective > best.objective) {
                best = sol;
                have_incumbent = true;
            }
            return false;
        }
        for (int side = 0; side < 2; ++side) {
            Node child;
            child.forced_zero = node.forced_zero;
            child.forced_zero.push_back(side == 0 ? pairs[static_cast<std::size_t>(worst)].plus
                                                  : pairs[static_cast<std::size_t>(worst)].minus);
            child.bound = sol.objective;
            child.id = next_id++;
            open.push(std::move(child));
        }
        return false;
    };

    Node root;
    root.id = next_id++;
    consider(root);
    while (!open.empty()) {
        if (nodes >= opts.node_limit) {
            LpSolution out = best;
            out.status = LpStatus::NodeLimit;
            out.nodes = nodes;
            return out;
        }
        Node node = open.top();
        open.pop();
        if (have_incumbent && node.bound <= best.objective + 1e-9) continue;
        consider(node);
    }

    if (!have_incumbent) {
        LpSolution out;
        out.status = any_iter_limit ? LpStatus::IterationLimit : LpStatus::Infeasible;
        out.nodes = nodes;
        return out;
    }
    best.nodes = nodes;
    if (best.status != LpStatus::Unbounded)
        // an iteration-limited subproblem leaves part of the tree unexplored,
        // so the incumbent cannot be certified optimal
        best.status = any_iter_limit ? LpStatus::IterationLimit : LpStatus::Optimal;
    return best;
}

} // namespace griddispatch::lp
