// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/milp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace epp::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-7;    // per-row slack tolerance (norm-scaled)
constexpr double kPivotTol = 1e-9;
constexpr double kIntTol = 1e-6;

double row_norm(const Constraint& c) {
    double n = std::fabs(c.rhs);
    for (const auto& [var, coeff] : c.terms) n = std::max(n, std::fabs(coeff));
    return std::max(1.0, n);
}

}  // namespace

void MilpInstance::validate() const {
    if (num_vars < 0) throw ContractError("negative variable count");
    if (upper.size() != static_cast<size_t>(num_vars))
        throw ContractError("upper bound list size mismatch");
    for (int u : upper)
        if (u < 0) throw ContractError("negative upper bound");
    for (const Constraint& c : constraints)
        for (const auto& [var, coeff] : c.terms)
            if (var < 0 || var >= num_vars)
                throw ContractError("constraint references undeclared variable");
}

bool satisfies(const MilpInstance& instance, const std::vector<int>& values) {
    for (size_t i = 0; i < values.size(); ++i)
        if (values[i] < 0 || values[i] > instance.upper[i]) return false;
    for (const Constraint& c : instance.constraints) {
        double lhs = 0;
        for (const auto& [var, coeff] : c.terms) lhs += coeff * values[var];
        if (lhs > c.rhs + kFeasTol * row_norm(c)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Bounded-variable two-phase primal simplex on a dense tableau.
//
// Lower bounds are shifted to zero on entry; artificials repair rows whose
// slack starts negative. Dantzig pricing with a Bland fallback against
// cycling.
// ---------------------------------------------------------------------------

namespace {

class Simplex {
public:
    // minimize sum(x) over lo <= x <= up (integers as doubles), Ax <= b.
    Simplex(const MilpInstance& inst, const std::vector<double>& lo,
            const std::vector<double>& up)
        : n_(inst.num_vars), m_(static_cast<int>(inst.constraints.size())) {
        range_.assign(n_, 0.0);
        shift_const_ = 0;
        for (int j = 0; j < n_; ++j) {
            range_[j] = up[j] - lo[j];
            shift_const_ += lo[j];
        }
        // Columns: n structurals, m slacks, up to m artificials. Rows are
        // equilibrated to unit max-coefficient so the fixed pivot tolerances
        // stay meaningful for byte-scale inputs.
        rows_.assign(m_, {});
        rhs_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const Constraint& c = inst.constraints[i];
            rows_[i].assign(n_ + m_, 0.0);
            double b = c.rhs;
            double row_scale = 0;
            for (const auto& [var, coeff] : c.terms)
                row_scale = std::max(row_scale, std::fabs(coeff));
            if (row_scale == 0) row_scale = std::max(1.0, std::fabs(b));
            for (const auto& [var, coeff] : c.terms) {
                rows_[i][var] += coeff / row_scale;
                b -= coeff * lo[var];
            }
            rows_[i][n_ + i] = 1.0;  // slack, in row-scaled units
            rhs_[i] = b / row_scale;
        }
        scale_ = 1.0;
        for (int i = 0; i < m_; ++i) scale_ = std::max(scale_, std::fabs(rhs_[i]));
    }

    // Returns false when the constraints are infeasible over the box.
    bool optimize() {
        const bool has_artificials = setup();
        if (has_artificials) {
            phase1_ = true;
            rebuild_objective_row();
            price_and_iterate();
            if (objective_value_phase1() > 1e-6 * scale_) return false;
            fix_artificials();
        }
        phase1_ = false;
        rebuild_objective_row();
        price_and_iterate();
        return true;
    }

    double objective() const {
        double obj = shift_const_;
        for (int j = 0; j < n_; ++j) obj += value(j);
        return obj;
    }

    std::vector<double> solution(const std::vector<double>& lo) const {
        std::vector<double> x(n_);
        for (int j = 0; j < n_; ++j) x[j] = lo[j] + value(j);
        return x;
    }

    std::vector<double> structural_reduced_costs() const {
        return std::vector<double>(zrow_.begin(), zrow_.begin() + n_);
    }

    // Deterministic cost measure: pivots weighted by tableau size.
    long long work_units() const {
        return pivots_ * static_cast<long long>(m_) * num_cols_;
    }

private:
    enum State : unsigned char { AtLower, AtUpper, Basic };

    int n_, m_;
    int num_cols_ = 0;
    bool phase1_ = false;
    double shift_const_ = 0;
    double scale_ = 1;
    std::vector<std::vector<double>> rows_;
    std::vector<double> rhs_;
    std::vector<double> range_;      // structural upper - lower (shifted ub)
    std::vector<double> col_upper_;  // per column after setup
    std::vector<State> state_;
    std::vector<int> basis_;
    std::vector<double> beta_;       // values of basic variables
    std::vector<double> zrow_;       // reduced costs of the active objective

    double upper_of(int j) const { return col_upper_[j]; }

    double value(int j) const {
        if (state_[j] == Basic) {
            for (int i = 0; i < m_; ++i)
                if (basis_[i] == j) return beta_[i];
        }
        return state_[j] == AtUpper ? col_upper_[j] : 0.0;
    }

    // Builds basis/state columns, adding artificials for negative rows;
    // returns true when phase 1 is needed.
    bool setup() {
        std::vector<int> art_rows;
        for (int i = 0; i < m_; ++i)
            if (rhs_[i] < 0) art_rows.push_back(i);

        num_cols_ = n_ + m_ + static_cast<int>(art_rows.size());
        col_upper_.assign(num_cols_, kInf);
        for (int j = 0; j < n_; ++j) col_upper_[j] = range_[j];
        state_.assign(num_cols_, AtLower);
        basis_.assign(m_, -1);
        beta_.assign(m_, 0.0);

        int next_art = n_ + m_;
        art_begin_ = next_art;
        for (int i = 0; i < m_; ++i) {
            rows_[i].resize(num_cols_, 0.0);
            if (rhs_[i] < 0) {
                for (double& v : rows_[i]) v = -v;
                rhs_[i] = -rhs_[i];
                rows_[i][next_art] = 1.0;
                basis_[i] = next_art;
                ++next_art;
            } else {
                basis_[i] = n_ + i;
            }
            state_[basis_[i]] = Basic;
            beta_[i] = rhs_[i];
        }
        return !art_rows.empty();
    }

    void rebuild_objective_row() {
        zrow_.assign(num_cols_, 0.0);
        // Active costs: phase 1 charges artificials, phase 2 the structurals.
        auto cost = [&](int j) -> double {
            if (phase1_) return j >= art_begin_ ? 1.0 : 0.0;
            return j < n_ ? 1.0 : 0.0;
        };
        for (int j = 0; j < num_cols_; ++j) zrow_[j] = cost(j);
        for (int i = 0; i < m_; ++i) {
            const double cb = cost(basis_[i]);
            if (cb == 0.0) continue;
            for (int j = 0; j < num_cols_; ++j) zrow_[j] -= cb * rows_[i][j];
        }
    }

    double objective_value_phase1() const {
        double v = 0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= art_begin_) v += beta_[i];
        return v;
    }

    // Pins artificials to zero so phase 2 cannot revive them.
    void fix_artificials() {
        for (int j = art_begin_; j < num_cols_; ++j) col_upper_[j] = 0.0;
    }

    void price_and_iterate() {
        const int iter_bland = 200 + 20 * (m_ + num_cols_);
        const int iter_cap = 5000 + 200 * (m_ + num_cols_);
        for (int iter = 0; iter < iter_cap; ++iter) {
            const bool bland = iter >= iter_bland;
            int enter = -1;
            double best = kPivotTol;
            for (int j = 0; j < num_cols_; ++j) {
                if (state_[j] == Basic) continue;
                if (col_upper_[j] == 0.0) continue;  // fixed
                const double d = zrow_[j];
                double improvement = 0;
                if (state_[j] == AtLower && d < -kPivotTol) improvement = -d;
                if (state_[j] == AtUpper && d > kPivotTol) improvement = d;
                if (improvement > best) {
                    best = improvement;
                    enter = j;
                    if (bland) break;
                }
            }
            if (enter < 0) return;  // optimal for the active objective
            pivot(enter);
        }
        throw Error("simplex iteration limit exceeded");
    }

    void pivot(int enter) {
        const double dir = state_[enter] == AtLower ? 1.0 : -1.0;
        double theta = col_upper_[enter];  // bound-to-bound flip distance
        int leave_row = -1;
        double leave_alpha = 0;
        bool leave_to_upper = false;

        for (int i = 0; i < m_; ++i) {
            const double alpha = rows_[i][enter] * dir;
            if (std::fabs(alpha) <= kPivotTol) continue;
            double limit;
            bool to_upper;
            if (alpha > 0) {  // basic decreases toward its lower bound (0)
                limit = beta_[i] / alpha;
                to_upper = false;
            } else {  // basic increases toward its upper bound
                const double ub = upper_of(basis_[i]);
                if (ub == kInf) continue;
                limit = (ub - beta_[i]) / (-alpha);
                to_upper = true;
            }
            if (limit < -1e-9) limit = 0;  // degenerate, clamp
            if (limit < theta - 1e-12 ||
                (leave_row >= 0 && limit <= theta + 1e-12 &&
                 std::fabs(alpha) > std::fabs(leave_alpha))) {
                theta = limit;
                leave_row = i;
                leave_alpha = alpha;
                leave_to_upper = to_upper;
            }
        }
        if (theta == kInf) throw Error("LP unbounded");
        if (theta < 0) theta = 0;

        if (leave_row < 0) {
            // Bound flip: entering runs to its opposite bound.
            for (int i = 0; i < m_; ++i)
                beta_[i] -= dir * rows_[i][enter] * theta;
            state_[enter] = state_[enter] == AtLower ? AtUpper : AtLower;
            return;
        }

        ++pivots_;
        const int leave = basis_[leave_row];
        const double enter_start = state_[enter] == AtUpper ? col_upper_[enter] : 0.0;

        for (int i = 0; i < m_; ++i)
            if (i != leave_row) beta_[i] -= dir * rows_[i][enter] * theta;

        // Normalize pivot row and eliminate the entering column elsewhere.
        std::vector<double>& prow = rows_[leave_row];
        const double pval = prow[enter];
        for (double& v : prow) v /= pval;
        for (int i = 0; i < m_; ++i) {
            if (i == leave_row) continue;
            const double f = rows_[i][enter];
            if (std::fabs(f) <= 1e-14) continue;
            std::vector<double>& row = rows_[i];
            for (int j = 0; j < num_cols_; ++j) row[j] -= f * prow[j];
        }
        const double zf = zrow_[enter];
        if (std::fabs(zf) > 1e-14)
            for (int j = 0; j < num_cols_; ++j) zrow_[j] -= zf * prow[j];

        basis_[leave_row] = enter;
        state_[enter] = Basic;
        state_[leave] = leave_to_upper ? AtUpper : AtLower;
        beta_[leave_row] = enter_start + dir * theta;
    }

    int art_begin_ = 0;
    long long pivots_ = 0;
};

LpResult solve_lp(const MilpInstance& inst, const std::vector<double>& lo,
                  const std::vector<double>& up, long long* work = nullptr) {
    for (int j = 0; j < inst.num_vars; ++j)
        if (up[j] < lo[j] - 1e-12) return {Status::Infeasible, 0, {}, {}};

    Simplex sx(inst, lo, up);
    const bool feasible = sx.optimize();
    if (work) *work += sx.work_units();
    if (!feasible) return {Status::Infeasible, 0, {}, {}};
    LpResult res;
    res.status = Status::Optimal;
    res.x = sx.solution(lo);
    res.objective = sx.objective();
    res.reduced_costs = sx.structural_reduced_costs();
    return res;
}

}  // namespace

LpResult lp_relax(const MilpInstance& instance) {
    instance.validate();
    std::vector<double> lo(instance.num_vars, 0.0);
    std::vector<double> up(instance.upper.begin(), instance.upper.end());
    return solve_lp(instance, lo, up);
}

SolveResult brute_force(const MilpInstance& instance) {
    instance.validate();
    double space = 1;
    for (int u : instance.upper) space *= u + 1;
    if (space > 1e7) throw ContractError("brute-force search space too large");

    std::vector<int> values(instance.num_vars, 0);
    SolveResult best;
    long long best_obj = std::numeric_limits<long long>::max();
    while (true) {
        long long obj = 0;
        for (int v : values) obj += v;
        if (obj < best_obj && satisfies(instance, values)) {
            best_obj = obj;
            best.status = Status::Optimal;
            best.assignment = {values, static_cast<double>(obj)};
        }
        int j = 0;
        while (j < instance.num_vars && values[j] == instance.upper[j])
            values[j++] = 0;
        if (j == instance.num_vars) break;
        ++values[j];
    }
    return best;
}

namespace {

// Interval-arithmetic bound tightening to a fixpoint. Returns false when the
// tightened box is empty.
bool tighten_bounds(const MilpInstance& instance, std::vector<int>& lo,
                    std::vector<int>& hi) {
    const int n = instance.num_vars;
    for (int j = 0; j < n; ++j)
        if (lo[j] > hi[j]) return false;
    bool changed = true;
    for (int pass = 0; pass < 32 && changed; ++pass) {
        changed = false;
        for (const Constraint& c : instance.constraints) {
            double min_lhs = 0;
            for (const auto& [var, coeff] : c.terms)
                min_lhs += std::min(coeff * lo[var], coeff * hi[var]);
            const double slack_tol = kFeasTol * row_norm(c);
            if (min_lhs > c.rhs + slack_tol) return false;
            for (const auto& [var, coeff] : c.terms) {
                if (coeff == 0.0) continue;
                const double others =
                    min_lhs - std::min(coeff * lo[var], coeff * hi[var]);
                const double budget = c.rhs + slack_tol - others;
                if (coeff > 0) {
                    const int cap =
                        static_cast<int>(std::floor(budget / coeff + kIntTol));
                    if (cap < hi[var]) {
                        hi[var] = cap;
                        if (hi[var] < lo[var]) return false;
                        changed = true;
                    }
                } else {
                    const int floor_v =
                        static_cast<int>(std::ceil(budget / coeff - kIntTol));
                    if (floor_v > lo[var]) {
                        lo[var] = floor_v;
                        if (lo[var] > hi[var]) return false;
                        changed = true;
                    }
                }
            }
        }
    }
    return true;
}

}  // namespace

SolveResult solve(const MilpInstance& instance) {
    instance.validate();
    const int n = instance.num_vars;

    SolveResult best;
    long long best_obj = std::numeric_limits<long long>::max();
    auto offer = [&](const std::vector<int>& values) {
        long long obj = 0;
        for (int v : values) obj += v;
        if (obj < best_obj && satisfies(instance, values)) {
            best_obj = obj;
            best.status = Status::Optimal;
            best.assignment = {values, static_cast<double>(obj)};
        }
    };
    offer(std::vector<int>(n, 0));
    offer(instance.upper);

    struct Node {
        std::vector<int> lo, hi;
        double bound;
        std::vector<double> x;
        long long order;
    };
    struct NodeCmp {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound > b.bound;
            return a.order < b.order;  // later nodes first: dive on ties
        }
    };
    std::priority_queue<Node, std::vector<Node>, NodeCmp> open;
    long long counter = 0;

    // First-improvement descent from a feasible point; polishes rounded
    // relaxations into tight incumbents.
    auto descend = [&](std::vector<int> x) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int j = 0; j < n; ++j) {
                while (x[j] > 0) {
                    --x[j];
                    if (satisfies(instance, x)) {
                        improved = true;
                    } else {
                        ++x[j];
                        break;
                    }
                }
            }
        }
        offer(x);
    };

    long long work_used = 0;
    auto push_node = [&](std::vector<int> lo, std::vector<int> hi, bool root) {
        if (!tighten_bounds(instance, lo, hi)) return;
        std::vector<double> dlo(lo.begin(), lo.end());
        std::vector<double> dhi(hi.begin(), hi.end());
        LpResult lp = solve_lp(instance, dlo, dhi, &work_used);
        if (lp.status != Status::Optimal) return;
        const long long int_bound = static_cast<long long>(
            std::ceil(lp.objective - kIntTol));
        if (int_bound >= best_obj) return;
        // Rounding the relaxation up is usually feasible here (memory rows
        // only loosen as variables grow) and seeds incumbent pruning.
        std::vector<int> rounded(n);
        for (int j = 0; j < n; ++j) {
            const int v = static_cast<int>(std::ceil(lp.x[j] - kIntTol));
            rounded[j] = std::clamp(v, lo[j], hi[j]);
        }
        if (root)
            descend(rounded);
        else
            offer(rounded);
        if (int_bound >= best_obj) return;
        // Reduced-cost fixing: moving a variable off its bound costs at
        // least its reduced cost, so bounds shrink against the incumbent.
        if (best_obj < std::numeric_limits<long long>::max()) {
            const double budget =
                static_cast<double>(best_obj - 1) + kIntTol - lp.objective;
            for (int j = 0; j < n; ++j) {
                const double d = lp.reduced_costs[j];
                if (d > kPivotTol && lp.x[j] <= lo[j] + kIntTol) {
                    const int cap =
                        lo[j] + static_cast<int>(std::floor(budget / d + kIntTol));
                    if (cap < hi[j]) hi[j] = std::max(lo[j], cap);
                } else if (d < -kPivotTol && lp.x[j] >= hi[j] - kIntTol) {
                    const int cap =
                        hi[j] -
                        static_cast<int>(std::floor(budget / (-d) + kIntTol));
                    if (cap > lo[j]) lo[j] = std::min(hi[j], cap);
                }
            }
        }
        open.push({std::move(lo), std::move(hi), lp.objective, std::move(lp.x),
                   counter++});
    };
    push_node(std::vector<int>(n, 0), instance.upper, true);

    // Deterministic exploration budget in simplex work units (pivots times
    // tableau size), so large tableaus get proportionally fewer nodes.
    constexpr long long kWorkBudget = 600'000'000;
    constexpr long long kNodeBudget = 50000;
    long long explored = 0;
    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (static_cast<long long>(std::ceil(node.bound - kIntTol)) >= best_obj)
            continue;
        if (++explored > kNodeBudget || work_used > kWorkBudget) {
            if (best.status != Status::Optimal)
                throw Error("search budget exhausted without an incumbent");
            best.proved_optimal = false;
            return best;
        }

        // Most fractional variable, ties by lowest index.
        int branch_var = -1;
        double best_dist_to_half = 2.0;
        for (int j = 0; j < n; ++j) {
            const double frac = node.x[j] - std::floor(node.x[j]);
            if (std::min(frac, 1.0 - frac) <= kIntTol) continue;
            const double d = std::fabs(frac - 0.5);
            if (d < best_dist_to_half - 1e-12) {
                best_dist_to_half = d;
                branch_var = j;
            }
        }

        if (branch_var < 0) {
            std::vector<int> values(n);
            for (int j = 0; j < n; ++j)
                values[j] = static_cast<int>(std::llround(node.x[j]));
            offer(values);
            continue;
        }

        const int split = static_cast<int>(std::floor(node.x[branch_var]));
        {
            std::vector<int> lo = node.lo;
            lo[branch_var] = split + 1;
            if (lo[branch_var] <= node.hi[branch_var])
                push_node(lo, node.hi, false);
        }
        {
            std::vector<int> hi = node.hi;
            hi[branch_var] = split;
            if (hi[branch_var] >= node.lo[branch_var])
                push_node(node.lo, hi, false);
        }
    }
    return best;
}

std::string dump(const MilpInstance& instance) {
    std::ostringstream out;
    out.precision(17);
    out << "minimize sum(x[i]) over " << instance.num_vars << " integer vars\n";
    for (int j = 0; j < instance.num_vars; ++j)
        out << "  0 <= x" << j << " <= " << instance.upper[j] << "\n";
    for (size_t i = 0; i < instance.constraints.size(); ++i) {
        const Constraint& c = instance.constraints[i];
        out << "  r" << i << ":";
        bool first = true;
        for (const auto& [var, coeff] : c.terms) {
            out << (first ? " " : " + ") << coeff << "*x" << var;
            first = false;
        }
        if (first) out << " 0";
        out << " <= " << c.rhs << "\n";
    }
    return out.str();
}

}  // namespace epp::milp
