#include <latentbo/eval.hpp>

#include <algorithm>
#include <limits>
#include <set>

namespace latentbo::eval {

std::optional<int> n_to_solve(const Trace& trace, double f_star, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InputError("n_to_solve: tau must lie in (0, 1)");
    }
    if (trace.rows.empty()) {
        throw InputError("n_to_solve: empty trace");
    }
    const double f0 = trace.rows.front().best_f;
    if (f0 <= f_star) {
        return 1;
    }
    const double threshold = f_star + tau * (f0 - f_star);
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        if (trace.rows[k].best_f <= threshold) {
            return static_cast<int>(k + 1);
        }
    }
    return std::nullopt;
}

namespace {

struct Table {
    std::vector<std::string> problems;
    std::vector<std::string> solvers;
    // problem -> solver -> record
    std::map<std::string, std::map<std::string, const SolveRecord*>> cells;
};

Table tabulate(const std::vector<SolveRecord>& records) {
    if (records.empty()) {
        throw InputError("profile: no records");
    }
    Table t;
    std::set<std::string> problems;
    std::set<std::string> solvers;
    for (const SolveRecord& r : records) {
        if (r.n_evals && *r.n_evals < 1) {
            throw InputError("profile: n_evals must be >= 1 for " + r.problem + "/" + r.solver);
        }
        auto& slot = t.cells[r.problem][r.solver];
        if (slot) {
            throw InputError("profile: duplicate record for " + r.problem + "/" + r.solver);
        }
        slot = &r;
        problems.insert(r.problem);
        solvers.insert(r.solver);
    }
    t.problems.assign(problems.begin(), problems.end());
    t.solvers.assign(solvers.begin(), solvers.end());
    return t;
}

const SolveRecord* find(const Table& t, const std::string& p, const std::string& s) {
    const auto& row = t.cells.at(p);
    auto it = row.find(s);
    return it == row.end() ? nullptr : it->second;
}

} // namespace

Curves performance_profile(const std::vector<SolveRecord>& records,
                           const std::vector<double>& alphas) {
    const Table t = tabulate(records);
    Curves out;
    for (const auto& s : t.solvers) {
        out[s].assign(alphas.size(), 0.0);
    }
    int counted = 0;
    for (const auto& p : t.problems) {
        int best = std::numeric_limits<int>::max();
        for (const auto& [s, r] : t.cells.at(p)) {
            if (r->n_evals) best = std::min(best, *r->n_evals);
        }
        if (best == std::numeric_limits<int>::max()) continue;
        ++counted;
        for (const auto& s : t.solvers) {
            const SolveRecord* r = find(t, p, s);
            if (!r || !r->n_evals) continue;
            const double ratio = static_cast<double>(*r->n_evals) / best;
            for (std::size_t i = 0; i < alphas.size(); ++i) {
                if (ratio <= alphas[i]) out[s][i] += 1.0;
            }
        }
    }
    if (counted > 0) {
        for (auto& [s, v] : out) {
            for (double& x : v) x /= counted;
        }
    }
    return out;
}

Curves data_profile(const std::vector<SolveRecord>& records, const std::vector<double>& alphas) {
    const Table t = tabulate(records);
    Curves out;
    for (const auto& s : t.solvers) {
        out[s].assign(alphas.size(), 0.0);
    }
    for (const auto& p : t.problems) {
        for (const auto& s : t.solvers) {
            const SolveRecord* r = find(t, p, s);
            if (!r || !r->n_evals) continue;
            const double units = static_cast<double>(r->dim + 1);
            for (std::size_t i = 0; i < alphas.size(); ++i) {
                if (*r->n_evals / units <= alphas[i]) out[s][i] += 1.0;
            }
        }
    }
    const double n = static_cast<double>(t.problems.size());
    for (auto& [s, v] : out) {
        for (double& x : v) x /= n;
    }
    return out;
}

std::map<std::string, double> solve_fractions(const std::vector<SolveRecord>& records) {
    const Table t = tabulate(records);
    std::map<std::string, double> out;
    for (const auto& s : t.solvers) {
        int solved = 0;
        for (const auto& p : t.problems) {
            const SolveRecord* r = find(t, p, s);
            if (r && r->n_evals) ++solved;
        }
        out[s] = static_cast<double>(solved) / static_cast<double>(t.problems.size());
    }
    return out;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
    if (count < 1 || !(hi >= lo)) {
        throw InputError("linear_grid: need count >= 1 and hi >= lo");
    }
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        g[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    }
    return g;
}

} // namespace latentbo::eval
