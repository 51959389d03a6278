#pragma once

#include <latentbo/trace.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latentbo::eval {

/// Outcome of one solver on one problem instance.
struct SolveRecord {
    std::string problem;
    std::string solver;
    std::optional<int> n_evals; // empty when never solved
    int dim = 0;                // n_p
    int budget = 0;             // evaluations actually spent
};

/// Smallest evaluation count k (1-based, over all trace rows) whose running
/// best satisfies f_k <= f* + tau (f_0 - f*), with f_0 the first row's best.
/// Returns 1 when f_0 <= f* already.
std::optional<int> n_to_solve(const Trace& trace, double f_star, double tau);

/// Solver name -> curve value at each alpha.
using Curves = std::map<std::string, std::vector<double>>;

/// Fraction of problems with n_evals / min_s n_evals <= alpha. Problems no
/// solver solved are left out of the denominator.
Curves performance_profile(const std::vector<SolveRecord>& records,
                           const std::vector<double>& alphas);

/// Fraction of problems with n_evals <= alpha (n_p + 1), over all problems.
Curves data_profile(const std::vector<SolveRecord>& records, const std::vector<double>& alphas);

/// Fraction of all problems each solver solved.
std::map<std::string, double> solve_fractions(const std::vector<SolveRecord>& records);

/// `count` evenly spaced points from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, int count);

} // namespace latentbo::eval
