#include <latentbo/eval.hpp>

#include <doctest.h>

using namespace latentbo;
using namespace latentbo::eval;

namespace {

Trace trace_of(const std::vector<double>& fs) {
    Trace t;
    for (std::size_t i = 0; i < fs.size(); ++i) t.append(static_cast<int>(i), Vector::Zero(1), std::nullopt, fs[i]);
    return t;
}

SolveRecord rec(std::string p, std::string s, std::optional<int> n, int dim = 1) {
    return {std::move(p), std::move(s), n, dim, 100};
}

} // namespace

TEST_CASE("n_to_solve") {
    const Trace t = trace_of({10, 8, 5, 1.5, 0.9, 0.5, 0.001});
    CHECK(n_to_solve(t, 0.0, 0.1) == 5);       // first best <= 1
    CHECK(n_to_solve(t, 0.0, 1e-3) == 7);  // threshold 0.01
    CHECK(n_to_solve(trace_of({10, 5, 0.005}), 0.0, 1e-3) == 3);
    CHECK(n_to_solve(trace_of({-1.0, 3.0}), 0.0, 0.1) == 1); // already solved
    CHECK(n_to_solve(trace_of({10, 20, 30}), 0.0, 0.1) == std::nullopt);
    CHECK_THROWS_AS(n_to_solve(t, 0.0, 0.0), InputError);
    CHECK_THROWS_AS(n_to_solve(t, 0.0, 1.0), InputError);
    CHECK_THROWS_AS(n_to_solve(Trace{}, 0.0, 0.1), InputError);
    // tighter tolerance never needs fewer evaluations
    const Trace u = trace_of({4, 3, 2, 1, 0.5, 0.1, 0.01, 0.001});
    CHECK(*n_to_solve(u, 0.0, 1e-3) >= *n_to_solve(u, 0.0, 1e-1));
}

TEST_CASE("performance profile on hand fixtures") {
    // A costs {2, 4}, B costs {4, 4}
    const std::vector<SolveRecord> r{rec("p1", "A", 2), rec("p1", "B", 4), rec("p2", "A", 4), rec("p2", "B", 4)};
    const auto c = performance_profile(r, {1.0, 1.5, 2.0});
    CHECK(c.at("A") == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(c.at("B") == std::vector<double>{0.5, 0.5, 1.0});
}

TEST_CASE("performance profile drops problems nobody solved") {
    const std::vector<SolveRecord> r{rec("p1", "A", 3), rec("p1", "B", std::nullopt),
                                     rec("p2", "A", std::nullopt), rec("p2", "B", std::nullopt),
                                     rec("p3", "A", 6), rec("p3", "B", 2)};
    const auto c = performance_profile(r, {1.0, 2.0, 3.0, 10.0});
    CHECK(c.at("A") == std::vector<double>{0.5, 0.5, 1.0, 1.0});
    CHECK(c.at("B") == std::vector<double>{0.5, 0.5, 0.5, 0.5});
    const auto single = performance_profile({rec("p", "S", 7), rec("q", "S", 3)}, {1.0});
    CHECK(single.at("S") == std::vector<double>{1.0});
}

TEST_CASE("data profile on hand fixtures") {
    const std::vector<SolveRecord> r{rec("p1", "A", 101, 100), rec("p1", "B", 202, 100),
                                     rec("p2", "A", std::nullopt, 4), rec("p2", "B", 5, 4)};
    const auto c = data_profile(r, {0.0, 0.99, 1.0, 2.0, 3.0});
    CHECK(c.at("A") == std::vector<double>{0.0, 0.0, 0.5, 0.5, 0.5});
    CHECK(c.at("B") == std::vector<double>{0.0, 0.0, 0.5, 1.0, 1.0});
    const auto f = solve_fractions(r);
    CHECK(f.at("A") == 0.5);
    CHECK(f.at("B") == 1.0);
}

TEST_CASE("profiles are monotone step functions in [0, 1]") {
    std::vector<SolveRecord> r;
    for (int p = 0; p < 6; ++p) {
        r.push_back(rec("p" + std::to_string(p), "A", p % 3 ? std::optional<int>(5 + p) : std::nullopt, 3));
        r.push_back(rec("p" + std::to_string(p), "B", 4 + 2 * p, 3));
    }
    const auto alphas = linear_grid(0, 10, 101);
    for (const auto& curves : {performance_profile(r, alphas), data_profile(r, alphas)}) {
        for (const auto& [s, v] : curves) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                CHECK(v[i] >= 0.0);
                CHECK(v[i] <= 1.0);
                if (i) CHECK(v[i] >= v[i - 1]);
            }
        }
    }
}

TEST_CASE("input errors") {
    CHECK_THROWS_AS(performance_profile({}, {1.0}), InputError);
    CHECK_THROWS_AS(data_profile({}, {1.0}), InputError);
    CHECK_THROWS_AS(performance_profile({rec("p", "A", 1), rec("p", "A", 2)}, {1.0}), InputError);
    CHECK_THROWS_AS(performance_profile({rec("p", "A", 0)}, {1.0}), InputError);
    CHECK(linear_grid(0, 1, 3) == std::vector<double>{0.0, 0.5, 1.0});
}
