#pragma once

#include <latentbo/common.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latentbo::testbed {

/// Closed-form value of a base benchmark. Names: ackley, levy, rosenbrock,
/// styblinski_tang, rastrigin (any dimension) and shekel5, shekel7 (4-D).
/// Throws ConfigError for unknown names and InputError on dimension mismatch.
double eval_benchmark(std::string_view name, const Vector& x);

/// Canonical search domain of a base benchmark in the given dimension.
Box canonical_domain(std::string_view name, Eigen::Index dim);

/// Known global minimum value of a base benchmark.
double global_minimum(std::string_view name, Eigen::Index dim);

/// A benchmark instance: objective, domain and known optimum value.
///
/// evaluate() clips its argument into the domain before applying the closed
/// form, so projections that land outside the box are still well defined.
class Problem {
public:
    using Objective = std::function<double(const Vector&)>;

    Problem(std::string name, Box domain, double f_star, Objective objective,
            std::optional<int> effective_dim = std::nullopt,
            std::optional<Matrix> rotation = std::nullopt);

    const std::string& name() const { return name_; }
    Eigen::Index dim() const { return domain_.dim(); }
    const Box& domain() const { return domain_; }
    double f_star() const { return f_star_; }
    const std::optional<int>& effective_dim() const { return effective_dim_; }
    const std::optional<Matrix>& rotation() const { return rotation_; }

    double evaluate(const Vector& x) const;

private:
    std::string name_;
    Box domain_;
    double f_star_;
    Objective objective_;
    std::optional<int> effective_dim_;
    std::optional<Matrix> rotation_;
};

/// Effective dimensionality of every low-rank base function.
inline constexpr int kLowRankEffectiveDim = 4;

/// Low-rank embedding f(x) = h(Qx) of a 4-D base function whose domain is
/// rescaled to [-1,1]^4; Q is a seeded random orthogonal matrix and the
/// problem domain is [-1,1]^D.
Problem make_low_rank(std::string_view base, Eigen::Index ambient_dim, std::uint64_t seed);

/// Same construction with a caller-supplied orthogonal matrix.
Problem make_low_rank(std::string_view base, Eigen::Index ambient_dim, Matrix rotation);

/// Seeded random orthogonal matrix, sign-fixed so the factorisation is unique.
Matrix random_orthogonal(Eigen::Index dim, std::uint64_t seed);

/// Registry lookup. Full-rank: ackley, levy, rosenbrock, styblinski_tang,
/// rastrigin. Low-rank: lr_ackley, lr_rosenbrock, lr_shekel5, lr_shekel7,
/// lr_styblinski_tang (seed selects the rotation).
Problem make_problem(std::string_view name, Eigen::Index dim, std::uint64_t seed = 0);

/// Every name make_problem() accepts.
const std::vector<std::string>& problem_names();
bool is_known_problem(std::string_view name);

/// Known optimum of a registered problem without constructing its rotation.
double problem_f_star(std::string_view name, Eigen::Index dim);

/// Componentwise affine map taking `from` onto `to`.
Vector affine_scale(const Vector& x, const Box& from, const Box& to);

/// The fixed VAE input space [-3,3]^D.
Box vae_input_box(Eigen::Index dim);

/// M correlated Gaussian samples (columns of a D x M matrix) clipped into
/// [-3,3]^D. Covariance exp(-|i-j| / (D/4)) with unit marginal variance.
Matrix sample_unlabelled(Eigen::Index dim, Eigen::Index count, std::uint64_t seed);

struct LabelledDataset {
    std::vector<Vector> points;
    std::vector<double> values;

    std::size_t size() const { return points.size(); }
    void push_back(Vector x, double f) {
        points.push_back(std::move(x));
        values.push_back(f);
    }
};

/// ceil(fraction * n) distinct indices drawn uniformly from [0, n).
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);

LabelledDataset subsample_labelled(const LabelledDataset& full, double fraction, std::uint64_t seed);

} // namespace latentbo::testbed
