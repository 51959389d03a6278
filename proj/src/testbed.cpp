#include <latentbo/testbed.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace latentbo::testbed {
namespace {

constexpr double kPi = std::numbers::pi;

double ackley(const Vector& x) {
    const double n = static_cast<double>(x.size());
    const double sq = x.squaredNorm() / n;
    const double cs = (2.0 * kPi * x.array()).cos().sum() / n;
    return -20.0 * std::exp(-0.2 * std::sqrt(sq)) - std::exp(cs) + 20.0 + std::numbers::e;
}

double levy(const Vector& x) {
    const Eigen::Index n = x.size();
    const Eigen::ArrayXd w = 1.0 + (x.array() - 1.0) / 4.0;
    double sum = std::pow(std::sin(kPi * w[0]), 2);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        sum += std::pow(w[i] - 1.0, 2) * (1.0 + 10.0 * std::pow(std::sin(kPi * w[i] + 1.0), 2));
    }
    sum += std::pow(w[n - 1] - 1.0, 2) * (1.0 + std::pow(std::sin(2.0 * kPi * w[n - 1]), 2));
    return sum;
}

double rosenbrock(const Vector& x) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        sum += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(x[i] - 1.0, 2);
    }
    return sum;
}

double styblinski_tang(const Vector& x) {
    const Eigen::ArrayXd a = x.array();
    return 0.5 * (a.pow(4) - 16.0 * a.square() + 5.0 * a).sum();
}

double rastrigin(const Vector& x) {
    const Eigen::ArrayXd a = x.array();
    return 10.0 * static_cast<double>(x.size()) + (a.square() - 10.0 * (2.0 * kPi * a).cos()).sum();
}

// Standard Shekel constants (m = 10 rows available, the first m are used).
constexpr std::array<double, 10> kShekelBeta{0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
constexpr std::array<std::array<double, 4>, 10> kShekelC{{
    {4.0, 4.0, 4.0, 4.0},
    {1.0, 1.0, 1.0, 1.0},
    {8.0, 8.0, 8.0, 8.0},
    {6.0, 6.0, 6.0, 6.0},
    {3.0, 7.0, 3.0, 7.0},
    {2.0, 9.0, 2.0, 9.0},
    {5.0, 3.0, 5.0, 3.0},
    {8.0, 1.0, 8.0, 1.0},
    {6.0, 2.0, 6.0, 2.0},
    {7.0, 3.6, 7.0, 3.6},
}};

double shekel(const Vector& x, int m) {
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        double d = kShekelBeta[i];
        for (int j = 0; j < 4; ++j) {
            d += std::pow(x[j] - kShekelC[i][j], 2);
        }
        sum -= 1.0 / d;
    }
    return sum;
}

struct BaseInfo {
    std::string_view name;
    double lo;
    double hi;
    int fixed_dim; // 0 = any dimension
};

constexpr std::array<BaseInfo, 7> kBases{{
    {"ackley", -30.0, 30.0, 0},
    {"levy", -10.0, 10.0, 0},
    {"rosenbrock", -5.0, 10.0, 0},
    {"styblinski_tang", -5.0, 5.0, 0},
    {"rastrigin", -5.12, 5.12, 0},
    {"shekel5", 0.0, 10.0, 4},
    {"shekel7", 0.0, 10.0, 4},
}};

const BaseInfo& base_info(std::string_view name) {
    for (const auto& b : kBases) {
        if (b.name == name) {
            return b;
        }
    }
    throw ConfigError("unknown benchmark function '" + std::string(name) + "'");
}

// Low-rank bases use their own domains (Ackley shrinks to [-5,5]).
Box low_rank_base_domain(std::string_view base) {
    if (base == "ackley" || base == "styblinski_tang") {
        return Box::cube(kLowRankEffectiveDim, -5.0, 5.0);
    }
    if (base == "rosenbrock") {
        return Box::cube(kLowRankEffectiveDim, -5.0, 10.0);
    }
    if (base == "shekel5" || base == "shekel7") {
        return Box::cube(kLowRankEffectiveDim, 0.0, 10.0);
    }
    throw ConfigError("'" + std::string(base) + "' has no low-rank variant");
}

} // namespace

double eval_benchmark(std::string_view name, const Vector& x) {
    const BaseInfo& info = base_info(name);
    if (x.size() == 0 || (info.fixed_dim != 0 && x.size() != info.fixed_dim)) {
        throw InputError("benchmark '" + std::string(name) + "': dimension mismatch");
    }
    if (name == "ackley") return ackley(x);
    if (name == "levy") return levy(x);
    if (name == "rosenbrock") return rosenbrock(x);
    if (name == "styblinski_tang") return styblinski_tang(x);
    if (name == "rastrigin") return rastrigin(x);
    if (name == "shekel5") return shekel(x, 5);
    return shekel(x, 7);
}

Box canonical_domain(std::string_view name, Eigen::Index dim) {
    const BaseInfo& info = base_info(name);
    if (info.fixed_dim != 0 && dim != info.fixed_dim) {
        throw InputError("benchmark '" + std::string(name) + "' is fixed-dimensional");
    }
    return Box::cube(dim, info.lo, info.hi);
}

double global_minimum(std::string_view name, Eigen::Index dim) {
    base_info(name);
    if (name == "styblinski_tang") return -39.16599 * static_cast<double>(dim);
    if (name == "shekel5") return -10.1532;
    if (name == "shekel7") return -10.4029;
    return 0.0;
}

Problem::Problem(std::string name, Box domain, double f_star, Objective objective,
                 std::optional<int> effective_dim, std::optional<Matrix> rotation)
    : name_(std::move(name)),
      domain_(std::move(domain)),
      f_star_(f_star),
      objective_(std::move(objective)),
      effective_dim_(effective_dim),
      rotation_(std::move(rotation)) {}

double Problem::evaluate(const Vector& x) const {
    if (x.size() != dim()) {
        throw InputError("problem '" + name_ + "': expected dimension " + std::to_string(dim()));
    }
    return objective_(domain_.clip(x));
}

Matrix random_orthogonal(Eigen::Index dim, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x51);
    const Matrix g = gaussian_matrix(dim, dim, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j) {
        if (r(j, j) < 0.0) {
            q.col(j) = -q.col(j);
        }
    }
    return q;
}

Problem make_low_rank(std::string_view base, Eigen::Index ambient_dim, Matrix rotation) {
    const Box base_box = low_rank_base_domain(base);
    if (ambient_dim < kLowRankEffectiveDim) {
        throw InputError("low-rank problems need ambient dimension >= 4");
    }
    if (rotation.rows() != ambient_dim || rotation.cols() != ambient_dim) {
        throw InputError("low-rank rotation must be D x D");
    }
    const Box unit = Box::cube(kLowRankEffectiveDim, -1.0, 1.0);
    const std::string base_name(base);
    Matrix effective_rows = rotation.topRows(kLowRankEffectiveDim);
    auto objective = [base_name, base_box, unit, effective_rows](const Vector& x) {
        const Vector y = effective_rows * x;
        return eval_benchmark(base_name, affine_scale(y, unit, base_box));
    };
    return Problem("lr_" + base_name, Box::cube(ambient_dim, -1.0, 1.0),
                   global_minimum(base_name, kLowRankEffectiveDim), std::move(objective),
                   kLowRankEffectiveDim, std::move(rotation));
}

Problem make_low_rank(std::string_view base, Eigen::Index ambient_dim, std::uint64_t seed) {
    low_rank_base_domain(base);
    if (ambient_dim < kLowRankEffectiveDim) {
        throw InputError("low-rank problems need ambient dimension >= 4");
    }
    return make_low_rank(base, ambient_dim, random_orthogonal(ambient_dim, seed));
}

const std::vector<std::string>& problem_names() {
    static const std::vector<std::string> names{
        "ackley",     "levy",          "rosenbrock", "styblinski_tang", "rastrigin",
        "lr_ackley",  "lr_rosenbrock", "lr_shekel5", "lr_shekel7",      "lr_styblinski_tang"};
    return names;
}

bool is_known_problem(std::string_view name) {
    const auto& names = problem_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

Problem make_problem(std::string_view name, Eigen::Index dim, std::uint64_t seed) {
    if (!is_known_problem(name)) {
        throw ConfigError("unknown problem '" + std::string(name) + "'");
    }
    if (name.starts_with("lr_")) {
        return make_low_rank(name.substr(3), dim, seed);
    }
    const std::string base(name);
    return Problem(base, canonical_domain(name, dim), global_minimum(name, dim),
                   [base](const Vector& x) { return eval_benchmark(base, x); });
}

double problem_f_star(std::string_view name, Eigen::Index dim) {
    if (!is_known_problem(name)) {
        throw ConfigError("unknown problem '" + std::string(name) + "'");
    }
    if (name.starts_with("lr_")) {
        return global_minimum(name.substr(3), kLowRankEffectiveDim);
    }
    return global_minimum(name, dim);
}

Vector affine_scale(const Vector& x, const Box& from, const Box& to) {
    if (x.size() != from.dim() || from.dim() != to.dim()) {
        throw InputError("affine_scale: dimension mismatch");
    }
    if ((from.widths().array() <= 0.0).any() || (to.widths().array() <= 0.0).any()) {
        throw InputError("affine_scale: degenerate box");
    }
    const Eigen::ArrayXd t = (x - from.lower()).array() / from.widths().array();
    return to.lower() + (t * to.widths().array()).matrix();
}

Box vae_input_box(Eigen::Index dim) { return Box::cube(dim, -3.0, 3.0); }

Matrix sample_unlabelled(Eigen::Index dim, Eigen::Index count, std::uint64_t seed) {
    if (dim < 1 || count < 1) {
        throw InputError("sample_unlabelled: D and M must be positive");
    }
    const double length = static_cast<double>(dim) / 4.0;
    Matrix cov(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            cov(i, j) = std::exp(-std::abs(static_cast<double>(i - j)) / length);
        }
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("sample_unlabelled: covariance not positive definite");
    }
    Rng rng = make_rng(seed, 0x11);
    const Matrix xi = gaussian_matrix(dim, count, rng);
    Matrix samples = llt.matrixL() * xi;
    return samples.cwiseMax(-3.0).cwiseMin(3.0);
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (n == 0) {
        throw InputError("subsample: empty input");
    }
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InputError("subsample: fraction must lie in (0, 1]");
    }
    // The small slack keeps 0.01 * 50000 at 500 rather than 501.
    const auto k = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(seed, 0x5b);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    return idx;
}

LabelledDataset subsample_labelled(const LabelledDataset& full, double fraction, std::uint64_t seed) {
    if (full.points.size() != full.values.size()) {
        throw InputError("subsample_labelled: points and values differ in length");
    }
    LabelledDataset out;
    for (std::size_t i : subsample_indices(full.size(), fraction, seed)) {
        out.push_back(full.points[i], full.values[i]);
    }
    return out;
}

} // namespace latentbo::testbed
