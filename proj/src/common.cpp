#include <latentbo/common.hpp>

#include <cmath>

namespace latentbo {

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0) {
        throw InputError("Box: bound vectors must be non-empty and of equal length");
    }
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
            throw InputError("Box: need finite bounds with lower < upper in every dimension");
        }
    }
}

Box Box::cube(Eigen::Index dim, double lo, double hi) {
    return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

bool Box::contains(const Vector& x, double tol) const {
    if (x.size() != dim()) {
        return false;
    }
    return ((x.array() >= lower_.array() - tol) && (x.array() <= upper_.array() + tol)).all();
}

bool Box::contains(const Box& inner, double tol) const {
    return inner.dim() == dim() && (inner.lower_.array() >= lower_.array() - tol).all() &&
           (inner.upper_.array() <= upper_.array() + tol).all();
}

Vector Box::clip(const Vector& x) const {
    if (x.size() != dim()) {
        throw InputError("Box::clip: dimension mismatch");
    }
    return x.cwiseMax(lower_).cwiseMin(upper_);
}

Vector Box::sample(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector x(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
        x[i] = lower_[i] + unit(rng) * (upper_[i] - lower_[i]);
    }
    return x;
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    // Fill column-major so the stream order is independent of Eigen internals.
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = normal(rng);
        }
    }
    return m;
}

} // namespace latentbo
