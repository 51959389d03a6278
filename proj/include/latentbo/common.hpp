#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace latentbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Bad arguments: shape mismatches, out-of-domain points, invalid sizes.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Unknown names or invalid settings in a configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Factorisation failures, NaN losses and similar.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned hyper-rectangle. Every search domain and region of interest is one.
class Box {
public:
    Box() = default;
    Box(Vector lower, Vector upper);

    /// [lo, hi]^dim
    static Box cube(Eigen::Index dim, double lo, double hi);

    Eigen::Index dim() const { return lower_.size(); }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    Vector widths() const { return upper_ - lower_; }
    Vector centre() const { return 0.5 * (lower_ + upper_); }

    bool contains(const Vector& x, double tol = 0.0) const;
    bool contains(const Box& inner, double tol = 0.0) const;
    Vector clip(const Vector& x) const;

    /// Uniform draw from the box.
    Vector sample(Rng& rng) const;

    friend bool operator==(const Box& a, const Box& b) {
        return a.lower_ == b.lower_ && a.upper_ == b.upper_;
    }

private:
    Vector lower_;
    Vector upper_;
};

/// Seeded generator for an independent stream. Streams with different ids
/// never share state, so consumers of one stream cannot perturb another.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Standard-normal matrix of the given shape.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

} // namespace latentbo
