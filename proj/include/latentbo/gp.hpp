#pragma once

#include <latentbo/common.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace latentbo::gp {

struct KernelParams {
    double signal_variance = 1.0;
    Vector lengthscales; // one per input dimension (ARD)
    double noise_variance = 1e-6;
};

/// Matérn-5/2 kernel with ARD lengthscales.
double matern52(const Vector& a, const Vector& b, const KernelParams& params);

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Factorised GP regression model. Targets are standardised internally and
/// predictions are returned on the original scale. Immutable once built.
class GpModel {
public:
    /// Builds and factorises the kernel matrix for fixed hyperparameters.
    /// Throws NumericalError if (K + noise I) stays indefinite after jitter.
    GpModel(Matrix inputs, Vector targets, KernelParams params);

    const KernelParams& params() const { return params_; }
    const Matrix& inputs() const { return inputs_; } // dim x n
    const Vector& standardised_targets() const { return y_; }
    double target_mean() const { return target_mean_; }
    double target_std() const { return target_std_; }
    /// Lower Cholesky factor of K + (noise + jitter) I.
    const Matrix& chol() const { return chol_; }
    double jitter() const { return jitter_; }
    Eigen::Index size() const { return inputs_.cols(); }
    Eigen::Index dim() const { return inputs_.rows(); }

    /// Log marginal likelihood of the standardised targets.
    double log_marginal_likelihood() const { return lml_; }

    Prediction predict(const Vector& x) const;
    /// Batch prediction over the columns of `xs`.
    std::vector<Prediction> predict(const Matrix& xs) const;

private:
    KernelParams params_;
    Matrix inputs_;
    Vector y_;
    double target_mean_ = 0.0;
    double target_std_ = 1.0;
    Matrix chol_;
    Vector alpha_;
    double jitter_ = 0.0;
    double lml_ = 0.0;
};

/// Hyperparameter search bounds (natural scale) and budget.
struct FitOptions {
    double lengthscale_min = 1e-2;
    double lengthscale_max = 1e2;
    double signal_min = 1e-3;
    double signal_max = 1e3;
    double noise_min = 1e-8;
    double noise_max = 1e-1;
    int restarts = 8;
    /// Simplex iterations per start are capped at iters_per_param * (p + 1).
    int iters_per_param = 50;
    /// When set, a single local search starts from these hyperparameters.
    std::optional<KernelParams> warm_start;
    int warm_iters_per_param = 15;
};

/// Maximum-likelihood fit of the Matérn-5/2 hyperparameters.
GpModel fit(const Matrix& inputs, const Vector& targets, const FitOptions& options,
            std::uint64_t seed);

Matrix to_matrix(const std::vector<Vector>& columns);

} // namespace latentbo::gp
