#include <latentbo/gp.hpp>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace latentbo::gp {
namespace {

const double kSqrt5 = std::sqrt(5.0);

double matern52_from_r(double r, double signal_variance) {
    const double s = kSqrt5 * r;
    return signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

void check_params(const KernelParams& p, Eigen::Index dim) {
    if (!(p.signal_variance > 0.0) || !(p.noise_variance >= 0.0) ||
        p.lengthscales.size() != dim || !(p.lengthscales.array() > 0.0).all()) {
        throw InputError("kernel hyperparameters must be positive with one lengthscale per input");
    }
}

Matrix kernel_matrix(const Matrix& xs, const KernelParams& p) {
    const Eigen::Index n = xs.cols();
    const Matrix scaled = p.lengthscales.cwiseInverse().asDiagonal() * xs;
    Matrix k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = p.signal_variance;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double r = (scaled.col(i) - scaled.col(j)).norm();
            k(i, j) = k(j, i) = matern52_from_r(r, p.signal_variance);
        }
    }
    return k;
}

Matrix cross_kernel(const Matrix& train, const Matrix& query, const KernelParams& p) {
    const Vector inv = p.lengthscales.cwiseInverse();
    const Matrix a = inv.asDiagonal() * train;
    const Matrix b = inv.asDiagonal() * query;
    Matrix k(a.cols(), b.cols());
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.cols(); ++i) {
            k(i, j) = matern52_from_r((a.col(i) - b.col(j)).norm(), p.signal_variance);
        }
    }
    return k;
}

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;

} // namespace

double matern52(const Vector& a, const Vector& b, const KernelParams& params) {
    if (a.size() != b.size()) {
        throw InputError("matern52: dimension mismatch");
    }
    check_params(params, a.size());
    const double r = ((a - b).array() / params.lengthscales.array()).matrix().norm();
    return matern52_from_r(r, params.signal_variance);
}

Matrix to_matrix(const std::vector<Vector>& columns) {
    if (columns.empty()) {
        return Matrix();
    }
    Matrix m(columns.front().size(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].size() != m.rows()) {
            throw InputError("to_matrix: ragged columns");
        }
        m.col(static_cast<Eigen::Index>(j)) = columns[j];
    }
    return m;
}

GpModel::GpModel(Matrix inputs, Vector targets, KernelParams params)
    : params_(std::move(params)), inputs_(std::move(inputs)) {
    const Eigen::Index n = inputs_.cols();
    if (n < 1 || targets.size() != n) {
        throw InputError("GpModel: need at least one input and one target per input");
    }
    check_params(params_, inputs_.rows());

    target_mean_ = targets.mean();
    const double var = (targets.array() - target_mean_).square().mean();
    target_std_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    y_ = (targets.array() - target_mean_) / target_std_;

    const Matrix k = kernel_matrix(inputs_, params_);
    // Plain factorisation first; jitter escalates x10 from 1e-10 to 1e-4.
    double jitter = 0.0;
    while (true) {
        Matrix a = k;
        a.diagonal().array() += params_.noise_variance + jitter;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() == Eigen::Success) {
            chol_ = llt.matrixL();
            jitter_ = jitter;
            break;
        }
        jitter = jitter == 0.0 ? kJitterStart : jitter * 10.0;
        if (jitter > kJitterMax * 1.0001) {
            throw NumericalError("GpModel: kernel matrix not positive definite after jitter");
        }
    }
    alpha_ = chol_.triangularView<Eigen::Lower>().solve(y_);
    const double fit_term = alpha_.squaredNorm();
    alpha_ = chol_.transpose().triangularView<Eigen::Upper>().solve(alpha_);
    const double log_det_half = chol_.diagonal().array().log().sum();
    lml_ = -0.5 * fit_term - log_det_half -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

Prediction GpModel::predict(const Vector& x) const {
    if (x.size() != dim()) {
        throw InputError("GpModel::predict: dimension mismatch");
    }
    Matrix q(x.size(), 1);
    q.col(0) = x;
    return predict(q).front();
}

std::vector<Prediction> GpModel::predict(const Matrix& xs) const {
    if (xs.rows() != dim()) {
        throw InputError("GpModel::predict: dimension mismatch");
    }
    const Matrix ks = cross_kernel(inputs_, xs, params_);
    const Vector mean_s = ks.transpose() * alpha_;
    const Matrix v = chol_.triangularView<Eigen::Lower>().solve(ks);
    std::vector<Prediction> out(static_cast<std::size_t>(xs.cols()));
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
        const double var_s = std::max(params_.signal_variance - v.col(j).squaredNorm(), 0.0);
        out[static_cast<std::size_t>(j)] = {target_mean_ + target_std_ * mean_s[j],
                                            target_std_ * target_std_ * var_s};
    }
    return out;
}

namespace {

// Log-space parameter vector: [log l_1..log l_D, log sf2, log sn2].
struct Objective {
    const Matrix* inputs;
    const Vector* targets;
    Vector lo;
    Vector hi;

    KernelParams decode(const Vector& theta) const {
        const Vector t = theta.cwiseMax(lo).cwiseMin(hi);
        const Eigen::Index d = inputs->rows();
        KernelParams p;
        p.lengthscales = t.head(d).array().exp();
        p.signal_variance = std::exp(t[d]);
        p.noise_variance = std::exp(t[d + 1]);
        return p;
    }

    double operator()(const Vector& theta) const {
        try {
            return -GpModel(*inputs, *targets, decode(theta)).log_marginal_likelihood();
        } catch (const NumericalError&) {
            return 1e10;
        }
    }
};

double gsl_objective(const gsl_vector* v, void* data) {
    const auto* obj = static_cast<const Objective*>(data);
    Vector theta(static_cast<Eigen::Index>(v->size));
    for (std::size_t i = 0; i < v->size; ++i) {
        theta[static_cast<Eigen::Index>(i)] = gsl_vector_get(v, i);
    }
    const double value = (*obj)(theta);
    return std::isfinite(value) ? value : 1e10;
}

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

// Bounded Nelder-Mead: the objective is evaluated at the clamped point.
std::pair<Vector, double> nelder_mead(const Objective& obj, const Vector& start, int max_iters) {
    const auto p = static_cast<std::size_t>(start.size());
    std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(p));
    std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(p));
    for (std::size_t i = 0; i < p; ++i) {
        gsl_vector_set(x.get(), i, start[static_cast<Eigen::Index>(i)]);
        gsl_vector_set(step.get(), i, 0.5);
    }
    gsl_multimin_function fn{&gsl_objective, p, const_cast<Objective*>(&obj)};
    std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> nm(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, p));
    gsl_multimin_fminimizer_set(nm.get(), &fn, x.get(), step.get());
    for (int it = 0; it < max_iters; ++it) {
        if (gsl_multimin_fminimizer_iterate(nm.get()) != GSL_SUCCESS) {
            break;
        }
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm.get()), 1e-4) == GSL_SUCCESS) {
            break;
        }
    }
    Vector best(start.size());
    for (std::size_t i = 0; i < p; ++i) {
        best[static_cast<Eigen::Index>(i)] = gsl_vector_get(nm->x, i);
    }
    best = best.cwiseMax(obj.lo).cwiseMin(obj.hi);
    return {best, obj(best)};
}

struct GslHandlerGuard {
    GslHandlerGuard() { gsl_set_error_handler_off(); }
};

} // namespace

GpModel fit(const Matrix& inputs, const Vector& targets, const FitOptions& options,
            std::uint64_t seed) {
    static const GslHandlerGuard guard;
    const Eigen::Index d = inputs.rows();
    if (inputs.cols() < 2 || targets.size() != inputs.cols()) {
        throw InputError("gp::fit: need n >= 2 inputs with matching targets");
    }
    Objective obj{&inputs, &targets, Vector(d + 2), Vector(d + 2)};
    obj.lo.head(d).setConstant(std::log(options.lengthscale_min));
    obj.hi.head(d).setConstant(std::log(options.lengthscale_max));
    obj.lo[d] = std::log(options.signal_min);
    obj.hi[d] = std::log(options.signal_max);
    obj.lo[d + 1] = std::log(options.noise_min);
    obj.hi[d + 1] = std::log(options.noise_max);

    std::vector<Vector> starts;
    int iters_per_param = options.iters_per_param;
    if (options.warm_start) {
        const KernelParams& w = *options.warm_start;
        check_params(w, d);
        Vector t(d + 2);
        t.head(d) = w.lengthscales.array().log();
        t[d] = std::log(w.signal_variance);
        t[d + 1] = std::log(std::max(w.noise_variance, options.noise_min));
        starts.push_back(t.cwiseMax(obj.lo).cwiseMin(obj.hi));
        iters_per_param = options.warm_iters_per_param;
    } else {
        // Heuristic start: lengthscale ~ half the data spread per dimension.
        Vector t(d + 2);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double spread = inputs.row(i).maxCoeff() - inputs.row(i).minCoeff();
            t[i] = std::log(std::max(0.5 * spread, 1e-2));
        }
        t[d] = 0.0;
        t[d + 1] = std::log(1e-4);
        starts.push_back(t.cwiseMax(obj.lo).cwiseMin(obj.hi));
        Rng rng = make_rng(seed, 0x6a);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int r = 1; r < options.restarts; ++r) {
            Vector s(d + 2);
            for (Eigen::Index i = 0; i < d + 2; ++i) {
                s[i] = obj.lo[i] + unit(rng) * (obj.hi[i] - obj.lo[i]);
            }
            starts.push_back(s);
        }
    }

    const int max_iters = iters_per_param * static_cast<int>(d + 3);
    Vector best_theta;
    double best_value = std::numeric_limits<double>::infinity();
    for (const Vector& s : starts) {
        auto [theta, value] = nelder_mead(obj, s, max_iters);
        if (value < best_value) {
            best_value = value;
            best_theta = theta;
        }
    }
    if (!std::isfinite(best_value) || best_value >= 1e10) {
        throw NumericalError("gp::fit: no hyperparameter setting gave a factorisable kernel");
    }
    return GpModel(inputs, targets, obj.decode(best_theta));
}

} // namespace latentbo::gp
