#include <latentbo/gp.hpp>

#include "../support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace latentbo;

namespace {

Matrix uniform_matrix(int rows, int cols, std::mt19937_64& rng, double lo = -2, double hi = 2) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (auto& v : m.reshaped()) v = u(rng);
    return m;
}

} // namespace

TEST_CASE("matern52 closed form") {
    gp::KernelParams p{1.0, Vector::Ones(1), 0.0};
    Vector a(1), b(1);
    a << 0.0;
    b << 1.0;
    CHECK(gp::matern52(a, b, p) == doctest::Approx(0.52399).epsilon(1e-5));
    CHECK(gp::matern52(a, a, p) == doctest::Approx(1.0));
    p.signal_variance = 2.5;
    CHECK(gp::matern52(a, a, p) == doctest::Approx(2.5));
}

TEST_CASE("factorised posterior matches the dense-inverse oracle") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.3, 2.0);
    for (int dim : {1, 2, 5}) {
        for (int fixture = 0; fixture < 5; ++fixture) {
            const int n = 3 + fixture;
            const Matrix xs = uniform_matrix(dim, n, rng);
            const Vector ys = uniform_matrix(n, 1, rng, -5, 5).col(0);
            gp::KernelParams p;
            p.lengthscales = Vector(dim);
            for (auto& l : p.lengthscales) l = u(rng);
            p.signal_variance = u(rng);
            p.noise_variance = 1e-3;
            const gp::GpModel model(xs, ys, p);
            REQUIRE(model.jitter() == 0.0);
            const Matrix q = uniform_matrix(dim, 6, rng);
            const auto ref = oracle::dense_gp(xs, ys, p.lengthscales, p.signal_variance, p.noise_variance, q);
            const auto pred = model.predict(q);
            for (int j = 0; j < 6; ++j) {
                CHECK(std::abs(pred[j].mean - ref.mean[j]) < 1e-8);
                CHECK(std::abs(pred[j].variance - ref.variance[j]) < 1e-8);
            }
            CHECK(std::abs(model.log_marginal_likelihood() - ref.lml) < 1e-8);
        }
    }
}

TEST_CASE("constant targets and duplicate inputs") {
    Matrix xs(1, 3);
    xs << 0.0, 0.0, 1.0;
    const Vector ys = Vector::Constant(3, 4.0);
    gp::KernelParams p{1.0, Vector::Ones(1), 0.0};
    const gp::GpModel model(xs, ys, p);
    CHECK(model.target_std() == 1.0);
    CHECK(model.jitter() > 0.0); // duplicate column needs jitter
    Vector q(1);
    q << 0.5;
    CHECK(model.predict(q).mean == doctest::Approx(4.0));
}

TEST_CASE("input validation") {
    gp::KernelParams p{1.0, Vector::Ones(2), 0.0};
    CHECK_THROWS_AS(gp::GpModel(Matrix::Zero(2, 0), Vector(), p), InputError);
    CHECK_THROWS_AS(gp::GpModel(Matrix::Zero(3, 2), Vector::Zero(2), p), InputError);
    p.lengthscales[0] = -1;
    CHECK_THROWS_AS(gp::GpModel(Matrix::Zero(2, 2), Vector::Zero(2), p), InputError);
}

TEST_CASE("maximum-likelihood fit") {
    std::mt19937_64 rng(3);
    const Matrix xs = uniform_matrix(2, 15, rng);
    Vector ys(15);
    for (int i = 0; i < 15; ++i) ys[i] = std::sin(2 * xs(0, i)) + 0.1 * xs(1, i);
    const gp::GpModel fitted = gp::fit(xs, ys, {}, 9);

    SUBCASE("beats the default hyperparameters") {
        gp::KernelParams base{1.0, Vector::Ones(2), 1e-6};
        CHECK(fitted.log_marginal_likelihood() >= gp::GpModel(xs, ys, base).log_marginal_likelihood());
    }
    SUBCASE("irrelevant input gets the longer lengthscale") {
        CHECK(fitted.params().lengthscales[1] > fitted.params().lengthscales[0]);
    }
    SUBCASE("stays inside the bounds") {
        const gp::FitOptions o;
        CHECK(fitted.params().noise_variance >= o.noise_min * 0.999);
        CHECK(fitted.params().noise_variance <= o.noise_max * 1.001);
        CHECK((fitted.params().lengthscales.array() <= o.lengthscale_max * 1.001).all());
    }
    SUBCASE("deterministic given seed") {
        const gp::GpModel again = gp::fit(xs, ys, {}, 9);
        CHECK(again.params().lengthscales == fitted.params().lengthscales);
        CHECK(again.log_marginal_likelihood() == fitted.log_marginal_likelihood());
    }
    SUBCASE("warm start does not lose likelihood") {
        gp::FitOptions o;
        o.warm_start = fitted.params();
        const gp::GpModel warm = gp::fit(xs, ys, o, 1);
        CHECK(warm.log_marginal_likelihood() >= fitted.log_marginal_likelihood() - 1e-9);
    }
}
