#include <latentbo/sdr.hpp>

#include <doctest.h>

#include <random>

using namespace latentbo;
using namespace latentbo::sdr;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

} // namespace

TEST_CASE("contraction endpoints") {
    const SdrParams p; // 0.7, 1.0, 0.9
    SUBCASE("c_hat = +1 gives pure panning") {
        const auto c = contraction(v1(1.0), v1(1.0), p);
        CHECK(c.c_hat[0] == 1.0);
        CHECK(c.gamma[0] == p.gamma_pan);
        CHECK(c.lambda[0] == doctest::Approx(1.0));
    }
    SUBCASE("c_hat = -1 gives oscillation damping") {
        const auto c = contraction(v1(1.0), v1(-1.0), p);
        CHECK(c.c_hat[0] == -1.0);
        CHECK(c.gamma[0] == p.gamma_osc);
        CHECK(c.lambda[0] == doctest::Approx(0.7));
    }
    SUBCASE("d = 0 zooms by eta") {
        const auto c = contraction(v1(0.0), v1(0.4), p);
        CHECK(c.c_hat[0] == 0.0);
        CHECK(c.lambda[0] == p.eta_zoom);
    }
    SUBCASE("c_hat is the signed root of d d_prev") {
        const auto c = contraction(v1(0.5), v1(-0.32), p);
        CHECK(c.c_hat[0] == doctest::Approx(-0.4));
        CHECK(c.gamma[0] == doctest::Approx((1.0 * 0.6 + 0.7 * 1.4) / 2));
        CHECK(c.lambda[0] == doctest::Approx(0.9 + 0.5 * (c.gamma[0] - 0.9)));
    }
}

TEST_CASE("initial region") {
    const Box outer = Box::cube(1, -5, 5);
    CHECK(init_roi(outer, v1(0.0)).roi == outer);
    const auto s = init_roi(outer, v1(3.0));
    CHECK(s.roi.lower()[0] == -2.0);
    CHECK(s.roi.upper()[0] == 5.0);
    CHECK_THROWS_AS(init_roi(outer, v1(6.0)), InputError);
}

TEST_CASE("update with a static best shrinks the width by eta") {
    const SdrParams p;
    auto s = init_roi(Box::cube(1, -5, 5), v1(0.0));
    s = update_roi(s, v1(0.0), p);
    CHECK(s.roi.widths()[0] == doctest::Approx(9.0));
    for (int k = 0; k < 5; ++k) {
        const double before = s.roi.widths()[0];
        s = update_roi(s, v1(0.0), p);
        CHECK(s.roi.widths()[0] == doctest::Approx(std::max(0.9 * before, p.min_size)));
    }
}

TEST_CASE("first update uses a zero previous displacement") {
    const SdrParams p;
    auto s = init_roi(Box::cube(1, -5, 5), v1(0.0));
    s = update_roi(s, v1(2.5), p); // d = 2 * 2.5 / 10 = 0.5, gamma = 0.85
    CHECK(s.prev_d.has_value());
    CHECK((*s.prev_d)[0] == doctest::Approx(0.5));
    const double lambda = 0.9 + 0.5 * (0.85 - 0.9);
    CHECK(s.roi.widths()[0] == doctest::Approx(2.5 + 5 * lambda));
    // the untrimmed region [2.5 - 5 lambda, 2.5 + 5 lambda] is cut at 5
    CHECK(s.roi.lower()[0] == doctest::Approx(2.5 - 5 * lambda));
    CHECK(s.roi.upper()[0] == 5.0);
}

TEST_CASE("trim") {
    RoiState s = init_roi(Box::cube(1, -5, 5), v1(0.0));
    s.roi = Box(v1(-2.0), v1(8.0));
    CHECK(trim(s, 0.5).roi == Box(v1(-2.0), v1(5.0)));
    s.roi = Box(v1(-0.15), v1(0.15));
    const auto t = trim(s, 0.5);
    CHECK(t.roi.lower()[0] == doctest::Approx(-0.25));
    CHECK(t.roi.upper()[0] == doctest::Approx(0.25));
    s.roi = Box(v1(-1.0), v1(1.0));
    CHECK(trim(s, 0.5).roi == s.roi);
}

TEST_CASE("update cadence") {
    SdrParams p;
    p.update_every = 3;
    RoiState s = init_roi(Box::cube(2, -5, 5), Vector::Zero(2));
    CHECK(update_due(s, 0, p));
    CHECK_FALSE(update_due(s, 1, p));
    CHECK(update_due(s, 3, p));
    s.roi = Box(Vector::Constant(2, -0.1), Vector::Constant(2, 0.1));
    CHECK_FALSE(update_due(s, 3, p));
}

TEST_CASE("region stays inside the outer box over random sequences") {
    std::mt19937_64 rng(17);
    const SdrParams p;
    const Box outer(Vector::Constant(3, -2.0), Vector::Constant(3, 7.0));
    for (int seq = 0; seq < 1000; ++seq) {
        RoiState s = init_roi(outer, outer.sample(rng));
        for (int k = 0; k < 30; ++k) {
            s = update_roi(s, outer.sample(rng), p);
            REQUIRE(outer.contains(s.roi));
            REQUIRE((s.roi.widths().array() >= std::min(p.min_size, 9.0) - 1e-12).all());
        }
    }
}

TEST_CASE("gamma stays between the two factors when |d| <= 1") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    const SdrParams p;
    for (int i = 0; i < 1000; ++i) {
        const auto c = contraction(v1(u(rng)), v1(u(rng)), p);
        CHECK(c.gamma[0] >= 0.7 - 1e-15);
        CHECK(c.gamma[0] <= 1.0 + 1e-15);
    }
}
