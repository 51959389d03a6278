#include <latentbo/rembo.hpp>

#include <doctest.h>

#include <random>

using namespace latentbo;
using namespace latentbo::rembo;

TEST_CASE("embedding shape and box") {
    const Embedding e = draw_embedding(30, 4, 1);
    CHECK(e.reduced_dim == 5);
    CHECK(e.delta == doctest::Approx(4.4));
    CHECK(e.matrix_a.rows() == 30);
    CHECK(e.matrix_a.cols() == 5);
    CHECK(e.search_box() == Box::cube(5, -4.4, 4.4));
    CHECK(draw_embedding(30, 4, 1).matrix_a == e.matrix_a);
    CHECK_THROWS_AS(draw_embedding(4, 4, 1), InputError);
}

TEST_CASE("projection") {
    const Embedding e = draw_embedding(10, 4, 2);
    const Box dom = Box::cube(10, -1, 1);
    CHECK(project_up(e, Vector::Zero(5), dom) == Vector::Zero(10));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Vector y = e.search_box().sample(rng);
        const Vector x = project_up(e, y, dom);
        const Vector ay = e.matrix_a * y;
        CHECK(dom.contains(x));
        for (int j = 0; j < 10; ++j) {
            CHECK(x[j] == std::clamp(ay[j], -1.0, 1.0));
        }
        if (dom.contains(ay)) CHECK((x - ay).norm() == 0.0);
    }
    const Vector small = Vector::Constant(5, 1e-3);
    CHECK((project_up(e, small, dom) - e.matrix_a * small).norm() == 0.0);
}

TEST_CASE("objective through the embedding") {
    const testbed::Problem p = testbed::make_problem("lr_styblinski_tang", 12, 4);
    const Embedding e = draw_embedding(12, 4, 9);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const Vector y = e.search_box().sample(rng);
        const Vector x = p.domain().clip(e.matrix_a * y);
        CHECK(p.evaluate(project_up(e, y, p.domain())) == p.evaluate(x));
    }
}

TEST_CASE("run") {
    const testbed::Problem p = testbed::make_problem("lr_rosenbrock", 10, 1);
    const Trace t = run_rembo(p, 16, 5);
    CHECK(t.size() == 16);
    CHECK_FALSE(t.error.has_value());
    int initial = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& r = t.rows[i];
        initial += r.iter == 0;
        CHECK(p.domain().contains(r.x));
        REQUIRE(r.z.has_value());
        CHECK(r.z->size() == 5);
        CHECK(r.f == p.evaluate(r.x));
        if (i > 0) CHECK(r.best_f <= t.rows[i - 1].best_f);
    }
    CHECK(initial == kInitialDesign);
    CHECK(trace_to_csv(run_rembo(p, 16, 5)) == trace_to_csv(t));
    CHECK_THROWS_AS(run_rembo(testbed::make_problem("ackley", 10), 16, 1), InputError);
    CHECK_THROWS_AS(run_rembo(p, 5, 1), InputError);
}
