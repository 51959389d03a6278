#include <latentbo/algorithms.hpp>

#include <doctest.h>

#include <filesystem>

using namespace latentbo;
using namespace latentbo::algorithms;

namespace {

RunConfig small(const std::string& problem, const std::string& algorithm) {
    RunConfig c;
    c.problem = problem;
    c.algorithm = algorithm;
    c.dim = 6;
    c.budget = 8;
    c.retrain_period = 3;
    c.latent_dim = 2;
    c.hidden = 8;
    c.unlabelled = 400; // 4 labelled points
    c.pretrain = {5, 64, 1e-2};
    c.seed = 1;
    return c;
}

PretrainCache& cache() {
    static PretrainCache c;
    return c;
}

void check_common(const Trace& t, const RunConfig& c, std::size_t initial) {
    const testbed::Problem p = testbed::make_problem(c.problem, c.dim, c.problem_seed);
    REQUIRE_FALSE(t.error.has_value());
    CHECK(t.size() == initial + static_cast<std::size_t>(c.budget));
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const TraceRow& r = t.rows[i];
        zeros += r.iter == 0;
        CHECK(p.domain().contains(r.x));
        CHECK(r.f == p.evaluate(r.x));
        if (i) CHECK(r.best_f <= t.rows[i - 1].best_f);
    }
    CHECK(zeros == initial);
}

} // namespace

TEST_CASE("BO-SDR") {
    RunConfig c = small("rosenbrock", "bo_sdr");
    c.dim = 2;
    c.budget = 20;
    const Trace t = run(c);
    check_common(t, c, 10);
    for (const Box& roi : t.roi_snapshots) {
        CHECK(testbed::canonical_domain("rosenbrock", 2).contains(roi));
    }
    CHECK(trace_to_csv(run(c)) == trace_to_csv(t));
}

TEST_CASE("BO-SDR region narrows while the best point is static") {
    RunConfig c = small("rastrigin", "bo_sdr");
    c.dim = 2;
    c.budget = 15;
    const Trace t = run(c);
    REQUIRE(t.roi_snapshots.size() == 16);
    for (std::size_t k = 1; k < t.roi_snapshots.size(); ++k) {
        // snapshot k follows BO step k, i.e. row 9 + k
        const double before = t.rows[9 + k - 1].best_f;
        const double after = t.rows[9 + k].best_f;
        if (after == before) {
            CHECK((t.roi_snapshots[k].widths().array() <= t.roi_snapshots[k - 1].widths().array() + 1e-12).all());
        }
    }
}

TEST_CASE("vanilla BO-VAE") {
    for (bool sdr : {true, false}) {
        RunConfig c = small("ackley", sdr ? "v_bovae" : "v_bovae_nosdr");
        const Trace t = run(c, &cache());
        check_common(t, c, 4);
        CHECK(t.retrain_events == 0);
        const auto pre = cache().get(c);
        const testbed::Problem p = testbed::make_problem("ackley", c.dim);
        for (const TraceRow& r : t.rows) {
            REQUIRE(r.z.has_value());
            CHECK(r.z->size() == 2);
            if (r.iter > 0) {
                // evaluated point is the decoded latent proposal, rescaled
                const Vector x = testbed::affine_scale(pre->model.decode(*r.z), testbed::vae_input_box(c.dim), p.domain());
                CHECK((x - r.x).norm() < 1e-12);
                CHECK(c.latent_box().contains(*r.z));
            }
        }
        for (const Box& roi : t.roi_snapshots) {
            CHECK(c.latent_box().contains(roi));
            if (!sdr) CHECK(roi == c.latent_box());
        }
        CHECK(trace_to_csv(run(c, &cache())) == trace_to_csv(t));
    }
}

TEST_CASE("retraining BO-VAE") {
    const RunConfig c = small("levy", "r_bovae");
    const Trace t = run(c, &cache());
    check_common(t, c, 4);
    CHECK(t.retrain_events == 3); // ceil(8 / 3)
    CHECK(trace_to_csv(run(c, &cache())) == trace_to_csv(t));

    RunConfig full = c;
    full.budget = 350;
    full.retrain_period = 50;
    CHECK(full.cycles() == 7);
}

TEST_CASE("DML BO-VAE keeps the latent box fixed") {
    const RunConfig c = small("styblinski_tang", "s_bovae");
    const Trace t = run(c, &cache());
    check_common(t, c, 4);
    CHECK(t.retrain_events == 3);
    for (const Box& roi : t.roi_snapshots) CHECK(roi == c.latent_box());
}

TEST_CASE("degenerate triplets reproduce plain retraining without SDR") {
    RunConfig c = small("rosenbrock", "s_bovae");
    c.triplet.eta_threshold = 10.0; // wider than any normalised spread
    const Trace dml = run_retraining_bovae(c, {true, false}, &cache());
    const Trace plain = run_retraining_bovae(c, {false, false}, &cache());
    CHECK(trace_to_csv(dml) == trace_to_csv(plain));
}

TEST_CASE("REMBO through the dispatcher") {
    RunConfig c = small("lr_ackley", "rembo");
    const Trace t = run(c);
    check_common(t, c, 10);
}

TEST_CASE("validation") {
    RunConfig c = small("ackley", "r_bovae");
    c.retrain_period = 9;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = small("ackley", "v_bovae");
    c.latent_dim = 6;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = small("ackley", "magic");
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = small("ackley", "rembo");
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = small("ackley", "v_bovae");
    c.unlabelled = 100; // one labelled point
    CHECK_THROWS_AS(validate(c), ConfigError);
    CHECK_NOTHROW(validate(small("ackley", "v_bovae")));
}

TEST_CASE("pre-training cache") {
    const RunConfig c = small("ackley", "v_bovae");
    const auto a = cache().get(c);
    CHECK(a == cache().get(c));
    RunConfig other = c;
    other.problem = "levy"; // the data and network do not depend on the problem
    CHECK(a == cache().get(other));
    other.vae_seed = 5;
    CHECK(a != cache().get(other));

    const auto dir = std::filesystem::temp_directory_path() / "latentbo_ckpt_test";
    std::filesystem::remove_all(dir);
    {
        PretrainCache disk(dir);
        CHECK(disk.get(c)->model.parameters() == a->model.parameters());
    }
    CHECK(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator()) == 1);
    PretrainCache reload(dir);
    CHECK(reload.get(c)->model.parameters() == a->model.parameters());
    std::filesystem::remove_all(dir);
}
