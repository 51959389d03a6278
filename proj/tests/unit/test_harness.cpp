#include <latentbo/harness.hpp>

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace latentbo;
using namespace latentbo::harness;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("latentbo_harness_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kSmallConfig = R"({
  "name": "small",
  "repeats": 5,
  "defaults": {"dim": 2, "budget": 2, "initial_points": 3},
  "runs": [
    {"problems": ["ackley", "rastrigin"], "algorithms": ["bo_sdr"]},
    {"problems": ["ackley", "rastrigin"], "algorithm": "v_bovae",
     "dim": 4, "latent_dim": 2, "hidden": 4, "unlabelled": 300,
     "pretrain": {"epochs": 2, "batch_size": 64}}
  ]
})";

/// Hand-made trace: iter 0 then BO rows, with given f values.
std::string trace_csv(int dim, const std::vector<double>& fs) {
    Trace t;
    for (std::size_t i = 0; i < fs.size(); ++i) t.append(static_cast<int>(i), Vector::Zero(dim), std::nullopt, fs[i]);
    return trace_to_csv(t);
}

} // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig c = parse_config(kSmallConfig, "small.json");
    CHECK(c.name == "small");
    CHECK(c.runs.size() == 4);
    const auto jobs = c.jobs();
    CHECK(jobs.size() == 20);
    CHECK(jobs[0].config.seed == 0);
    CHECK(jobs[4].config.seed == 4);
    CHECK(jobs[4].config.problem_seed == 4);
    CHECK(jobs[0].config.initial_points == 3);
    CHECK(jobs[19].config.dim == 4);
    CHECK(jobs[19].config.pretrain.epochs == 2);
    CHECK(jobs[19].config.pretrain.batch_size == 64);
    CHECK(jobs[0].file_name() == "ackley_bo_sdr_0.csv");
    CHECK(c.jobs(100)[0].config.seed == 100);
}

TEST_CASE("config errors name the key and line") {
    auto message = [](const std::string& text) {
        try {
            parse_config(text, "cfg.json");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("{\n  \"runs\": [\n    {\"problem\": \"nosuch\", \"algorithm\": \"bo_sdr\"}\n  ]\n}") ==
          "cfg.json:3: runs[0].problem: unknown problem 'nosuch'");
    CHECK(message("{\n\"runs\": [{\"algorithm\": \"bo_sdr\"}]\n}").find("runs[0].problem: missing required key") !=
          std::string::npos);
    CHECK(message("{\n\"runs\": [{\"problem\": \"ackley\",\n \"algorithm\": \"bo_sdr\",\n \"budgte\": 3}]}") ==
          "cfg.json:4: runs[0].budgte: unknown key 'budgte'");
    CHECK(message("{\n\"runs\": [{\"problem\": \"ackley\", \"algorithm\": \"r_bovae\",\n\"budget\": 4,\n\"retrain_period\": 9}]}") ==
          "cfg.json:4: runs[0].retrain_period: must lie in [1, budget]");
    CHECK(message("{\n\"runs\": [{\"problem\": \"ackley\", \"algorithm\": \"bo_sdr\",\n\"sdr\": {\"min_size\": \"big\"}}]}") ==
          "cfg.json:3: runs[0].sdr.min_size: expected a number");
    CHECK(message("{\n\"runs\": [\n{\"problem\": \"ackley\"\n\"algorithm\": 1}]}").rfind("cfg.json:4: invalid JSON", 0) == 0);
    CHECK(message("{\"runs\": []}").find("non-empty") != std::string::npos);
}

TEST_CASE("trace file names") {
    const auto a = parse_trace_name("lr_styblinski_tang_v_bovae_nosdr_12.csv");
    REQUIRE(a);
    CHECK(a->problem == "lr_styblinski_tang");
    CHECK(a->algorithm == "v_bovae_nosdr");
    CHECK(a->seed == 12);
    const auto b = parse_trace_name("ackley_v_bovae_3.csv");
    REQUIRE(b);
    CHECK(b->algorithm == "v_bovae");
    CHECK_FALSE(parse_trace_name("ackley_magic_3.csv"));
    CHECK_FALSE(parse_trace_name("ackley_bo_sdr_x.csv"));
    CHECK_FALSE(parse_trace_name("summary.csv"));
}

TEST_CASE("trace CSV round trip") {
    Trace t;
    t.append(0, (Vector(2) << 0.1, -1.0 / 3.0).finished(), (Vector(1) << 2.5).finished(), std::sqrt(2.0));
    t.append(1, (Vector(2) << 1e-300, 7.0).finished(), (Vector(1) << -0.0).finished(), 1.0 / 7.0);
    const Trace back = trace_from_csv(trace_to_csv(t));
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.rows[i].iter == t.rows[i].iter);
        CHECK(back.rows[i].x == t.rows[i].x);
        CHECK(*back.rows[i].z == *t.rows[i].z);
        CHECK(back.rows[i].f == t.rows[i].f);
        CHECK(back.rows[i].best_f == t.rows[i].best_f);
    }
    CHECK(trace_to_csv(back) == trace_to_csv(t));
    CHECK_THROWS(trace_from_csv("iter,f,best_f,x_0\n0,1,1\n"));
}

TEST_CASE("run, resume and manifest") {
    const fs::path dir = fresh_dir("run");
    const fs::path cfg = dir / "cfg.json";
    write(cfg, kSmallConfig);
    std::ostringstream log, err;
    CHECK(cmd_run(cfg, dir / "out", false, 2, log, err) == 0);
    int traces = 0;
    for (const auto& e : fs::directory_iterator(dir / "out")) traces += e.path().extension() == ".csv";
    CHECK(traces == 20);
    const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest["jobs"].size() == 20);
    for (const auto& j : manifest["jobs"]) {
        CHECK(j["status"] == "ok");
        CHECK(j["run_config"].contains("seed"));
        CHECK(j["run_config"].contains("problem_seed"));
    }

    const std::string before = slurp(dir / "out" / "rastrigin_v_bovae_3.csv");
    std::ostringstream log2;
    CHECK(cmd_run(cfg, dir / "out", true, 1, log2, err) == 0);
    CHECK(log2.str().find("0 completed, 20 skipped") != std::string::npos);

    // a single job re-run in isolation is byte-identical
    fs::remove(dir / "out" / "rastrigin_v_bovae_3.csv");
    std::ostringstream log3;
    CHECK(cmd_run(cfg, dir / "out", true, 1, log3, err) == 0);
    CHECK(log3.str().find("1 completed, 19 skipped") != std::string::npos);
    CHECK(slurp(dir / "out" / "rastrigin_v_bovae_3.csv") == before);
    fs::remove_all(dir);
}

TEST_CASE("seed offset from the environment") {
    const fs::path dir = fresh_dir("offset");
    write(dir / "cfg.json", R"({"repeats": 1, "defaults": {"dim": 2, "budget": 1, "initial_points": 2},
                               "runs": [{"problem": "ackley", "algorithm": "bo_sdr"}]})");
    setenv("LATENTBO_SEED_OFFSET", "7", 1);
    std::ostringstream log, err;
    CHECK(cmd_run(dir / "cfg.json", dir / "out", false, 1, log, err) == 0);
    CHECK(fs::exists(dir / "out" / "ackley_bo_sdr_7.csv"));
    setenv("LATENTBO_SEED_OFFSET", "abc", 1);
    CHECK(cmd_run(dir / "cfg.json", dir / "out", false, 1, log, err) == 2);
    unsetenv("LATENTBO_SEED_OFFSET");
    fs::remove_all(dir);
}

TEST_CASE("bad config exits with 2") {
    const fs::path dir = fresh_dir("bad");
    write(dir / "cfg.json", "{\n\"runs\": [{\"problem\": \"sphere\", \"algorithm\": \"bo_sdr\"}]}");
    std::ostringstream log, err;
    CHECK(cmd_run(dir / "cfg.json", dir / "out", false, 1, log, err) == 2);
    CHECK(err.str().find("runs[0].problem") != std::string::npos);
    CHECK(cmd_run(dir / "missing.json", dir / "out", false, 1, log, err) == 2);
    fs::remove_all(dir);
}

TEST_CASE("profile from fixture traces") {
    const fs::path dir = fresh_dir("profile");
    // ackley f* = 0. Problem instances: ackley#0, ackley#1, rastrigin#0.
    write(dir / "ackley_bo_sdr_0.csv", trace_csv(2, {10, 5, 0.5}));         // solves at 3
    write(dir / "ackley_s_bovae_0.csv", trace_csv(2, {10, 0.9}));           // solves at 2
    write(dir / "ackley_bo_sdr_1.csv", trace_csv(2, {10, 9, 8}));           // never
    write(dir / "ackley_s_bovae_1.csv", trace_csv(2, {10, 1.0}));           // solves at 2
    write(dir / "rastrigin_bo_sdr_0.csv", trace_csv(2, {20, 20}));          // never
    write(dir / "rastrigin_s_bovae_0.csv", trace_csv(2, {20, 3, 1}));       // solves at 3
    write(dir / "sphere_bo_sdr_0.csv", trace_csv(2, {1, 0}));               // unknown problem
    std::ostringstream log, err;
    CHECK(cmd_profile(dir, 0.1, dir / "out" / "summary.csv", log, err) == 0);
    CHECK(err.str().find("unknown problem 'sphere'") != std::string::npos);
    const std::string summary = slurp(dir / "out" / "summary.csv");
    CHECK(summary ==
          "# tau=0.10000000000000001\n"
          "solver,solved,problems,percent_solved\n"
          "bo_sdr,1,3,33.3\n"
          "s_bovae,3,3,100.0\n");
    const std::string perf = slurp(dir / "out" / "summary_performance.csv");
    CHECK(perf.rfind("# tau=", 0) == 0);
    CHECK(perf.find("alpha,bo_sdr,s_bovae\n1,0,1\n1.5,0.33333333333333331,1\n") != std::string::npos);
    const std::string data = slurp(dir / "out" / "summary_data.csv");
    // units of n_p + 1 = 3 evaluations: s_bovae solves at 2/3, 2/3, 1; bo_sdr at 1
    CHECK(data.find("alpha,bo_sdr,s_bovae\n0,0,0\n0.66666666666666663,0,0.66666666666666663\n1,0.33333333333333331,1\n") !=
          std::string::npos);

    const fs::path empty = fresh_dir("profile_empty");
    CHECK(cmd_profile(empty, 0.1, empty / "s.csv", log, err) == 2);
    fs::remove_all(dir);
    fs::remove_all(empty);
}

TEST_CASE("plots") {
    const fs::path dir = fresh_dir("plot");
    for (int s = 0; s < 5; ++s) {
        write(dir / ("ackley_v_bovae_" + std::to_string(s) + ".csv"), trace_csv(2, {10.0 + s, 5.0, 1.0 * s}));
        write(dir / ("ackley_v_bovae_nosdr_" + std::to_string(s) + ".csv"), trace_csv(2, {10.0 + s, 8.0, 7.0}));
    }
    std::ostringstream err;
    CHECK(cmd_plot(dir, "convergence", dir / "a.svg", err) == 0);
    CHECK(cmd_plot(dir, "convergence", dir / "b.svg", err) == 0);
    const std::string svg = slurp(dir / "a.svg");
    CHECK(svg == slurp(dir / "b.svg"));
    CHECK(svg.rfind("<?xml", 0) == 0);
    // one band and one mean line per algorithm
    std::size_t polygons = 0, pos = 0;
    while ((pos = svg.find("<polygon", pos)) != std::string::npos) ++polygons, ++pos;
    CHECK(polygons == 2);

    const auto series = convergence_series(
        {TraceName{"ackley", "v_bovae", 0}}, {trace_from_csv(trace_csv(2, {3, 2, 1}))});
    REQUIRE(series.size() == 1);
    CHECK(series[0].std == std::vector<double>{0, 0, 0});
    CHECK(series[0].mean == std::vector<double>{3, 2, 1});

    write(dir / "profile.csv", "# tau=0.1\nalpha,A,B\n1,0.5,0\n2,1,0.5\n");
    CHECK(cmd_plot(dir / "profile.csv", "profile", dir / "p.svg", err) == 0);
    write(dir / "bad.csv", "alpha,A\n1,oops\n");
    CHECK(cmd_plot(dir / "bad.csv", "profile", dir / "q.svg", err) == 2);
    write(dir / "broken_v_bovae_0.csv", "iter,f\n0\n");
    CHECK(cmd_plot(dir / "broken_v_bovae_0.csv", "convergence", dir / "r.svg", err) == 2);
    CHECK(cmd_plot(dir / "profile.csv", "pie", dir / "s.svg", err) == 2);
    fs::remove_all(dir);
}
