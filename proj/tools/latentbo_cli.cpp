#include <latentbo/harness.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Latent-space Bayesian optimisation experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run every job of an experiment config");
    std::string config;
    std::string run_out;
    bool resume = false;
    int workers = 1;
    run->add_option("--config", config, "Experiment JSON")->required();
    run->add_option("--out", run_out, "Output directory (overrides output_dir)");
    run->add_flag("--resume", resume, "Skip jobs whose trace already exists");
    run->add_option("--workers", workers, "Parallel jobs")->check(CLI::PositiveNumber);

    auto* profile = app.add_subcommand("profile", "Performance and data profiles from traces");
    std::string traces;
    double tau = 0.1;
    std::string profile_out;
    profile->add_option("--traces", traces, "Directory of trace CSVs")->required();
    profile->add_option("--tau", tau, "Solve tolerance in (0,1)")->required();
    profile->add_option("--out", profile_out, "Summary CSV path")->required();

    auto* plot = app.add_subcommand("plot", "Render an SVG plot");
    std::string in;
    std::string kind;
    std::string plot_out;
    plot->add_option("--in", in, "Trace CSV or directory (convergence), profile CSV (profile)")->required();
    plot->add_option("--kind", kind, "convergence or profile")->required();
    plot->add_option("--out", plot_out, "Output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    namespace h = latentbo::harness;
    if (run->parsed()) {
        std::optional<std::filesystem::path> out;
        if (!run_out.empty()) out = run_out;
        return h::cmd_run(config, out, resume, workers, std::cout, std::cerr);
    }
    if (profile->parsed()) {
        return h::cmd_profile(traces, tau, profile_out, std::cout, std::cerr);
    }
    return h::cmd_plot(in, kind, plot_out, std::cerr);
}
