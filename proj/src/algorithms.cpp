#include <latentbo/algorithms.hpp>

#include <latentbo/rembo.hpp>

#include "bo_step.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace latentbo::algorithms {

const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names{"bo_sdr",  "v_bovae", "v_bovae_nosdr",
                                                "r_bovae", "s_bovae", "rembo"};
    return names;
}

bool is_known_algorithm(const std::string& name) {
    const auto& names = algorithm_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

void validate(const RunConfig& cfg) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError(field + ": " + why);
    };
    if (!testbed::is_known_problem(cfg.problem)) fail("problem", "unknown problem '" + cfg.problem + "'");
    if (!is_known_algorithm(cfg.algorithm)) fail("algorithm", "unknown algorithm '" + cfg.algorithm + "'");
    if (cfg.dim < 1) fail("dim", "must be positive");
    if (cfg.problem.starts_with("lr_") && cfg.dim < testbed::kLowRankEffectiveDim + 1) {
        fail("dim", "low-rank problems need dim >= 5");
    }
    if (cfg.budget < 1) fail("budget", "must be >= 1");
    const bool uses_vae = cfg.algorithm.find("bovae") != std::string::npos;
    const bool retrains = cfg.algorithm == "r_bovae" || cfg.algorithm == "s_bovae";
    if (cfg.retrain_period < 1 || (retrains && cfg.retrain_period > cfg.budget)) {
        fail("retrain_period", "must lie in [1, budget]");
    }
    if (uses_vae && (cfg.latent_dim < 1 || cfg.latent_dim >= cfg.dim)) {
        fail("latent_dim", "must lie in [1, dim)");
    }
    if (cfg.hidden < 1) fail("hidden", "must be positive");
    if (!(cfg.latent_bound > 0.0)) fail("latent_bound", "must be positive");
    if (!(cfg.labelled_fraction > 0.0 && cfg.labelled_fraction <= 1.0)) {
        fail("labelled_fraction", "must lie in (0, 1]");
    }
    if (cfg.unlabelled < 1 ||
        std::ceil(cfg.labelled_fraction * cfg.unlabelled - 1e-9) < 2.0) {
        fail("unlabelled", "the initial labelled set needs at least 2 points");
    }
    if (cfg.initial_points < 2) fail("initial_points", "must be >= 2");
    if (cfg.sdr.update_every < 1) fail("sdr.update_every", "must be >= 1");
    if (!(cfg.sdr.min_size > 0.0)) fail("sdr.min_size", "must be positive");
    if (!(cfg.sdr.eta_zoom > 0.0 && cfg.sdr.eta_zoom <= 1.0)) fail("sdr.eta_zoom", "must lie in (0, 1]");
    if (!(cfg.triplet.eta_threshold > 0.0)) fail("triplet.eta", "must be positive");
    if (!(cfg.triplet.nu > 0.0)) fail("triplet.nu", "must be positive");
    if (cfg.anneal.beta_init > cfg.anneal.beta_final || !(cfg.anneal.beta_add > 0.0) ||
        cfg.anneal.step_epochs < 1) {
        fail("anneal", "need beta_init <= beta_final, beta_add > 0, step_epochs >= 1");
    }
    if (cfg.pretrain.epochs < 0 || cfg.pretrain.batch_size < 1 || cfg.retrain.epochs < 0 ||
        cfg.retrain.batch_size < 1) {
        fail("vae", "epochs must be >= 0 and batch sizes >= 1");
    }
    if (cfg.algorithm == "rembo" && !cfg.problem.starts_with("lr_")) {
        fail("algorithm", "rembo needs a low-rank problem");
    }
}

// ---------------------------------------------------------------------------
// Pre-training cache

namespace {

std::string cache_key(const RunConfig& cfg) {
    std::ostringstream k;
    k.precision(17);
    k << "vae_D" << cfg.dim << "_h" << cfg.hidden << "_d" << cfg.latent_dim << "_M"
      << cfg.unlabelled << "_s" << cfg.vae_seed << "_e" << cfg.pretrain.epochs << "_b"
      << cfg.pretrain.batch_size << "_lr" << cfg.pretrain.lr << "_a" << cfg.anneal.beta_init
      << "-" << cfg.anneal.beta_final << "-" << cfg.anneal.step_epochs << "-"
      << cfg.anneal.beta_add;
    return k.str();
}

} // namespace

PretrainCache::PretrainCache(std::filesystem::path checkpoint_dir) : dir_(std::move(checkpoint_dir)) {}

PretrainCache& PretrainCache::shared() {
    static PretrainCache cache;
    return cache;
}

std::shared_ptr<const Pretrained> PretrainCache::build(const RunConfig& cfg,
                                                       const std::string& key) const {
    auto out = std::make_shared<Pretrained>();
    out->unlabelled = testbed::sample_unlabelled(cfg.dim, cfg.unlabelled, cfg.vae_seed);
    std::optional<std::filesystem::path> file;
    if (dir_) {
        file = *dir_ / (key + ".json");
        if (std::filesystem::exists(*file)) {
            out->model = vae::VaeModel::from_json(nn::load_json(*file));
            if (out->model.ambient_dim() != cfg.dim || out->model.latent_dim() != cfg.latent_dim) {
                throw ConfigError("checkpoint " + file->string() + " does not match the run");
            }
            return out;
        }
    }
    const vae::VaeModel init(cfg.dim, cfg.hidden, cfg.latent_dim, cfg.vae_seed);
    out->model = vae::pretrain(init, out->unlabelled, cfg.anneal, cfg.pretrain, cfg.vae_seed);
    if (file) {
        std::filesystem::create_directories(*dir_);
        const std::filesystem::path tmp = file->string() + ".tmp";
        nn::save_json(tmp, out->model.to_json());
        std::filesystem::rename(tmp, *file);
    }
    return out;
}

std::shared_ptr<const Pretrained> PretrainCache::get(const RunConfig& cfg) {
    const std::string key = cache_key(cfg);
    std::promise<std::shared_ptr<const Pretrained>> promise;
    std::shared_future<std::shared_ptr<const Pretrained>> future;
    bool owner = false;
    {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            future = promise.get_future().share();
            entries_.emplace(key, future);
            owner = true;
        } else {
            future = it->second;
        }
    }
    if (owner) {
        try {
            promise.set_value(build(cfg, key));
        } catch (...) {
            {
                std::lock_guard lock(mutex_);
                entries_.erase(key);
            }
            promise.set_exception(std::current_exception());
        }
    }
    return future.get();
}

// ---------------------------------------------------------------------------
// Drivers

namespace {

Trace start_trace(const RunConfig& cfg) {
    Trace t;
    t.problem = cfg.problem;
    t.algorithm = cfg.algorithm;
    t.seed = cfg.seed;
    return t;
}

/// State shared by the VAE-based drivers: the problem, the pre-trained model
/// and the initial labelled design expressed in VAE input coordinates.
struct VaeRun {
    testbed::Problem problem;
    std::shared_ptr<const Pretrained> pre;
    Box vae_box;
    testbed::LabelledDataset labelled;

    VaeRun(const RunConfig& cfg, PretrainCache* cache)
        : problem(testbed::make_problem(cfg.problem, cfg.dim, cfg.problem_seed)),
          pre((cache ? *cache : PretrainCache::shared()).get(cfg)),
          vae_box(testbed::vae_input_box(cfg.dim)) {}

    Vector to_problem(const Vector& x_vae) const {
        return testbed::affine_scale(x_vae, vae_box, problem.domain());
    }

    /// Evaluates the 1% subsample of the unlabelled set (the initial design).
    void initial_design(const RunConfig& cfg, Trace& trace) {
        const auto idx = testbed::subsample_indices(static_cast<std::size_t>(pre->unlabelled.cols()),
                                                    cfg.labelled_fraction, cfg.seed);
        for (std::size_t i : idx) {
            Vector xv = pre->unlabelled.col(static_cast<Eigen::Index>(i));
            Vector x = to_problem(xv);
            const double f = problem.evaluate(x);
            trace.append(0, std::move(x), pre->model.encode_mean(xv), f);
            labelled.push_back(std::move(xv), f);
        }
        trace.initial_design = static_cast<int>(idx.size());
    }
};

std::vector<Vector> encode_all(const vae::VaeModel& model, const std::vector<Vector>& xs) {
    const vae::Encoding enc = model.encode(gp::to_matrix(xs));
    std::vector<Vector> out;
    out.reserve(xs.size());
    for (Eigen::Index j = 0; j < enc.mu.cols(); ++j) {
        out.emplace_back(enc.mu.col(j));
    }
    return out;
}

sdr::RoiState init_latent_roi(const Box& outer, const std::vector<Vector>& zs,
                              const std::vector<double>& values) {
    return sdr::init_roi(outer, outer.clip(zs[detail::argmin(values)]));
}

template <typename Fn>
void finish(Trace& trace, std::chrono::steady_clock::time_point t0, Fn&& body) {
    try {
        body();
    } catch (const NumericalError& e) {
        trace.error = e.what();
    }
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

Trace run_bo_sdr(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const testbed::Problem problem = testbed::make_problem(cfg.problem, cfg.dim, cfg.problem_seed);
    const Box& domain = problem.domain();
    Trace trace = start_trace(cfg);

    std::vector<Vector> xs;
    std::vector<double> fs;
    Rng init_rng = make_rng(cfg.seed, 0x1d);
    for (int i = 0; i < cfg.initial_points; ++i) {
        Vector x = domain.sample(init_rng);
        const double f = problem.evaluate(x);
        trace.append(0, x, std::nullopt, f);
        xs.push_back(std::move(x));
        fs.push_back(f);
    }
    trace.initial_design = cfg.initial_points;

    finish(trace, t0, [&] {
        sdr::RoiState roi = sdr::init_roi(domain, xs[detail::argmin(fs)]);
        trace.roi_snapshots.push_back(roi.roi);
        detail::Surrogate surrogate;
        detail::SeedStream seeds(cfg.seed, 0xb0);
        for (int k = 0; k < cfg.budget; ++k) {
            const auto proposal = surrogate.propose(xs, fs, roi.roi, seeds.next());
            trace.acquisition_fallbacks += proposal.fallback ? 1 : 0;
            const double f = problem.evaluate(proposal.point);
            trace.append(k + 1, proposal.point, std::nullopt, f);
            xs.push_back(proposal.point);
            fs.push_back(f);
            if (sdr::update_due(roi, k, cfg.sdr)) {
                roi = sdr::update_roi(roi, xs[detail::argmin(fs)], cfg.sdr);
            }
            trace.roi_snapshots.push_back(roi.roi);
        }
    });
    return trace;
}

Trace run_vanilla_bovae(const RunConfig& cfg, bool with_sdr, PretrainCache* cache) {
    const auto t0 = std::chrono::steady_clock::now();
    Trace trace = start_trace(cfg);
    VaeRun run(cfg, cache);
    run.initial_design(cfg, trace);
    const vae::VaeModel& model = run.pre->model;

    finish(trace, t0, [&] {
        const Box outer = cfg.latent_box();
        std::vector<Vector> zs = encode_all(model, run.labelled.points);
        std::vector<double> fs = run.labelled.values;
        sdr::RoiState roi = init_latent_roi(outer, zs, fs);
        trace.roi_snapshots.push_back(with_sdr ? roi.roi : outer);
        detail::Surrogate surrogate;
        detail::SeedStream seeds(cfg.seed, 0xb1);
        for (int k = 0; k < cfg.budget; ++k) {
            const auto proposal = surrogate.propose(zs, fs, with_sdr ? roi.roi : outer, seeds.next());
            trace.acquisition_fallbacks += proposal.fallback ? 1 : 0;
            Vector x = run.to_problem(model.decode(proposal.point));
            const double f = run.problem.evaluate(x);
            trace.append(k + 1, std::move(x), proposal.point, f);
            zs.push_back(proposal.point);
            fs.push_back(f);
            if (with_sdr && sdr::update_due(roi, k, cfg.sdr)) {
                roi = sdr::update_roi(roi, outer.clip(zs[detail::argmin(fs)]), cfg.sdr);
            }
            trace.roi_snapshots.push_back(with_sdr ? roi.roi : outer);
        }
    });
    return trace;
}

Trace run_retraining_bovae(const RunConfig& cfg, RetrainVariant variant, PretrainCache* cache) {
    const auto t0 = std::chrono::steady_clock::now();
    Trace trace = start_trace(cfg);
    VaeRun run(cfg, cache);
    run.initial_design(cfg, trace);
    vae::VaeModel model = run.pre->model;

    finish(trace, t0, [&] {
        const Box outer = cfg.latent_box();
        detail::SeedStream retrain_seeds(cfg.seed, 0xb2);
        detail::SeedStream step_seeds(cfg.seed, 0xb3);
        detail::Surrogate surrogate;
        int evaluations = 0;
        for (int cycle = 0; cycle < cfg.cycles() && evaluations < cfg.budget; ++cycle) {
            model = vae::retrain(model, run.labelled, variant.use_dml, cfg.triplet, cfg.retrain,
                                 retrain_seeds.next());
            ++trace.retrain_events;
            // The latent dataset is rebuilt from scratch with the new encoder.
            std::vector<Vector> zs = encode_all(model, run.labelled.points);
            std::vector<double> fs = run.labelled.values;
            sdr::RoiState roi = init_latent_roi(outer, zs, fs);
            trace.roi_snapshots.push_back(variant.with_sdr ? roi.roi : outer);
            for (int k = 0; k < cfg.retrain_period && evaluations < cfg.budget; ++k) {
                const Box& region = variant.with_sdr ? roi.roi : outer;
                const auto proposal = surrogate.propose(zs, fs, region, step_seeds.next());
                trace.acquisition_fallbacks += proposal.fallback ? 1 : 0;
                Vector xv = model.decode(proposal.point);
                Vector x = run.to_problem(xv);
                const double f = run.problem.evaluate(x);
                ++evaluations;
                trace.append(evaluations, std::move(x), proposal.point, f);
                run.labelled.push_back(std::move(xv), f);
                zs.push_back(proposal.point);
                fs.push_back(f);
                if (variant.with_sdr && sdr::update_due(roi, k, cfg.sdr)) {
                    roi = sdr::update_roi(roi, outer.clip(zs[detail::argmin(fs)]), cfg.sdr);
                }
                trace.roi_snapshots.push_back(variant.with_sdr ? roi.roi : outer);
            }
        }
    });
    return trace;
}

Trace run(const RunConfig& cfg, PretrainCache* cache) {
    validate(cfg);
    const std::string& a = cfg.algorithm;
    if (a == "bo_sdr") return run_bo_sdr(cfg);
    if (a == "v_bovae") return run_vanilla_bovae(cfg, true, cache);
    if (a == "v_bovae_nosdr") return run_vanilla_bovae(cfg, false, cache);
    if (a == "r_bovae") return run_retrain_bovae(cfg, cache);
    if (a == "s_bovae") return run_dml_bovae(cfg, cache);
    const testbed::Problem problem = testbed::make_problem(cfg.problem, cfg.dim, cfg.problem_seed);
    // REMBO's budget counts its initial design; give it the same B steps as the others.
    Trace t = rembo::run_rembo(problem, cfg.budget + rembo::kInitialDesign, cfg.seed);
    t.algorithm = a;
    return t;
}

} // namespace latentbo::algorithms
