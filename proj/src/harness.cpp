#include <latentbo/harness.hpp>

#include "svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace latentbo::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot write " + tmp.string());
        }
        out << text;
        if (!out) {
            throw InputError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Source locations of JSON values, keyed by JSON pointer.

/// Forward iterator over the text that remembers the furthest position read.
class TrackingIterator {
public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    TrackingIterator(const char* p, std::size_t* furthest, const char* base)
        : p_(p), furthest_(furthest), base_(base) {}

    reference operator*() const {
        *furthest_ = std::max(*furthest_, static_cast<std::size_t>(p_ - base_));
        return *p_;
    }
    TrackingIterator& operator++() {
        ++p_;
        return *this;
    }
    TrackingIterator operator++(int) {
        TrackingIterator t = *this;
        ++p_;
        return t;
    }
    bool operator==(const TrackingIterator& o) const { return p_ == o.p_; }
    bool operator!=(const TrackingIterator& o) const { return p_ != o.p_; }

private:
    const char* p_;
    std::size_t* furthest_;
    const char* base_;
};

class LineLocator : public nlohmann::json_sax<json> {
public:
    explicit LineLocator(const std::string& text) : text_(text) {
        TrackingIterator first(text.data(), &furthest_, text.data());
        TrackingIterator last(text.data() + text.size(), &furthest_, text.data());
        json::sax_parse(first, last, this);
    }

    std::optional<int> line(const std::string& pointer) const {
        auto it = lines_.find(pointer);
        if (it == lines_.end()) return std::nullopt;
        return it->second;
    }

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override {
        record();
        frames_.push_back({false, 0, {}});
        return true;
    }
    bool key(string_t& k) override {
        frames_.back().key = k;
        record();
        return true;
    }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override {
        record();
        frames_.push_back({true, 0, {}});
        return true;
    }
    bool end_array() override { return close(); }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
        return false;
    }

private:
    struct Frame {
        bool array;
        std::size_t index;
        std::string key;
    };

    std::string pointer() const {
        std::string p;
        for (const Frame& f : frames_) {
            p += '/';
            p += f.array ? std::to_string(f.index) : f.key;
        }
        return p;
    }

    int current_line() const {
        std::size_t pos = std::min(furthest_, text_.size());
        while (pos > 0 && std::isspace(static_cast<unsigned char>(text_[pos - 1]))) --pos;
        // `pos` now ends the last token; its line is one past the newlines before it.
        const std::size_t end = pos == 0 ? 0 : pos - 1;
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(end), '\n'));
    }

    void record() { lines_.emplace(pointer(), current_line()); }

    bool value() {
        record();
        advance();
        return true;
    }

    bool close() {
        frames_.pop_back();
        advance();
        return true;
    }

    void advance() {
        if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    }

    const std::string& text_;
    std::size_t furthest_ = 0;
    std::vector<Frame> frames_;
    std::map<std::string, int> lines_;
};

std::string display_path(const std::string& pointer) {
    std::string out;
    std::size_t i = 0;
    while (i < pointer.size()) {
        const std::size_t next = pointer.find('/', i + 1);
        const std::string part = pointer.substr(i + 1, next == std::string::npos ? std::string::npos : next - i - 1);
        const bool index = !part.empty() && std::all_of(part.begin(), part.end(), ::isdigit);
        if (index) {
            out += "[" + part + "]";
        } else {
            if (!out.empty()) out += '.';
            out += part;
        }
        if (next == std::string::npos) break;
        i = next;
    }
    return out.empty() ? "<root>" : out;
}

class ConfigReader {
public:
    ConfigReader(const std::string& text, std::string origin)
        : origin_(std::move(origin)), locator_(text) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& why) const {
        std::string p = pointer;
        std::optional<int> line = locator_.line(p);
        while (!line && !p.empty()) {
            p = p.substr(0, p.rfind('/'));
            line = locator_.line(p);
        }
        throw ConfigError(origin_ + ":" + std::to_string(line.value_or(1)) + ": " +
                          display_path(pointer) + ": " + why);
    }

    const json& object(const json& j, const std::string& ptr) const {
        if (!j.is_object()) fail(ptr, "expected an object");
        return j;
    }
    std::string string(const json& j, const std::string& ptr) const {
        if (!j.is_string()) fail(ptr, "expected a string");
        return j.get<std::string>();
    }
    bool boolean(const json& j, const std::string& ptr) const {
        if (!j.is_boolean()) fail(ptr, "expected true or false");
        return j.get<bool>();
    }
    double number(const json& j, const std::string& ptr) const {
        if (!j.is_number()) fail(ptr, "expected a number");
        return j.get<double>();
    }
    int integer(const json& j, const std::string& ptr) const {
        if (!j.is_number_integer()) fail(ptr, "expected an integer");
        const auto v = j.get<std::int64_t>();
        if (v < INT32_MIN || v > INT32_MAX) fail(ptr, "integer out of range");
        return static_cast<int>(v);
    }
    std::uint64_t unsigned_integer(const json& j, const std::string& ptr) const {
        if (!j.is_number_unsigned()) fail(ptr, "expected a non-negative integer");
        return j.get<std::uint64_t>();
    }

    /// Applies run fields from `obj` onto `job`. `names` collects problem and
    /// algorithm lists for cross products.
    void apply_run_fields(const json& obj, const std::string& ptr, Job& job,
                          std::vector<std::string>* problems, std::vector<std::string>* algorithms) const {
        object(obj, ptr);
        algorithms::RunConfig& c = job.config;
        for (const auto& [key, v] : obj.items()) {
            const std::string p = ptr + "/" + key;
            if (key == "problem" || key == "problems") {
                std::vector<std::string> names;
                if (key == "problem") {
                    names.push_back(string(v, p));
                } else {
                    if (!v.is_array() || v.empty()) fail(p, "expected a non-empty array of names");
                    for (std::size_t i = 0; i < v.size(); ++i) names.push_back(string(v[i], p + "/" + std::to_string(i)));
                }
                for (std::size_t i = 0; i < names.size(); ++i) {
                    if (!testbed::is_known_problem(names[i])) {
                        fail(key == "problem" ? p : p + "/" + std::to_string(i), "unknown problem '" + names[i] + "'");
                    }
                }
                *problems = names;
            } else if (key == "algorithm" || key == "algorithms") {
                std::vector<std::string> names;
                if (key == "algorithm") {
                    names.push_back(string(v, p));
                } else {
                    if (!v.is_array() || v.empty()) fail(p, "expected a non-empty array of names");
                    for (std::size_t i = 0; i < v.size(); ++i) names.push_back(string(v[i], p + "/" + std::to_string(i)));
                }
                for (std::size_t i = 0; i < names.size(); ++i) {
                    if (!algorithms::is_known_algorithm(names[i])) {
                        fail(key == "algorithm" ? p : p + "/" + std::to_string(i), "unknown algorithm '" + names[i] + "'");
                    }
                }
                *algorithms = names;
            } else if (key == "dim") {
                c.dim = integer(v, p);
            } else if (key == "budget") {
                c.budget = integer(v, p);
            } else if (key == "retrain_period") {
                c.retrain_period = integer(v, p);
            } else if (key == "latent_dim") {
                c.latent_dim = integer(v, p);
            } else if (key == "hidden") {
                c.hidden = integer(v, p);
            } else if (key == "problem_seed") {
                c.problem_seed = unsigned_integer(v, p);
                job.fixed_problem_seed = true;
            } else if (key == "vae_seed") {
                c.vae_seed = unsigned_integer(v, p);
            } else if (key == "latent_bound") {
                c.latent_bound = number(v, p);
            } else if (key == "unlabelled") {
                c.unlabelled = integer(v, p);
            } else if (key == "labelled_fraction") {
                c.labelled_fraction = number(v, p);
            } else if (key == "initial_points") {
                c.initial_points = integer(v, p);
            } else if (key == "sdr") {
                object(v, p);
                for (const auto& [k, x] : v.items()) {
                    const std::string q = p + "/" + k;
                    if (k == "gamma_osc") c.sdr.gamma_osc = number(x, q);
                    else if (k == "gamma_pan") c.sdr.gamma_pan = number(x, q);
                    else if (k == "eta_zoom") c.sdr.eta_zoom = number(x, q);
                    else if (k == "min_size") c.sdr.min_size = number(x, q);
                    else if (k == "update_every") c.sdr.update_every = integer(x, q);
                    else fail(q, "unknown key '" + k + "'");
                }
            } else if (key == "triplet") {
                object(v, p);
                for (const auto& [k, x] : v.items()) {
                    const std::string q = p + "/" + k;
                    if (k == "eta") c.triplet.eta_threshold = number(x, q);
                    else if (k == "nu") c.triplet.nu = number(x, q);
                    else if (k == "norm_p") c.triplet.norm_p = number(x, q);
                    else fail(q, "unknown key '" + k + "'");
                }
            } else if (key == "anneal") {
                object(v, p);
                for (const auto& [k, x] : v.items()) {
                    const std::string q = p + "/" + k;
                    if (k == "beta_init") c.anneal.beta_init = number(x, q);
                    else if (k == "beta_final") c.anneal.beta_final = number(x, q);
                    else if (k == "step_epochs") c.anneal.step_epochs = integer(x, q);
                    else if (k == "beta_add") c.anneal.beta_add = number(x, q);
                    else fail(q, "unknown key '" + k + "'");
                }
            } else if (key == "pretrain" || key == "retrain") {
                object(v, p);
                vae::TrainOptions& t = key == "pretrain" ? c.pretrain : c.retrain;
                for (const auto& [k, x] : v.items()) {
                    const std::string q = p + "/" + k;
                    if (k == "epochs") t.epochs = integer(x, q);
                    else if (k == "batch_size") t.batch_size = integer(x, q);
                    else if (k == "lr") t.lr = number(x, q);
                    else fail(q, "unknown key '" + k + "'");
                }
            } else {
                fail(p, "unknown key '" + key + "'");
            }
        }
    }

    /// Runs algorithms::validate and points a failure at the responsible key.
    void validate(const Job& job, const std::vector<std::string>& candidates) const {
        try {
            algorithms::validate(job.config);
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            const std::size_t colon = msg.find(':');
            std::string field = colon == std::string::npos ? "" : msg.substr(0, colon);
            std::replace(field.begin(), field.end(), '.', '/');
            const std::string why = colon == std::string::npos ? msg : msg.substr(colon + 2);
            for (const std::string& base : candidates) {
                if (!field.empty() && locator_.line(base + "/" + field)) fail(base + "/" + field, why);
            }
            fail(candidates.front() + (field.empty() ? "" : "/" + field), why);
        }
    }

private:
    std::string origin_;
    LineLocator locator_;
};

json run_config_json(const algorithms::RunConfig& c) {
    return json{
        {"problem", c.problem},
        {"algorithm", c.algorithm},
        {"dim", c.dim},
        {"budget", c.budget},
        {"retrain_period", c.retrain_period},
        {"latent_dim", c.latent_dim},
        {"hidden", c.hidden},
        {"seed", c.seed},
        {"problem_seed", c.problem_seed},
        {"vae_seed", c.vae_seed},
        {"latent_bound", c.latent_bound},
        {"unlabelled", c.unlabelled},
        {"labelled_fraction", c.labelled_fraction},
        {"initial_points", c.initial_points},
        {"sdr",
         {{"gamma_osc", c.sdr.gamma_osc},
          {"gamma_pan", c.sdr.gamma_pan},
          {"eta_zoom", c.sdr.eta_zoom},
          {"min_size", c.sdr.min_size},
          {"update_every", c.sdr.update_every}}},
        {"triplet", {{"eta", c.triplet.eta_threshold}, {"nu", c.triplet.nu}, {"norm_p", c.triplet.norm_p}}},
        {"anneal",
         {{"beta_init", c.anneal.beta_init},
          {"beta_final", c.anneal.beta_final},
          {"step_epochs", c.anneal.step_epochs},
          {"beta_add", c.anneal.beta_add}}},
        {"pretrain", {{"epochs", c.pretrain.epochs}, {"batch_size", c.pretrain.batch_size}, {"lr", c.pretrain.lr}}},
        {"retrain", {{"epochs", c.retrain.epochs}, {"batch_size", c.retrain.batch_size}, {"lr", c.retrain.lr}}},
    };
}

std::vector<fs::path> csv_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string curves_csv(double tau, const std::vector<double>& alphas, const eval::Curves& curves) {
    std::ostringstream out;
    out << "# tau=" << fmt17(tau) << "\n" << "alpha";
    for (const auto& [s, v] : curves) out << ',' << s;
    out << '\n';
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        out << fmt17(alphas[i]);
        for (const auto& [s, v] : curves) out << ',' << fmt17(v[i]);
        out << '\n';
    }
    return out.str();
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

std::string Job::file_name() const {
    return config.problem + "_" + config.algorithm + "_" + std::to_string(config.seed) + ".csv";
}

std::vector<Job> ExperimentConfig::jobs(std::uint64_t seed_offset) const {
    std::vector<Job> out;
    for (const Job& run : runs) {
        for (int r = 0; r < repeats; ++r) {
            Job job = run;
            job.config.seed = seed_base + seed_offset + static_cast<std::uint64_t>(r);
            if (!job.fixed_problem_seed) job.config.problem_seed = job.config.seed;
            out.push_back(std::move(job));
        }
    }
    return out;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
        throw ConfigError(origin + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    const ConfigReader reader(text, origin);
    reader.object(root, "");

    ExperimentConfig cfg;
    Job defaults;
    std::vector<std::string> default_problems;
    std::vector<std::string> default_algorithms;
    const json* runs = nullptr;
    for (const auto& [key, v] : root.items()) {
        const std::string p = "/" + key;
        if (key == "name") {
            cfg.name = reader.string(v, p);
        } else if (key == "repeats") {
            cfg.repeats = reader.integer(v, p);
            if (cfg.repeats < 1) reader.fail(p, "must be >= 1");
        } else if (key == "seed_base") {
            cfg.seed_base = reader.unsigned_integer(v, p);
        } else if (key == "output_dir") {
            cfg.output_dir = reader.string(v, p);
        } else if (key == "checkpoint_dir") {
            cfg.checkpoint_dir = reader.string(v, p);
        } else if (key == "plots") {
            reader.object(v, p);
            for (const auto& [k, x] : v.items()) {
                const std::string q = p + "/" + k;
                if (k == "convergence") cfg.plot_convergence = reader.boolean(x, q);
                else if (k == "profile") cfg.plot_profile = reader.boolean(x, q);
                else if (k == "tau") {
                    cfg.plot_tau = reader.number(x, q);
                    if (!(cfg.plot_tau > 0.0 && cfg.plot_tau < 1.0)) reader.fail(q, "must lie in (0, 1)");
                } else reader.fail(q, "unknown key '" + k + "'");
            }
        } else if (key == "defaults") {
            reader.apply_run_fields(v, p, defaults, &default_problems, &default_algorithms);
        } else if (key == "runs") {
            if (!v.is_array() || v.empty()) reader.fail(p, "expected a non-empty array");
            runs = &v;
        } else {
            reader.fail(p, "unknown key '" + key + "'");
        }
    }
    if (!runs) reader.fail("/runs", "missing required key");

    std::set<std::string> seen;
    for (std::size_t i = 0; i < runs->size(); ++i) {
        const std::string p = "/runs/" + std::to_string(i);
        Job job = defaults;
        std::vector<std::string> problems = default_problems;
        std::vector<std::string> algos = default_algorithms;
        reader.apply_run_fields((*runs)[i], p, job, &problems, &algos);
        if (problems.empty()) reader.fail(p + "/problem", "missing required key");
        if (algos.empty()) reader.fail(p + "/algorithm", "missing required key");
        for (const auto& prob : problems) {
            for (const auto& algo : algos) {
                Job expanded = job;
                expanded.config.problem = prob;
                expanded.config.algorithm = algo;
                reader.validate(expanded, {p, "/defaults"});
                const std::string id = prob + "/" + algo;
                if (!seen.insert(id).second) reader.fail(p, "duplicate run " + id);
                cfg.runs.push_back(std::move(expanded));
            }
        }
    }
    cfg.source_json = root.dump();
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.string());
}

std::uint64_t seed_offset_from_env() {
    const char* raw = std::getenv("LATENTBO_SEED_OFFSET");
    if (!raw || !*raw) return 0;
    const std::string s(raw);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw ConfigError("LATENTBO_SEED_OFFSET: expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

// ---------------------------------------------------------------------------
// Running

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options,
                          std::ostream& log) {
    fs::create_directories(options.out_dir);
    const std::vector<Job> jobs = config.jobs(options.seed_offset);
    const fs::path manifest_path = options.out_dir / "manifest.json";

    std::map<std::string, json> entries;
    if (options.resume && fs::exists(manifest_path)) {
        try {
            const json old = json::parse(read_file(manifest_path));
            for (const json& e : old.at("jobs")) entries[e.at("file").get<std::string>()] = e;
        } catch (const std::exception& e) {
            log << "warning: ignoring unreadable manifest: " << e.what() << '\n';
        }
    }

    std::optional<algorithms::PretrainCache> cache_storage;
    if (config.checkpoint_dir) cache_storage.emplace(*config.checkpoint_dir);
    else cache_storage.emplace();
    algorithms::PretrainCache& cache = *cache_storage;

    std::mutex mutex;
    RunSummary summary;
    std::atomic<std::size_t> next{0};
    std::size_t finished = 0;

    auto write_manifest = [&] {
        json list = json::array();
        for (const auto& [file, e] : entries) list.push_back(e);
        json m{{"name", config.name},
               {"version", kVersion},
               {"seed_offset", options.seed_offset},
               {"config", json::parse(config.source_json)},
               {"jobs", list}};
        write_file_atomic(manifest_path, m.dump(2) + "\n");
    };

    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            const std::string file = job.file_name();
            const fs::path path = options.out_dir / file;
            json entry{{"file", file},
                       {"problem", job.config.problem},
                       {"algorithm", job.config.algorithm},
                       {"seed", job.config.seed},
                       {"run_config", run_config_json(job.config)}};
            std::string status;
            if (options.resume && fs::exists(path)) {
                std::lock_guard lock(mutex);
                ++summary.skipped;
                ++finished;
                if (!entries.count(file)) {
                    entry["status"] = "ok";
                    entries[file] = entry;
                    write_manifest();
                }
                log << "[" << finished << "/" << jobs.size() << "] " << file << " skipped\n";
                continue;
            }
            try {
                const Trace t = algorithms::run(job.config, &cache);
                write_trace_csv(t, path);
                status = t.error ? "partial" : "ok";
                entry["status"] = status;
                if (t.error) entry["error"] = *t.error;
                entry["rows"] = t.size();
                entry["best_f"] = t.rows.empty() ? json(nullptr) : json(t.best());
                entry["retrain_events"] = t.retrain_events;
                entry["acquisition_fallbacks"] = t.acquisition_fallbacks;
                entry["wall_seconds"] = t.wall_seconds;
            } catch (const std::exception& e) {
                status = "failed";
                entry["status"] = status;
                entry["error"] = e.what();
            }
            std::lock_guard lock(mutex);
            if (status == "failed") ++summary.failed;
            else ++summary.completed;
            ++finished;
            entries[file] = entry;
            write_manifest();
            log << "[" << finished << "/" << jobs.size() << "] " << file << " " << status;
            if (entry.contains("best_f") && entry["best_f"].is_number()) {
                log << " best=" << entry["best_f"].get<double>();
            }
            if (entry.contains("error")) log << " (" << entry["error"].get<std::string>() << ")";
            log << '\n';
        }
    };

    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (jobs.empty()) write_manifest();
    return summary;
}

// ---------------------------------------------------------------------------
// Profiles

std::optional<TraceName> parse_trace_name(const std::string& file_name) {
    if (file_name.size() < 4 || file_name.substr(file_name.size() - 4) != ".csv") return std::nullopt;
    const std::string stem = file_name.substr(0, file_name.size() - 4);
    const std::size_t us = stem.rfind('_');
    if (us == std::string::npos || us + 1 >= stem.size()) return std::nullopt;
    TraceName out;
    const std::string seed = stem.substr(us + 1);
    const auto [end, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), out.seed);
    if (ec != std::errc() || end != seed.data() + seed.size()) return std::nullopt;
    const std::string head = stem.substr(0, us);
    std::vector<std::string> algos = algorithms::algorithm_names();
    std::sort(algos.begin(), algos.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const std::string& a : algos) {
        const std::string suffix = "_" + a;
        if (head.size() > suffix.size() && head.compare(head.size() - suffix.size(), suffix.size(), suffix) == 0) {
            out.algorithm = a;
            out.problem = head.substr(0, head.size() - suffix.size());
            return out;
        }
    }
    return std::nullopt;
}

ProfileData profile_directory(const fs::path& dir, double tau, std::ostream& warn) {
    if (!fs::is_directory(dir)) {
        throw InputError(dir.string() + " is not a directory");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InputError("tau must lie in (0, 1)");
    }
    ProfileData out;
    out.tau = tau;
    std::set<std::string> problems;
    for (const fs::path& file : csv_files(dir)) {
        const std::string name = file.filename().string();
        const auto parsed = parse_trace_name(name);
        if (!parsed) {
            warn << "warning: skipping " << name << ": not a trace file name\n";
            continue;
        }
        if (!testbed::is_known_problem(parsed->problem)) {
            warn << "warning: skipping " << name << ": unknown problem '" << parsed->problem << "'\n";
            continue;
        }
        Trace trace;
        try {
            trace = read_trace_csv(file);
        } catch (const std::exception& e) {
            warn << "warning: skipping " << name << ": " << e.what() << '\n';
            continue;
        }
        if (trace.rows.empty()) {
            warn << "warning: skipping " << name << ": no rows\n";
            continue;
        }
        eval::SolveRecord r;
        r.problem = parsed->problem + "#" + std::to_string(parsed->seed);
        r.solver = parsed->algorithm;
        r.dim = static_cast<int>(trace.rows.front().x.size());
        r.budget = static_cast<int>(trace.rows.size());
        r.n_evals = eval::n_to_solve(trace, testbed::problem_f_star(parsed->problem, r.dim), tau);
        problems.insert(r.problem);
        out.records.push_back(std::move(r));
    }
    if (out.records.empty()) {
        throw InputError("no usable traces in " + dir.string());
    }
    out.problem_count = static_cast<int>(problems.size());

    // Breakpoints of both step functions, so the curves are exact.
    std::map<std::string, int> best;
    for (const auto& r : out.records) {
        if (r.n_evals) {
            auto it = best.find(r.problem);
            if (it == best.end() || *r.n_evals < it->second) best[r.problem] = *r.n_evals;
        }
    }
    std::vector<double> perf{1.0};
    std::vector<double> data{0.0};
    double n_g = 0.0;
    for (const auto& r : out.records) {
        n_g = std::max(n_g, static_cast<double>(r.budget) / (r.dim + 1));
        if (r.n_evals) {
            perf.push_back(static_cast<double>(*r.n_evals) / best.at(r.problem));
            data.push_back(*r.n_evals / static_cast<double>(r.dim + 1));
        }
    }
    data.push_back(n_g);
    out.performance_alphas = sorted_unique(perf);
    out.data_alphas = sorted_unique(data);
    out.performance = eval::performance_profile(out.records, out.performance_alphas);
    out.data = eval::data_profile(out.records, out.data_alphas);
    out.solved = eval::solve_fractions(out.records);
    return out;
}

void write_profile(const ProfileData& data, const fs::path& out) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    const fs::path stem = out.parent_path() / out.stem();
    write_file_atomic(stem.string() + "_performance.csv",
                      curves_csv(data.tau, data.performance_alphas, data.performance));
    write_file_atomic(stem.string() + "_data.csv", curves_csv(data.tau, data.data_alphas, data.data));

    std::ostringstream s;
    s << "# tau=" << fmt17(data.tau) << "\n"
      << "solver,solved,problems,percent_solved\n";
    for (const auto& [solver, fraction] : data.solved) {
        const int solved = static_cast<int>(std::lround(fraction * data.problem_count));
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.1f", 100.0 * fraction);
        s << solver << ',' << solved << ',' << data.problem_count << ',' << pct << '\n';
    }
    write_file_atomic(out, s.str());
}

// ---------------------------------------------------------------------------
// Plots

std::vector<ConvergenceSeries> convergence_series(const std::vector<TraceName>& names,
                                                  const std::vector<Trace>& traces) {
    if (names.size() != traces.size()) {
        throw InputError("convergence_series: names and traces differ in length");
    }
    std::map<std::pair<std::string, std::string>, std::vector<const Trace*>> groups;
    for (std::size_t i = 0; i < names.size(); ++i) {
        groups[{names[i].problem, names[i].algorithm}].push_back(&traces[i]);
    }
    std::vector<ConvergenceSeries> out;
    for (const auto& [key, group] : groups) {
        ConvergenceSeries s;
        s.problem = key.first;
        s.algorithm = key.second;
        s.runs = static_cast<int>(group.size());
        std::size_t length = 0;
        for (const Trace* t : group) length = std::max(length, t->rows.size());
        for (std::size_t k = 0; k < length; ++k) {
            double sum = 0.0, sq = 0.0;
            int n = 0;
            for (const Trace* t : group) {
                if (k < t->rows.size()) {
                    sum += t->rows[k].best_f;
                    ++n;
                }
            }
            const double mean = sum / n;
            for (const Trace* t : group) {
                if (k < t->rows.size()) sq += (t->rows[k].best_f - mean) * (t->rows[k].best_f - mean);
            }
            s.mean.push_back(mean);
            s.std.push_back(std::sqrt(sq / n));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string convergence_svg(const std::vector<ConvergenceSeries>& series) {
    std::map<std::string, svg::Panel> panels;
    for (const ConvergenceSeries& s : series) {
        svg::Panel& panel = panels[s.problem];
        panel.title = s.problem;
        panel.x_label = "evaluations";
        panel.y_label = "best f";
        svg::Series line;
        line.label = s.algorithm + " (" + std::to_string(s.runs) + ")";
        for (std::size_t k = 0; k < s.mean.size(); ++k) {
            line.x.push_back(static_cast<double>(k + 1));
            line.y.push_back(s.mean[k]);
            line.lo.push_back(s.mean[k] - s.std[k]);
            line.hi.push_back(s.mean[k] + s.std[k]);
        }
        panel.series.push_back(std::move(line));
    }
    std::vector<svg::Panel> list;
    for (auto& [name, p] : panels) list.push_back(std::move(p));
    return svg::render(list);
}

std::string profile_svg(const std::string& csv, const std::string& title) {
    std::istringstream in(csv);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!l.empty() && l.back() == ',') out.emplace_back();
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line);
        if (header.empty()) {
            if (cells.size() < 2 || cells[0] != "alpha") {
                throw InputError("line " + std::to_string(line_no) + ": expected header alpha,<solver>...");
            }
            header = cells;
            continue;
        }
        if (cells.size() != header.size()) {
            throw InputError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields");
        }
        std::vector<double> row;
        for (const std::string& c : cells) {
            double v = 0.0;
            const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (c.empty() || ec != std::errc() || end != c.data() + c.size()) {
                throw InputError("line " + std::to_string(line_no) + ": bad number '" + c + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (header.empty() || rows.empty()) {
        throw InputError("profile CSV has no data rows");
    }
    svg::Panel panel;
    panel.title = title;
    panel.x_label = "alpha";
    panel.y_label = "fraction of problems";
    for (std::size_t c = 1; c < header.size(); ++c) {
        svg::Series s;
        s.label = header[c];
        s.step = true;
        for (const auto& r : rows) {
            s.x.push_back(r[0]);
            s.y.push_back(r[c]);
        }
        panel.series.push_back(std::move(s));
    }
    return svg::render({panel});
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

void write_plots(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    const fs::path plots = out_dir / "plots";
    if (config.plot_convergence) {
        std::vector<TraceName> names;
        std::vector<Trace> traces;
        for (const fs::path& f : csv_files(out_dir)) {
            const auto n = parse_trace_name(f.filename().string());
            if (!n) continue;
            names.push_back(*n);
            traces.push_back(read_trace_csv(f));
        }
        if (!traces.empty()) {
            fs::create_directories(plots);
            write_file_atomic(plots / "convergence.svg", convergence_svg(convergence_series(names, traces)));
            log << "wrote " << (plots / "convergence.svg").string() << '\n';
        }
    }
    if (config.plot_profile) {
        const ProfileData data = profile_directory(out_dir, config.plot_tau, log);
        fs::create_directories(plots);
        write_profile(data, plots / "summary.csv");
        write_file_atomic(plots / "performance_profile.svg",
                          profile_svg(read_file(plots / "summary_performance.csv"), "performance profile"));
        write_file_atomic(plots / "data_profile.svg",
                          profile_svg(read_file(plots / "summary_data.csv"), "data profile"));
        log << "wrote profiles under " << plots.string() << '\n';
    }
}

} // namespace

int cmd_run(const fs::path& config_path, const std::optional<fs::path>& out, bool resume,
            int workers, std::ostream& out_log, std::ostream& err) {
    ExperimentConfig config;
    RunOptions options;
    try {
        config = load_config(config_path);
        options.seed_offset = seed_offset_from_env();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    if (out) {
        options.out_dir = *out;
    } else if (config.output_dir) {
        options.out_dir = *config.output_dir;
    } else {
        err << "error: no output directory (pass --out or set output_dir)\n";
        return 2;
    }
    if (workers < 1) {
        err << "error: --workers must be >= 1\n";
        return 2;
    }
    options.resume = resume;
    options.workers = workers;
    try {
        const RunSummary s = run_experiment(config, options, out_log);
        out_log << s.completed << " completed, " << s.skipped << " skipped, " << s.failed << " failed\n";
        write_plots(config, options.out_dir, out_log);
        return s.failed > 0 ? 1 : 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_profile(const fs::path& traces, double tau, const fs::path& out, std::ostream& out_log,
                std::ostream& err) {
    try {
        const ProfileData data = profile_directory(traces, tau, err);
        write_profile(data, out);
        out_log << "# tau=" << fmt17(tau) << '\n';
        for (const auto& [solver, fraction] : data.solved) {
            out_log << solver << ": " << 100.0 * fraction << "% of " << data.problem_count << " problems\n";
        }
        return 0;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_plot(const fs::path& in, const std::string& kind, const fs::path& out, std::ostream& err) {
    try {
        std::string svg_text;
        if (kind == "convergence") {
            std::vector<fs::path> files;
            if (fs::is_directory(in)) files = csv_files(in);
            else files.push_back(in);
            std::vector<TraceName> names;
            std::vector<Trace> traces;
            for (const fs::path& f : files) {
                auto n = parse_trace_name(f.filename().string());
                if (!n) {
                    if (fs::is_directory(in)) continue;
                    n = TraceName{f.stem().string(), f.stem().string(), 0};
                }
                try {
                    traces.push_back(read_trace_csv(f));
                } catch (const std::exception& e) {
                    throw InputError(f.string() + ": " + e.what());
                }
                names.push_back(*n);
            }
            if (traces.empty()) throw InputError("no traces in " + in.string());
            svg_text = convergence_svg(convergence_series(names, traces));
        } else if (kind == "profile") {
            svg_text = profile_svg(read_file(in), in.stem().string());
        } else {
            err << "error: --kind must be convergence or profile\n";
            return 2;
        }
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        write_file_atomic(out, svg_text);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace latentbo::harness
