#pragma once

#include <latentbo/common.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace latentbo {

struct TraceRow {
    int iter = 0; // 0 for the initial design, then 1..B
    Vector x;     // ambient point, in the problem domain
    std::optional<Vector> z;
    double f = 0.0;
    double best_f = 0.0;
};

/// Record of one optimisation run. Only `rows` is persisted to CSV; the rest
/// is run metadata kept in memory (and echoed into the manifest).
struct Trace {
    std::vector<TraceRow> rows;

    std::string problem;
    std::string algorithm;
    std::uint64_t seed = 0;
    int initial_design = 0;
    int retrain_events = 0;
    int acquisition_fallbacks = 0;
    std::vector<Box> roi_snapshots;
    double wall_seconds = 0.0;
    /// Set when the run stopped early; rows hold the partial trace.
    std::optional<std::string> error;

    /// Appends an evaluation and maintains the running best.
    void append(int iter, Vector x, std::optional<Vector> z, double f);
    double best() const;
    std::size_t size() const { return rows.size(); }
};

/// CSV with header `iter,f,best_f,x_0..x_{D-1}[,z_0..z_{d-1}]`; values are
/// printed with 17 significant digits so reading back is exact.
std::string trace_to_csv(const Trace& trace);
Trace trace_from_csv(const std::string& text);

/// Writes through a temporary file and a rename, so a present file is complete.
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
Trace read_trace_csv(const std::filesystem::path& path);

} // namespace latentbo
