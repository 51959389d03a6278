#include <latentbo/trace.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace latentbo {

void Trace::append(int iter, Vector x, std::optional<Vector> z, double f) {
    const double best_f = rows.empty() ? f : std::min(rows.back().best_f, f);
    rows.push_back({iter, std::move(x), std::move(z), f, best_f});
}

double Trace::best() const {
    return rows.empty() ? std::numeric_limits<double>::infinity() : rows.back().best_f;
}

namespace {

void put(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw InputError("trace CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

} // namespace

std::string trace_to_csv(const Trace& trace) {
    std::string out = "iter,f,best_f";
    const Eigen::Index dx = trace.rows.empty() ? 0 : trace.rows.front().x.size();
    const bool has_z = !trace.rows.empty() && trace.rows.front().z.has_value();
    const Eigen::Index dz = has_z ? trace.rows.front().z->size() : 0;
    for (Eigen::Index i = 0; i < dx; ++i) {
        out += ",x_" + std::to_string(i);
    }
    for (Eigen::Index i = 0; i < dz; ++i) {
        out += ",z_" + std::to_string(i);
    }
    out += '\n';
    for (const TraceRow& r : trace.rows) {
        if (r.x.size() != dx || r.z.has_value() != has_z || (has_z && r.z->size() != dz)) {
            throw InputError("trace_to_csv: rows have inconsistent shapes");
        }
        out += std::to_string(r.iter);
        out += ',';
        put(out, r.f);
        out += ',';
        put(out, r.best_f);
        for (Eigen::Index i = 0; i < dx; ++i) {
            out += ',';
            put(out, r.x[i]);
        }
        for (Eigen::Index i = 0; i < dz; ++i) {
            out += ',';
            put(out, (*r.z)[i]);
        }
        out += '\n';
    }
    return out;
}

Trace trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("trace CSV: empty input");
    }
    const auto header = split(line);
    if (header.size() < 3 || header[0] != "iter" || header[1] != "f" || header[2] != "best_f") {
        throw InputError("trace CSV line 1: expected header starting with iter,f,best_f");
    }
    Eigen::Index dx = 0;
    Eigen::Index dz = 0;
    for (std::size_t i = 3; i < header.size(); ++i) {
        const std::string expect_x = "x_" + std::to_string(dx);
        const std::string expect_z = "z_" + std::to_string(dz);
        if (dz == 0 && header[i] == expect_x) {
            ++dx;
        } else if (header[i] == expect_z) {
            ++dz;
        } else {
            throw InputError("trace CSV line 1: unexpected column '" + header[i] + "'");
        }
    }
    Trace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw InputError("trace CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields");
        }
        TraceRow row;
        const double iter = parse_double(cells[0], line_no);
        row.iter = static_cast<int>(iter);
        row.f = parse_double(cells[1], line_no);
        row.best_f = parse_double(cells[2], line_no);
        row.x.resize(dx);
        for (Eigen::Index i = 0; i < dx; ++i) {
            row.x[i] = parse_double(cells[static_cast<std::size_t>(3 + i)], line_no);
        }
        if (dz > 0) {
            Vector z(dz);
            for (Eigen::Index i = 0; i < dz; ++i) {
                z[i] = parse_double(cells[static_cast<std::size_t>(3 + dx + i)], line_no);
            }
            row.z = std::move(z);
        }
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw InputError("cannot write " + tmp.string());
        }
        out << trace_to_csv(trace);
    }
    std::filesystem::rename(tmp, path);
}

Trace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return trace_from_csv(buf.str());
}

} // namespace latentbo
