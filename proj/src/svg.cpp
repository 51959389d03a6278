#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace latentbo::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish(double pad) {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double p = pad * (hi - lo);
        lo -= p;
        hi += p;
    }
};

void render_panel(std::ostringstream& out, const Panel& panel, double top, int width, int height) {
    const double left = 70.0, right = width - 20.0;
    const double plot_top = top + 30.0, plot_bottom = top + height - 45.0;

    Range xr, yr;
    for (const Series& s : panel.series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
        for (double v : s.lo) yr.add(v);
        for (double v : s.hi) yr.add(v);
    }
    xr.finish(0.0);
    yr.finish(0.05);
    auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * (right - left); };
    auto py = [&](double y) {
        return plot_bottom - (y - yr.lo) / (yr.hi - yr.lo) * (plot_bottom - plot_top);
    };

    out << "<text x=\"" << num(width / 2.0) << "\" y=\"" << num(top + 20.0)
        << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(panel.title) << "</text>\n";
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(plot_top) << "\" width=\""
        << num(right - left) << "\" height=\"" << num(plot_bottom - plot_top)
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(plot_bottom + 15.0)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(xv) << "</text>\n";
        out << "<text x=\"" << num(left - 5.0) << "\" y=\"" << num(py(yv) + 3.0)
            << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(yv) << "</text>\n";
    }
    out << "<text x=\"" << num((left + right) / 2.0) << "\" y=\"" << num(plot_bottom + 35.0)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(panel.x_label) << "</text>\n";
    out << "<text x=\"15\" y=\"" << num((plot_top + plot_bottom) / 2.0)
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 "
        << num((plot_top + plot_bottom) / 2.0) << ")\">" << escape(panel.y_label) << "</text>\n";

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
        const Series& s = panel.series[si];
        const char* colour = kPalette[si % std::size(kPalette)];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (!s.lo.empty() && s.lo.size() >= n && s.hi.size() >= n && n > 0) {
            out << "<polygon fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < n; ++i) out << num(px(s.x[i])) << ',' << num(py(s.hi[i])) << ' ';
            for (std::size_t i = n; i-- > 0;) out << num(px(s.x[i])) << ',' << num(py(s.lo[i])) << ' ';
            out << "\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            if (s.step && i > 0) out << num(px(s.x[i])) << ',' << num(py(s.y[i - 1])) << ' ';
            out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        }
        out << "\"/>\n";
        const double ly = plot_top + 15.0 + 15.0 * static_cast<double>(si);
        out << "<line x1=\"" << num(right - 150.0) << "\" y1=\"" << num(ly) << "\" x2=\""
            << num(right - 130.0) << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(right - 125.0) << "\" y=\"" << num(ly + 4.0)
            << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    }
}

} // namespace

std::string render(const std::vector<Panel>& panels, int width, int panel_height) {
    const int height = panel_height * std::max<int>(1, static_cast<int>(panels.size()));
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) {
        render_panel(out, panels[i], static_cast<double>(i) * panel_height, width, panel_height);
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace latentbo::svg
