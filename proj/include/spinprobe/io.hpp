// io.hpp: CSV series and tables, static SVG line plots

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spinprobe/bath_thermal.hpp"
#include "spinprobe/errors.hpp"
#include "spinprobe/observables.hpp"

namespace spinprobe {

// Shortest text that round-trips a double; non-finite values print as nan/inf.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Compact label for file names, e.g. 0.15 -> "0.15".
inline std::string format_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

} // namespace detail

inline void write_series_csv(const std::filesystem::path& path, const ObservableSeries& s) {
    auto out = detail::open_for_write(path);
    out << "t,pop0,pop1,coh_re,coh_im,purity,fidelity\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_double(s.times[i]) << ',' << format_double(s.pop0[i]) << ',' << format_double(s.pop1[i]) << ','
            << format_double(s.coh_re[i]) << ',' << format_double(s.coh_im[i]) << ',' << format_double(s.purity[i])
            << ',' << format_double(s.fidelity[i]) << '\n';
}

inline ObservableSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "t,pop0,pop1,coh_re,coh_im,purity,fidelity")
        throw ConfigError("read_series_csv: unexpected header in " + path.string());
    ObservableSeries s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double v[7];
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3], &v[4], &v[5], &v[6]) != 7)
            throw ConfigError("read_series_csv: malformed row in " + path.string());
        s.times.push_back(v[0]);
        s.pop0.push_back(v[1]);
        s.pop1.push_back(v[2]);
        s.coh_re.push_back(v[3]);
        s.coh_im.push_back(v[4]);
        s.purity.push_back(v[5]);
        s.fidelity.push_back(v[6]);
    }
    return s;
}

inline void write_statistics_csv(const std::filesystem::path& path, const std::vector<StatisticsRow>& table) {
    auto out = detail::open_for_write(path);
    out << "jx,mean_abs_bbar,mean_c,stderr_bbar,stderr_c\n";
    for (const auto& r : table)
        out << format_double(r.jx) << ',' << format_double(r.mean_abs_bbar) << ',' << format_double(r.mean_c) << ','
            << format_double(r.stderr_bbar) << ',' << format_double(r.stderr_c) << '\n';
}

struct PlotLine {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal static line chart with min/max tick labels and a legend. Lines are decimated to
// at most max_points vertices.
inline void write_svg_plot(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                           const std::string& ylabel, const std::vector<PlotLine>& lines,
                           std::size_t max_points = 2000) {
    constexpr double W = 720, H = 440, L = 70, R = 170, T = 40, B = 50;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& l : lines)
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) continue;
            x0 = std::min(x0, l.x[i]);
            x1 = std::max(x1, l.x[i]);
            y0 = std::min(y0, l.y[i]);
            y1 = std::max(y1, l.y[i]);
        }
    if (!(x1 > x0)) { x0 = 0; x1 = 1; }
    if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    auto out = detail::open_for_write(path);
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  L, T, W - L - R, H - T - B);
    out << buf;
    out << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title
        << "</text>\n";
    out << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"" << (H - 12) << "\" text-anchor=\"middle\">" << xlabel
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << (T + (H - T - B) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (T + (H - T - B) / 2) << ")\">" << ylabel << "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.4g</text><text x=\"%g\" y=\"%g\" "
                  "text-anchor=\"middle\">%.4g</text>\n",
                  L, H - B + 16, x0, W - R, H - B + 16, x1);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.4g</text><text x=\"%g\" y=\"%g\" "
                  "text-anchor=\"end\">%.4g</text>\n",
                  L - 6, H - B, y0, L - 6, T + 10, y1);
    out << buf;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto& l = lines[k];
        const char* colour = palette[k % std::size(palette)];
        const std::size_t stride = std::max<std::size_t>(1, l.x.size() / max_points);
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < l.x.size(); i += stride) {
            if (!std::isfinite(l.y[i])) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(l.x[i]), py(l.y[i]));
            out << buf;
        }
        out << "\"/>\n";
        const double ly = T + 16 + 18 * static_cast<double>(k);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                      "<text x=\"%g\" y=\"%g\">",
                      W - R + 10, ly - 4, W - R + 34, ly - 4, colour, W - R + 40, ly);
        out << buf << l.label << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace spinprobe
