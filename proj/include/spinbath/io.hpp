// io.hpp — CSV and SVG emission for series bundles, plus CSV reading for the
// fitting command. The CSV schema is fixed: `#`-prefixed key=value metadata
// lines, a `t,<label>[,<label>...]` header, one row per grid sample, decimal
// floats at full round-trip precision, LF line endings.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/experiments.hpp"
#include "spinbath/format.hpp"

namespace spinbath::io {

using experiments::FigureBundle;
using experiments::TimeSeries;

namespace detail {

using spinbath::format_double;

} // namespace detail

// ----------------------------------- CSV --------------------------------------

inline std::string to_csv(const FigureBundle& bundle) {
    if (bundle.curves.empty()) throw std::invalid_argument("to_csv: empty bundle");
    const auto samples = static_cast<std::size_t>(bundle.grid.num_samples());
    for (const auto& curve : bundle.curves)
        if (curve.series.values.size() != samples)
            throw std::invalid_argument("to_csv: curve length does not match the grid");

    std::string out;
    for (const auto& [key, value] : bundle.metadata) out += "# " + key + "=" + value + "\n";
    out += "t";
    for (const auto& curve : bundle.curves) out += "," + curve.label;
    out += "\n";
    for (std::size_t k = 0; k < samples; ++k) {
        out += detail::format_double(bundle.grid.sample(static_cast<int>(k)));
        for (const auto& curve : bundle.curves)
            out += "," + detail::format_double(curve.series.values[k]);
        out += "\n";
    }
    return out;
}

inline void write_text(const std::string& text, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open for writing: " + path);
    file << text;
    if (!file) throw std::runtime_error("write failed: " + path);
}

inline void emit_csv(const FigureBundle& bundle, const std::string& path) {
    write_text(to_csv(bundle), path);
}

// Parsed CSV bundle: metadata, labels, the time column, one vector per curve.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> labels;
    std::vector<double> t;
    std::vector<std::vector<double>> columns;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open for reading: " + path);
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(file, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string body = line.substr(line.find_first_not_of("# "));
            const auto eq = body.find('=');
            if (eq != std::string::npos)
                table.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            if (cells.size() < 2 || cells.front() != "t")
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected header 't,<label>[,...]'");
            table.labels.assign(cells.begin() + 1, cells.end());
            table.columns.resize(table.labels.size());
            have_header = true;
            continue;
        }
        if (cells.size() != table.labels.size() + 1)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": row width does not match the header");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(cells[i].c_str(), &end);
            if (end == cells[i].c_str() || *end != '\0')
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": malformed number '" + cells[i] + "'");
            if (i == 0)
                table.t.push_back(v);
            else
                table.columns[i - 1].push_back(v);
        }
    }
    if (!have_header) throw std::runtime_error(path + ": no CSV header found");
    if (table.t.size() < 3) throw std::runtime_error(path + ": needs at least 3 rows");
    return table;
}

// Rebuilds a TimeSeries from a parsed table column; the time column must be
// the uniform grid the writer produced.
inline TimeSeries column_series(const CsvTable& table, const std::optional<std::string>& label) {
    std::size_t col = 0;
    if (label) {
        bool found = false;
        for (std::size_t i = 0; i < table.labels.size(); ++i)
            if (table.labels[i] == *label) {
                col = i;
                found = true;
                break;
            }
        if (!found) throw std::invalid_argument("column_series: no column '" + *label + "'");
    }
    TimeSeries series;
    series.grid = model::TimeGrid{table.t.back(), static_cast<int>(table.t.size()) - 1};
    series.grid.validate();
    for (std::size_t k = 0; k < table.t.size(); ++k)
        if (std::abs(table.t[k] - series.grid.sample(static_cast<int>(k))) >
            1e-9 * series.grid.t0)
            throw std::invalid_argument("column_series: time column is not a uniform grid");
    series.values = table.columns[col];
    return series;
}

// ----------------------------------- SVG --------------------------------------

// Single-file line plot: labeled axes, one polyline per curve, optional
// log-scale ordinate. Kept to plain shapes and text.
inline std::string to_svg(const FigureBundle& bundle, bool log_y = false) {
    if (bundle.curves.empty()) throw std::invalid_argument("to_svg: empty bundle");
    constexpr double width = 960, height = 600;
    constexpr double ml = 90, mr = 30, mt = 50, mb = 70;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;
    constexpr double log_floor = -40.0; // decades below which points clamp

    auto y_transform = [log_y, log_floor](double v) {
        if (!log_y) return v;
        const double a = std::abs(v);
        return a > 0.0 ? std::max(std::log10(a), log_floor) : log_floor;
    };

    double y_min = 1e300, y_max = -1e300;
    for (const auto& curve : bundle.curves)
        for (double v : curve.series.values) {
            const double y = y_transform(v);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    if (y_min == y_max) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    const double t0 = bundle.grid.t0;

    auto x_pix = [&](double t) { return ml + plot_w * (t / t0); };
    auto y_pix = [&](double y) { return mt + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"600\" "
           "viewBox=\"0 0 960 600\">\n";
    svg += "<rect width=\"960\" height=\"600\" fill=\"white\"/>\n";
    svg += "<text x=\"480\" y=\"28\" text-anchor=\"middle\" font-size=\"18\" "
           "font-family=\"sans-serif\">" +
           bundle.title + "</text>\n";

    // frame
    svg += "<rect x=\"" + detail::format_double(ml) + "\" y=\"" + detail::format_double(mt) +
           "\" width=\"" + detail::format_double(plot_w) + "\" height=\"" +
           detail::format_double(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";

    // ticks
    for (int i = 0; i <= 5; ++i) {
        const double t = t0 * i / 5.0;
        const double x = x_pix(t);
        char tick[48];
        std::snprintf(tick, sizeof(tick), "%.3g", t);
        svg += "<line x1=\"" + detail::format_double(x) + "\" y1=\"" +
               detail::format_double(mt + plot_h) + "\" x2=\"" + detail::format_double(x) +
               "\" y2=\"" + detail::format_double(mt + plot_h + 6) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::format_double(x) + "\" y=\"" +
               detail::format_double(mt + plot_h + 24) +
               "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" + tick +
               "</text>\n";
        const double yv = y_min + (y_max - y_min) * i / 5.0;
        const double y = y_pix(yv);
        std::snprintf(tick, sizeof(tick), "%.3g", yv);
        svg += "<line x1=\"" + detail::format_double(ml - 6) + "\" y1=\"" +
               detail::format_double(y) + "\" x2=\"" + detail::format_double(ml) + "\" y2=\"" +
               detail::format_double(y) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::format_double(ml - 10) + "\" y=\"" +
               detail::format_double(y + 4) +
               "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">" + tick +
               "</text>\n";
    }
    svg += "<text x=\"" + detail::format_double(ml + plot_w / 2) + "\" y=\"" +
           detail::format_double(height - 18) +
           "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\">t (s)</text>\n";
    svg += "<text x=\"22\" y=\"" + detail::format_double(mt + plot_h / 2) +
           "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 22 " +
           detail::format_double(mt + plot_h / 2) + ")\">" +
           (log_y ? "log10 value" : "value (dimensionless)") + "</text>\n";

    for (std::size_t c = 0; c < bundle.curves.size(); ++c) {
        const auto& curve = bundle.curves[c];
        const char* color = palette[c % (sizeof(palette) / sizeof(palette[0]))];
        std::string points;
        for (std::size_t k = 0; k < curve.series.values.size(); ++k) {
            const double t = bundle.grid.sample(static_cast<int>(k));
            points += detail::format_double(x_pix(t)) + "," +
                      detail::format_double(y_pix(y_transform(curve.series.values[k])));
            if (k + 1 < curve.series.values.size()) points += " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        const double ly = mt + 18 + 18 * static_cast<double>(c);
        svg += "<line x1=\"" + detail::format_double(ml + plot_w - 150) + "\" y1=\"" +
               detail::format_double(ly - 4) + "\" x2=\"" +
               detail::format_double(ml + plot_w - 120) + "\" y2=\"" +
               detail::format_double(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + detail::format_double(ml + plot_w - 112) + "\" y=\"" +
               detail::format_double(ly) + "\" font-size=\"12\" font-family=\"sans-serif\">" +
               curve.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

inline void emit_svg(const FigureBundle& bundle, const std::string& path, bool log_y = false) {
    write_text(to_svg(bundle, log_y), path);
}

} // namespace spinbath::io
