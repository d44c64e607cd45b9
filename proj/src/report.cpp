#include "monsoon/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "monsoon/errors.hpp"

namespace monsoon {

std::uint64_t fnv1a(std::span<const unsigned char> bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string digest_hex(std::string_view text) {
    const auto h = fnv1a({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path + " for digesting");
    std::ostringstream ss;
    ss << in.rdbuf();
    return digest_hex(ss.str());
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw DataError("cannot write " + path);
        out << content;
        if (!out)
            throw DataError("failed while writing " + path);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw DataError("cannot move " + path + " into place: " + ec.message());
}

std::string render_heatmap(std::span<const double> values, const std::vector<bool>& present,
                           const GridIndex& grid, double scale_min, double scale_max) {
    if (grid.count() == 0)
        throw UsageError("heatmap needs a non-empty grid");
    if (!(scale_min < scale_max))
        throw UsageError("heatmap scale must satisfy min < max");
    if (values.size() != grid.count())
        throw ShapeError("heatmap field has " + std::to_string(values.size()) +
                         " cells, grid has " + std::to_string(grid.count()));
    if (!present.empty() && present.size() != grid.count())
        throw ShapeError("heatmap presence flags do not match the grid");

    long wmin = 0, wmax = 0, smin = 0, smax = 0;
    for (std::size_t c = 0; c < grid.count(); ++c) {
        const auto& ll = grid.cell(c);
        const long w = static_cast<long>(std::floor(ll.lon_deg));
        const long s = static_cast<long>(std::floor(ll.lat_deg));
        if (c == 0) {
            wmin = wmax = w;
            smin = smax = s;
        } else {
            wmin = std::min(wmin, w);
            wmax = std::max(wmax, w);
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
    }
    const std::size_t width = static_cast<std::size_t>(wmax - wmin + 1);
    const std::size_t height = static_cast<std::size_t>(smax - smin + 1);
    std::vector<int> raster(width * height, 0);
    const double span = scale_max - scale_min;
    for (std::size_t c = 0; c < grid.count(); ++c) {
        if (!present.empty() && !present[c])
            continue;
        const auto& ll = grid.cell(c);
        const std::size_t col = static_cast<std::size_t>(static_cast<long>(std::floor(ll.lon_deg)) - wmin);
        const std::size_t row = static_cast<std::size_t>(smax - static_cast<long>(std::floor(ll.lat_deg)));
        const double unit = std::clamp((values[c] - scale_min) / span, 0.0, 1.0);
        raster[row * width + col] = static_cast<int>(std::lround(unit * 255.0));
    }

    std::ostringstream out;
    out << "P2\n" << width << ' ' << height << "\n255\n";
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            if (c) out << ' ';
            out << raster[r * width + c];
        }
        out << '\n';
    }
    return out.str();
}

void emit_heatmap(std::span<const double> values, const std::vector<bool>& present,
                  const GridIndex& grid, double scale_min, double scale_max,
                  const std::string& path) {
    write_text_atomic(path, render_heatmap(values, present, grid, scale_min, scale_max));
}

namespace {

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string f1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

} // namespace

std::string render_series_plot(std::span<const double> pred, std::span<const double> actual,
                               std::span<const Date> dates, const std::string& title) {
    if (pred.size() != actual.size())
        throw ShapeError("series length mismatch: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(actual.size()));
    if (pred.empty())
        throw UsageError("series plot needs at least one point");
    if (dates.size() != pred.size())
        throw ShapeError("date axis has " + std::to_string(dates.size()) + " entries, series has " +
                         std::to_string(pred.size()));

    const double W = 800, H = 300, L = 60, R = 20, T = 30, B = 40;
    const double pw = W - L - R, ph = H - T - B;
    double ymin = actual[0], ymax = actual[0];
    for (double v : actual) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    for (double v : pred) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    if (ymin == ymax) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const std::size_t n = pred.size();
    auto sx = [&](std::size_t i) {
        return n == 1 ? L + pw / 2 : L + pw * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto sy = [&](double v) { return T + ph * (1.0 - (v - ymin) / (ymax - ymin)); };
    auto polyline = [&](std::span<const double> series) {
        std::string pts;
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (i) pts += ' ';
            pts += f2(sx(i)) + ',' + f2(sy(series[i]));
        }
        return pts;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << f2(W / 2) << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << title << "</text>\n";
    // axes
    svg << "<line x1=\"" << f2(L) << "\" y1=\"" << f2(T) << "\" x2=\"" << f2(L) << "\" y2=\""
        << f2(T + ph) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << f2(L) << "\" y1=\"" << f2(T + ph) << "\" x2=\"" << f2(L + pw)
        << "\" y2=\"" << f2(T + ph) << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = ymin + (ymax - ymin) * k / 4.0;
        const double y = sy(v);
        svg << "<line x1=\"" << f2(L - 4) << "\" y1=\"" << f2(y) << "\" x2=\"" << f2(L)
            << "\" y2=\"" << f2(y) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << f2(L - 8) << "\" y=\"" << f2(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << f1(v)
            << "</text>\n";
    }
    const std::size_t ticks[3] = {0, (n - 1) / 2, n - 1};
    for (std::size_t i = 0; i < 3; ++i) {
        if (i > 0 && ticks[i] == ticks[i - 1]) continue;
        const double x = sx(ticks[i]);
        svg << "<line x1=\"" << f2(x) << "\" y1=\"" << f2(T + ph) << "\" x2=\"" << f2(x)
            << "\" y2=\"" << f2(T + ph + 4) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << f2(x) << "\" y=\"" << f2(T + ph + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << dates[ticks[i]].iso() << "</text>\n";
    }
    svg << "<polyline points=\"" << polyline(actual)
        << "\" fill=\"none\" stroke=\"#1b6ca8\" stroke-width=\"1.5\"/>\n";
    svg << "<polyline points=\"" << polyline(pred)
        << "\" fill=\"none\" stroke=\"#d97706\" stroke-width=\"1.5\"/>\n";
    // legend
    svg << "<line x1=\"" << f2(L + pw - 150) << "\" y1=\"" << f2(T + 10) << "\" x2=\""
        << f2(L + pw - 120) << "\" y2=\"" << f2(T + 10) << "\" stroke=\"#1b6ca8\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << f2(L + pw - 114) << "\" y=\"" << f2(T + 14)
        << "\" font-family=\"sans-serif\" font-size=\"11\">actual</text>\n";
    svg << "<line x1=\"" << f2(L + pw - 150) << "\" y1=\"" << f2(T + 26) << "\" x2=\""
        << f2(L + pw - 120) << "\" y2=\"" << f2(T + 26) << "\" stroke=\"#d97706\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << f2(L + pw - 114) << "\" y=\"" << f2(T + 30)
        << "\" font-family=\"sans-serif\" font-size=\"11\">forecast</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void emit_series_plot(std::span<const double> pred, std::span<const double> actual,
                      std::span<const Date> dates, const std::string& title,
                      const std::string& path) {
    write_text_atomic(path, render_series_plot(pred, actual, dates, title));
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config_path"] = manifest.config_path;
    j["config_digest"] = manifest.config_digest;
    j["inputs"] = nlohmann::json::array();
    for (const auto& [p, d] : manifest.inputs)
        j["inputs"].push_back({{"path", p}, {"digest", d}});
    j["outputs"] = manifest.outputs;
    j["seeds"] = manifest.seeds;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    j["version"] = manifest.version;
    j["status"] = manifest.status;
    write_text_atomic(path, j.dump(2) + "\n");
}

std::string now_iso_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace monsoon
