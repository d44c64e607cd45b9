#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "monsoon/dates.hpp"
#include "monsoon/geo.hpp"

namespace monsoon {

inline constexpr const char* kToolkitVersion = "0.1.0";

// FNV-1a, used for config and input digests in run manifests.
std::uint64_t fnv1a(std::span<const unsigned char> bytes);
std::string digest_hex(std::string_view text);
std::string file_digest_hex(const std::string& path); // DataError when unreadable

// Write-temp-then-rename; the file appears complete or not at all.
void write_text_atomic(const std::string& path, const std::string& content);

// Plain-text P2 graymap of a per-cell field: one pixel per degree, north at
// the top, values clipped to [scale_min, scale_max] and mapped linearly to
// 0..255. Cells absent from the grid (and not-present cells) render as 0.
std::string render_heatmap(std::span<const double> values, const std::vector<bool>& present,
                           const GridIndex& grid, double scale_min, double scale_max);
void emit_heatmap(std::span<const double> values, const std::vector<bool>& present,
                  const GridIndex& grid, double scale_min, double scale_max,
                  const std::string& path);

// Two-polyline SVG (actual vs forecast) with axes, tick labels, and a legend.
// Layout is fully deterministic for fixed inputs.
std::string render_series_plot(std::span<const double> pred, std::span<const double> actual,
                               std::span<const Date> dates, const std::string& title);
void emit_series_plot(std::span<const double> pred, std::span<const double> actual,
                      std::span<const Date> dates, const std::string& title,
                      const std::string& path);

// One manifest per artifact directory: what ran, on which inputs (digested
// before compute), with which seeds, and what it wrote. Written on failure
// too, with the error in `status`.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_digest;
    std::vector<std::pair<std::string, std::string>> inputs; // path, digest
    std::vector<std::string> outputs;
    std::vector<std::uint64_t> seeds;
    std::string started_at;
    std::string finished_at;
    std::string version = kToolkitVersion;
    std::string status = "ok";
};

void save_manifest(const RunManifest& manifest, const std::string& path);
std::string now_iso_utc();

} // namespace monsoon
