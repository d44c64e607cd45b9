#include "monsoon/geo.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "monsoon/errors.hpp"

namespace monsoon {

namespace {

// Half-degree quantisation shared by convention checks and grid lookup.
// Coordinates are always multiples of 0.5 in this toolkit.
long long half_units(double deg) { return std::llround(deg * 2.0); }

bool on_half_unit(double deg) {
    return std::abs(deg * 2.0 - static_cast<double>(half_units(deg))) < 1e-9;
}

std::string coord_str(const LatLon& c) {
    std::ostringstream os;
    os << "(" << c.lat_deg << ", " << c.lon_deg << ")";
    return os.str();
}

} // namespace

bool in_valid_range(const LatLon& c) {
    return c.lat_deg >= -90.0 && c.lat_deg <= 90.0 && c.lon_deg >= -180.0 && c.lon_deg <= 180.0;
}

bool is_integer_convention(const LatLon& c) {
    return on_half_unit(c.lat_deg) && half_units(c.lat_deg) % 2 == 0 &&
           on_half_unit(c.lon_deg) && half_units(c.lon_deg) % 2 == 0;
}

bool is_half_degree_convention(const LatLon& c) {
    return on_half_unit(c.lat_deg) && half_units(c.lat_deg) % 2 != 0 &&
           on_half_unit(c.lon_deg) && half_units(c.lon_deg) % 2 != 0;
}

LatLon align_nwp(const LatLon& coord) {
    if (!is_integer_convention(coord))
        throw ConfigError("align_nwp: coordinate " + coord_str(coord) +
                          " is not on the integer convention");
    return {coord.lat_deg + 0.5, coord.lon_deg - 0.5};
}

LatLon unalign_nwp(const LatLon& coord) {
    if (!is_half_degree_convention(coord))
        throw ConfigError("unalign_nwp: coordinate " + coord_str(coord) +
                          " is not on the half-degree convention");
    return {coord.lat_deg - 0.5, coord.lon_deg + 0.5};
}

std::int64_t GridIndex::key(const LatLon& c) {
    // pack (lat, lon) in half-degree units; both fit comfortably in 20 bits
    return (static_cast<std::int64_t>(half_units(c.lat_deg)) << 24) ^
           (static_cast<std::int64_t>(half_units(c.lon_deg)) & 0xFFFFFF);
}

GridIndex::GridIndex(std::vector<LatLon> cells) : cells_(std::move(cells)) {
    lookup_.reserve(cells_.size() * 2);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const LatLon& c = cells_[i];
        if (!in_valid_range(c))
            throw DataError("grid cell " + coord_str(c) + " outside valid lat/lon range");
        if (!on_half_unit(c.lat_deg) || !on_half_unit(c.lon_deg))
            throw DataError("grid cell " + coord_str(c) + " is not on a half-degree multiple");
        auto [it, inserted] = lookup_.emplace(key(c), i);
        if (!inserted)
            throw DataError("duplicate grid cell " + coord_str(c));
    }
}

std::optional<std::size_t> GridIndex::find(const LatLon& c) const {
    auto it = lookup_.find(key(c));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

void GridIndex::set_name(const std::string& name, std::size_t ordinal) {
    if (ordinal >= cells_.size())
        throw DataError("name '" + name + "' refers to ordinal out of range");
    names_[name] = ordinal;
}

GridIndex GridIndex::aligned() const {
    std::vector<LatLon> shifted;
    shifted.reserve(cells_.size());
    for (const LatLon& c : cells_)
        shifted.push_back(align_nwp(c));
    GridIndex out(std::move(shifted));
    for (const auto& [name, ordinal] : names_)
        out.set_name(name, ordinal);
    return out;
}

namespace {

double parse_double_field(const std::string& text, const std::string& path, int lineno) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{})
        throw DataError(path + ":" + std::to_string(lineno) + ": cannot parse number '" + text + "'");
    return v;
}

} // namespace

GridIndex load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open grid file: " + path);
    std::vector<LatLon> cells;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'lat,lon'");
        LatLon c{parse_double_field(line.substr(0, comma), path, lineno),
                 parse_double_field(line.substr(comma + 1), path, lineno)};
        cells.push_back(c);
    }
    return GridIndex(std::move(cells));
}

void save_grid(const GridIndex& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write grid file: " + path);
    char buf[64];
    for (const LatLon& c : grid.cells()) {
        auto r1 = std::to_chars(buf, buf + sizeof(buf), c.lat_deg);
        out.write(buf, r1.ptr - buf);
        out.put(',');
        auto r2 = std::to_chars(buf, buf + sizeof(buf), c.lon_deg);
        out.write(buf, r2.ptr - buf);
        out.put('\n');
    }
}

void load_city_names(const std::string& path, GridIndex& grid) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open city file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'name,lat,lon'");
        const std::string name = line.substr(0, c1);
        if (lineno == 1 && name == "name") continue; // optional header
        LatLon c{parse_double_field(line.substr(c1 + 1, c2 - c1 - 1), path, lineno),
                 parse_double_field(line.substr(c2 + 1), path, lineno)};
        auto ord = grid.find(c);
        if (!ord)
            throw DataError(path + ":" + std::to_string(lineno) + ": city '" + name +
                            "' names a cell absent from the grid");
        grid.set_name(name, *ord);
    }
}

std::vector<std::size_t> candidate_cells(const LatLon& target, const GridIndex& source_grid) {
    // centre first, then N, S, E, W
    const LatLon stencil[5] = {
        {target.lat_deg, target.lon_deg},
        {target.lat_deg + 1.0, target.lon_deg},
        {target.lat_deg - 1.0, target.lon_deg},
        {target.lat_deg, target.lon_deg + 1.0},
        {target.lat_deg, target.lon_deg - 1.0},
    };
    std::vector<std::size_t> out;
    out.reserve(5);
    for (const LatLon& c : stencil)
        if (auto ord = source_grid.find(c))
            out.push_back(*ord);
    if (out.empty())
        throw DataError("candidate_cells: no source cell near " + coord_str(target));
    return out;
}

BestMatch best_match(std::span<const double> target_series,
                     const std::vector<std::vector<double>>& candidate_series,
                     const ErrorFunctional& loss) {
    if (candidate_series.empty())
        throw DataError("best_match: empty candidate list");
    BestMatch best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < candidate_series.size(); ++i) {
        const auto& cand = candidate_series[i];
        if (cand.size() != target_series.size())
            throw ShapeError("best_match: candidate " + std::to_string(i) + " length " +
                             std::to_string(cand.size()) + " vs target " +
                             std::to_string(target_series.size()));
        const double err = loss ? loss(cand, target_series)
                                : peak_biased_loss(cand, target_series);
        if (err < best.error) {
            best.candidate_index = i;
            best.error = err;
        }
    }
    return best;
}

} // namespace monsoon
