#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "monsoon/loss.hpp"

namespace monsoon {

// Decimal-degree coordinate of a cell centre. Observation cells sit on
// half-degree centres (fractional part 0.5 on both axes); raw forecast cells
// sit on integer centres.
struct LatLon {
    double lat_deg = 0.0;
    double lon_deg = 0.0;

    bool operator==(const LatLon&) const = default;
};

bool in_valid_range(const LatLon& c);
bool is_integer_convention(const LatLon& c);
bool is_half_degree_convention(const LatLon& c);

// Shift a forecast-grid coordinate half a degree north-west onto the
// observation convention: (lat + 0.5, lon - 0.5). Throws ConfigError on
// non-integer input.
LatLon align_nwp(const LatLon& coord);

// Exact inverse of align_nwp: (lat - 0.5, lon + 0.5).
LatLon unalign_nwp(const LatLon& coord);

// Ordered catalogue of cells; the position in `cells` is the cell ordinal.
// `name_map` optionally labels some cells (cities).
class GridIndex {
public:
    GridIndex() = default;
    explicit GridIndex(std::vector<LatLon> cells);

    std::size_t count() const { return cells_.size(); }
    const std::vector<LatLon>& cells() const { return cells_; }
    const LatLon& cell(std::size_t ordinal) const { return cells_[ordinal]; }

    // Ordinal of the cell at exactly this coordinate, if present.
    std::optional<std::size_t> find(const LatLon& c) const;

    void set_name(const std::string& name, std::size_t ordinal);
    const std::map<std::string, std::size_t>& name_map() const { return names_; }

    // Cell-wise application of align_nwp / any coordinate map.
    GridIndex aligned() const;

private:
    static std::int64_t key(const LatLon& c);
    std::vector<LatLon> cells_;
    std::unordered_map<std::int64_t, std::size_t> lookup_;
    std::map<std::string, std::size_t> names_;
};

// Plain-text cell list: one "lat,lon" pair per line, order defines ordinals.
GridIndex load_grid(const std::string& path);
void save_grid(const GridIndex& grid, const std::string& path);

// CSV "name,lat,lon" rows naming cells of `grid`; unknown coordinates throw DataError.
void load_city_names(const std::string& path, GridIndex& grid);

// The aligned cell at `target`'s coordinate plus its four axis-aligned
// neighbours at +-1 degree, in the fixed order centre, N, S, E, W, keeping
// only cells present in source_grid. Throws DataError when none of the five
// exist.
std::vector<std::size_t> candidate_cells(const LatLon& target, const GridIndex& source_grid);

using ErrorFunctional = std::function<double(std::span<const double>, std::span<const double>)>;

struct BestMatch {
    std::size_t candidate_index = 0; // index into the candidate list
    double error = 0.0;
};

// Candidate with the lowest error against target_series; ties break to the
// lowest index. Default functional is the peak-biased loss.
BestMatch best_match(std::span<const double> target_series,
                     const std::vector<std::vector<double>>& candidate_series,
                     const ErrorFunctional& loss = nullptr);

// One row per target cell: the chosen source-grid ordinal and the calibration
// error that selected it.
struct MatchEntry {
    std::size_t source_ordinal = 0;
    double error = 0.0;
};

struct MatchTable {
    std::vector<MatchEntry> entries; // indexed by target ordinal
};

} // namespace monsoon
