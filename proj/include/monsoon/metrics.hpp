#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "monsoon/data.hpp"
#include "monsoon/geo.hpp"
#include "monsoon/loss.hpp"
#include "monsoon/parallel.hpp"

namespace monsoon {

// Event thresholds in mm: L (low) gates hits, H (high) defines heavy-rain
// events. Comparisons are strict on both sides, so values exactly at a
// threshold count in neither set.
struct Thresholds {
    double low_mm = 10.0;
    double high_mm = 30.0;

    void validate() const;
};

// Published operating points: {10, 30} for 1-day forecasts, {20, 60} for
// 3-day means.
Thresholds default_thresholds(int lead_days);

struct EventCounts {
    long long actual_events = 0;    // days with actual > H
    long long captured = 0;         // of those, days with pred > L
    long long predicted_events = 0; // days with pred > H
    long long false_alarms = 0;     // of those, days with actual < L
};

EventCounts count_events(std::span<const double> pred, std::span<const double> actual,
                         Thresholds th);

// Hit rate of peaks: share of actual > H days on which pred > L.
// Absent when no day has actual > H.
std::optional<double> hrp(std::span<const double> pred, std::span<const double> actual,
                          Thresholds th);

// False-alarm rate: share of pred > H days on which actual < L.
// Absent when pred never exceeds H.
std::optional<double> far(std::span<const double> pred, std::span<const double> actual,
                          Thresholds th);

// Pearson product-moment correlation; absent when either series has zero
// variance. Series shorter than 2 are a usage error.
std::optional<double> correlation(std::span<const double> pred, std::span<const double> actual);

// 100 * (model - reference) / reference; absent when reference <= 0.
std::optional<double> excess_error_pct(double model_loss, double reference_loss);

struct CellSkill {
    std::size_t cell = 0; // ordinal in the grid
    std::size_t n_days = 0;
    std::optional<double> loss;
    std::optional<double> hrp_pct;
    std::optional<double> far_pct;
    std::optional<double> cc;
    std::optional<double> excess_pct;
    EventCounts events;
};

// Aggregates are means over cells with a defined value; the *_excluded
// counters say how many cells were left out of each mean.
struct AggregateSkill {
    std::size_t n_cells = 0;
    std::size_t n_days = 0; // joint evaluation dates
    std::optional<double> loss;
    std::optional<double> hrp_pct;
    std::optional<double> far_pct;
    std::optional<double> cc;
    std::optional<double> excess_pct; // from aggregate losses, not a mean of cell rows
    std::size_t loss_excluded = 0;
    std::size_t hrp_excluded = 0;
    std::size_t far_excluded = 0;
    std::size_t cc_excluded = 0;
    EventCounts events; // totals across cells
};

struct SkillReport {
    Thresholds thresholds;
    int lead_days = 1;
    std::vector<CellSkill> cells;
    AggregateSkill aggregate;
};

// Scores forecasts against realised observations: forecasts issued on day D
// are compared with obs on D+1 (lead 1) or the mean of D+1..D+3 (lead 3).
// Only issue dates whose realised target exists are used; a cell enters a
// day's series when both the forecast and the realised value are present
// there. `reference_loss`, when given, holds per-cell losses of a reference
// model (same grid order) and fills the excess-error columns.
SkillReport evaluate(const std::vector<ForecastField>& forecasts,
                     const std::vector<DailyField>& obs, const GridIndex& grid, Thresholds th,
                     std::span<const double> reference_loss = {}, LossExponents exp = {},
                     Exec exec = Exec::parallel);

// CSV form: one row per cell plus a final ALL row; absent values serialize as
// empty fields and parse back as absent.
void save_skill_csv(const SkillReport& report, const GridIndex& grid, const std::string& path);
SkillReport load_skill_csv(const std::string& path);

// Markdown tables over the grid's named cells (city rows, one column group
// per model), with a totals row and a percentage row.
std::string event_table_markdown(const std::vector<std::string>& model_names,
                                 const std::vector<const SkillReport*>& reports,
                                 const GridIndex& grid);
std::string loss_table_markdown(const std::vector<std::string>& model_names,
                                const std::vector<const SkillReport*>& reports,
                                const GridIndex& grid);

} // namespace monsoon
