#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "monsoon/dates.hpp"
#include "monsoon/geo.hpp"
#include "monsoon/tensor.hpp"

namespace monsoon {

// One day of rainfall over all grid cells, mm/day, aligned to a GridIndex.
struct DailyField {
    Date date;
    std::vector<double> values;   // mm, >= 0 where present
    std::vector<bool> present;

    bool fully_present() const;
};

// Forecast issued on issue_date covering the next `lead_days` days: the value
// is the predicted amount for day issue+1 (lead 1) or the predicted mean over
// days issue+1..issue+3 (lead 3).
struct ForecastField {
    Date issue_date;
    int lead_days = 1; // 1 or 3
    std::vector<double> values;
    std::vector<bool> present;
};

// Supervised pair: `context` holds d contiguous days ending on day t (one row
// per grid cell, one column per day); target1 is day t+1, target3 the mean of
// days t+1..t+3. All days lie inside one monsoon-season run.
struct WindowSample {
    Date target_date; // day t+1
    Tensor2 context;  // cells x d, mm/day
    std::vector<double> target1;
    std::vector<double> target3;
};

struct YearRange {
    int first = 0;
    int last = 0;
    bool contains(int y) const { return y >= first && y <= last; }
};

// Train/test partition by target-day year, restricted to the listed months.
struct SplitSpec {
    YearRange train_years{1901, 2010};
    YearRange test_years{2012, 2022};
    std::set<int> months{6, 7, 8, 9};

    void validate() const;
};

// Rainfall CSV, header "date,lat,lon,value_mm": one DailyField per distinct
// date, chronologically sorted; rows absent from the file map to present[i] == false.
std::vector<DailyField> load_rainfall(const std::string& path, const GridIndex& grid);
void save_rainfall(const std::vector<DailyField>& fields, const GridIndex& grid,
                   const std::string& path);

// Forecast CSV, header "issue_date,lead_days,lat,lon,value_mm".
std::vector<ForecastField> load_forecasts(const std::string& path, const GridIndex& grid);
void save_forecasts(const std::vector<ForecastField>& fields, const GridIndex& grid,
                    const std::string& path);

struct JointDay {
    Date date;
    const DailyField* obs;
    const ForecastField* fcst;
};

// Dates appearing in both series (obs date == forecast issue date), in order.
// Both inputs must be sorted by date. An empty intersection is a legal result.
std::vector<JointDay> filter_joint_days(const std::vector<DailyField>& obs,
                                        const std::vector<ForecastField>& fcst);

struct WindowSet {
    std::vector<WindowSample> train;
    std::vector<WindowSample> test;
    bool empty_warning = false; // no feasible window in any season run
};

// Slides a (d context + 3 target)-day window over every run of consecutive,
// fully-present, in-season days; samples go to train or test by the year of
// the target day (samples in neither range are dropped).
WindowSet make_windows(const std::vector<DailyField>& fields, int context_days,
                       const SplitSpec& split);

// Squash into the unit interval for the sigmoid output head: min(v, cap)/cap.
double normalize(double value_mm, double cap_mm);
double denormalize(double unit, double cap_mm);
std::vector<double> normalize(const std::vector<double>& values_mm, double cap_mm);

// Index from date to position in a chronological field list.
class FieldIndex {
public:
    explicit FieldIndex(const std::vector<DailyField>& fields);
    const DailyField* find(Date d) const;

private:
    const std::vector<DailyField>* fields_;
    std::vector<std::pair<long, std::size_t>> by_serial_;
};

// Realised counterpart of a forecast issued on `issue`: obs on issue+1 for
// lead 1, the mean of obs on issue+1..issue+3 for lead 3. Empty when any
// needed day is missing entirely; per-cell gaps surface via .present.
std::optional<DailyField> realized_target(const FieldIndex& index, Date issue, int lead_days);
std::optional<DailyField> realized_target(const std::vector<DailyField>& obs, Date issue,
                                          int lead_days);

} // namespace monsoon
