#include "monsoon/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "monsoon/errors.hpp"

namespace monsoon {

bool DailyField::fully_present() const {
    return std::all_of(present.begin(), present.end(), [](bool p) { return p; });
}

void SplitSpec::validate() const {
    if (train_years.first > train_years.last || test_years.first > test_years.last)
        throw ConfigError("split: year range first > last");
    if (train_years.last >= test_years.first && test_years.last >= train_years.first)
        throw ConfigError("split: train and test year ranges overlap");
    if (months.empty())
        throw ConfigError("split: months set is empty");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double parse_num(const std::string& text, const std::string& path, int lineno) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw DataError(path + ":" + std::to_string(lineno) + ": cannot parse number '" + text + "'");
    return v;
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v); // shortest round-trip form
    out.append(buf, r.ptr);
}

} // namespace

std::vector<DailyField> load_rainfall(const std::string& path, const GridIndex& grid) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open rainfall file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,lat,lon,value_mm")
        throw DataError(path + ": bad header '" + line + "', expected 'date,lat,lon,value_mm'");

    std::map<Date, DailyField> by_date;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 4)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        const Date date = Date::parse(f[0]);
        const LatLon coord{parse_num(f[1], path, lineno), parse_num(f[2], path, lineno)};
        auto ord = grid.find(coord);
        if (!ord)
            throw DataError(path + ":" + std::to_string(lineno) + ": coordinate (" + f[1] + "," +
                            f[2] + ") is not in the grid");
        const double value = parse_num(f[3], path, lineno);
        if (value < 0.0)
            throw DataError(path + ":" + std::to_string(lineno) + ": negative rainfall " + f[3]);
        auto [it, fresh] = by_date.try_emplace(date);
        DailyField& field = it->second;
        if (fresh) {
            field.date = date;
            field.values.assign(grid.count(), 0.0);
            field.present.assign(grid.count(), false);
        }
        if (field.present[*ord])
            throw DataError(path + ":" + std::to_string(lineno) + ": duplicate entry for " + f[0] +
                            " at (" + f[1] + "," + f[2] + ")");
        field.values[*ord] = value;
        field.present[*ord] = true;
    }

    std::vector<DailyField> out;
    out.reserve(by_date.size());
    for (auto& [date, field] : by_date)
        out.push_back(std::move(field));
    return out;
}

void save_rainfall(const std::vector<DailyField>& fields, const GridIndex& grid,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write rainfall file: " + path);
    std::string buf = "date,lat,lon,value_mm\n";
    for (const DailyField& f : fields) {
        if (f.values.size() != grid.count())
            throw ShapeError("save_rainfall: field length mismatch on " + f.date.iso());
        const std::string day = f.date.iso();
        for (std::size_t i = 0; i < grid.count(); ++i) {
            if (!f.present[i]) continue;
            buf += day;
            buf += ',';
            append_double(buf, grid.cell(i).lat_deg);
            buf += ',';
            append_double(buf, grid.cell(i).lon_deg);
            buf += ',';
            append_double(buf, f.values[i]);
            buf += '\n';
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<ForecastField> load_forecasts(const std::string& path, const GridIndex& grid) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open forecast file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "issue_date,lead_days,lat,lon,value_mm")
        throw DataError(path + ": bad header '" + line +
                        "', expected 'issue_date,lead_days,lat,lon,value_mm'");

    std::map<std::pair<Date, int>, ForecastField> by_key;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 5)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
        const Date issue = Date::parse(f[0]);
        const int lead = static_cast<int>(parse_num(f[1], path, lineno));
        if (lead != 1 && lead != 3)
            throw DataError(path + ":" + std::to_string(lineno) + ": lead_days must be 1 or 3");
        const LatLon coord{parse_num(f[2], path, lineno), parse_num(f[3], path, lineno)};
        auto ord = grid.find(coord);
        if (!ord)
            throw DataError(path + ":" + std::to_string(lineno) + ": coordinate (" + f[2] + "," +
                            f[3] + ") is not in the grid");
        const double value = parse_num(f[4], path, lineno);
        if (value < 0.0)
            throw DataError(path + ":" + std::to_string(lineno) + ": negative forecast " + f[4]);
        auto [it, fresh] = by_key.try_emplace({issue, lead});
        ForecastField& field = it->second;
        if (fresh) {
            field.issue_date = issue;
            field.lead_days = lead;
            field.values.assign(grid.count(), 0.0);
            field.present.assign(grid.count(), false);
        }
        if (field.present[*ord])
            throw DataError(path + ":" + std::to_string(lineno) + ": duplicate entry for " + f[0] +
                            " lead " + f[1] + " at (" + f[2] + "," + f[3] + ")");
        field.values[*ord] = value;
        field.present[*ord] = true;
    }

    std::vector<ForecastField> out;
    out.reserve(by_key.size());
    for (auto& [key, field] : by_key)
        out.push_back(std::move(field));
    return out;
}

void save_forecasts(const std::vector<ForecastField>& fields, const GridIndex& grid,
                    const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write forecast file: " + path);
    std::string buf = "issue_date,lead_days,lat,lon,value_mm\n";
    for (const ForecastField& f : fields) {
        if (f.values.size() != grid.count())
            throw ShapeError("save_forecasts: field length mismatch on " + f.issue_date.iso());
        const std::string day = f.issue_date.iso();
        for (std::size_t i = 0; i < grid.count(); ++i) {
            if (!f.present[i]) continue;
            buf += day;
            buf += ',';
            buf += std::to_string(f.lead_days);
            buf += ',';
            append_double(buf, grid.cell(i).lat_deg);
            buf += ',';
            append_double(buf, grid.cell(i).lon_deg);
            buf += ',';
            append_double(buf, f.values[i]);
            buf += '\n';
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<JointDay> filter_joint_days(const std::vector<DailyField>& obs,
                                        const std::vector<ForecastField>& fcst) {
    std::vector<JointDay> out;
    std::size_t i = 0, j = 0;
    while (i < obs.size() && j < fcst.size()) {
        if (obs[i].date < fcst[j].issue_date) {
            ++i;
        } else if (fcst[j].issue_date < obs[i].date) {
            ++j;
        } else {
            out.push_back({obs[i].date, &obs[i], &fcst[j]});
            ++i;
            ++j;
        }
    }
    return out;
}

WindowSet make_windows(const std::vector<DailyField>& fields, int context_days,
                       const SplitSpec& split) {
    if (context_days < 1)
        throw ConfigError("make_windows: context_days must be >= 1");
    split.validate();

    // Maximal runs of consecutive in-season, fully-present days. A missing
    // date, an out-of-season month, or a day with any absent cell ends a run.
    std::vector<std::vector<const DailyField*>> runs;
    std::vector<const DailyField*> run;
    long prev_serial = 0;
    for (const DailyField& f : fields) {
        const bool in_season = split.months.count(static_cast<int>(f.date.month())) > 0;
        const bool usable = in_season && f.fully_present();
        const bool contiguous = !run.empty() && f.date.serial() == prev_serial + 1;
        if (!usable) {
            if (!run.empty()) runs.push_back(std::move(run));
            run.clear();
        } else if (run.empty() || contiguous) {
            run.push_back(&f);
            prev_serial = f.date.serial();
        } else {
            runs.push_back(std::move(run));
            run.clear();
            run.push_back(&f);
            prev_serial = f.date.serial();
        }
    }
    if (!run.empty()) runs.push_back(std::move(run));

    WindowSet out;
    const std::size_t d = static_cast<std::size_t>(context_days);
    const std::size_t need = d + 3;
    bool any_window = false;
    for (const auto& r : runs) {
        if (r.size() < need) continue;
        any_window = true;
        const std::size_t cells = r.front()->values.size();
        for (std::size_t start = 0; start + need <= r.size(); ++start) {
            const DailyField* first_target = r[start + d];
            const int target_year = first_target->date.year();
            const bool is_train = split.train_years.contains(target_year);
            const bool is_test = split.test_years.contains(target_year);
            if (!is_train && !is_test) continue;

            WindowSample s;
            s.target_date = first_target->date;
            s.context = Tensor2(cells, d);
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t g = 0; g < cells; ++g)
                    s.context(g, k) = r[start + k]->values[g];
            s.target1 = first_target->values;
            s.target3.resize(cells);
            for (std::size_t g = 0; g < cells; ++g)
                s.target3[g] = (r[start + d]->values[g] + r[start + d + 1]->values[g] +
                                r[start + d + 2]->values[g]) / 3.0;
            (is_train ? out.train : out.test).push_back(std::move(s));
        }
    }
    out.empty_warning = !any_window;
    return out;
}

double normalize(double value_mm, double cap_mm) {
    if (cap_mm <= 0.0)
        throw ConfigError("normalize: cap must be positive");
    return std::min(value_mm, cap_mm) / cap_mm;
}

double denormalize(double unit, double cap_mm) {
    if (cap_mm <= 0.0)
        throw ConfigError("denormalize: cap must be positive");
    return unit * cap_mm;
}

std::vector<double> normalize(const std::vector<double>& values_mm, double cap_mm) {
    std::vector<double> out(values_mm.size());
    for (std::size_t i = 0; i < values_mm.size(); ++i)
        out[i] = normalize(values_mm[i], cap_mm);
    return out;
}

std::optional<DailyField> realized_target(const FieldIndex& index, Date issue, int lead_days) {
    if (lead_days != 1 && lead_days != 3)
        throw ConfigError("realized_target: lead_days must be 1 or 3");
    const DailyField* d1 = index.find(issue.plus_days(1));
    if (!d1) return std::nullopt;
    DailyField out;
    out.date = issue;
    if (lead_days == 1) {
        out.values = d1->values;
        out.present = d1->present;
        return out;
    }
    const DailyField* d2 = index.find(issue.plus_days(2));
    const DailyField* d3 = index.find(issue.plus_days(3));
    if (!d2 || !d3) return std::nullopt;
    const std::size_t n = d1->values.size();
    out.values.assign(n, 0.0);
    out.present.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (d1->present[i] && d2->present[i] && d3->present[i]) {
            out.values[i] = (d1->values[i] + d2->values[i] + d3->values[i]) / 3.0;
            out.present[i] = true;
        }
    }
    return out;
}

std::optional<DailyField> realized_target(const std::vector<DailyField>& obs, Date issue,
                                          int lead_days) {
    FieldIndex index(obs);
    return realized_target(index, issue, lead_days);
}

FieldIndex::FieldIndex(const std::vector<DailyField>& fields) : fields_(&fields) {
    by_serial_.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
        by_serial_.emplace_back(fields[i].date.serial(), i);
    std::sort(by_serial_.begin(), by_serial_.end());
}

const DailyField* FieldIndex::find(Date d) const {
    auto it = std::lower_bound(by_serial_.begin(), by_serial_.end(),
                               std::make_pair(d.serial(), std::size_t{0}));
    if (it == by_serial_.end() || it->first != d.serial()) return nullptr;
    return &(*fields_)[it->second];
}

} // namespace monsoon
