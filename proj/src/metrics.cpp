#include "monsoon/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "monsoon/errors.hpp"

namespace monsoon {

namespace {

std::string fmt(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string fmt_fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void check_lengths(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size())
        throw ShapeError("series length mismatch: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(actual.size()));
}

} // namespace

void Thresholds::validate() const {
    if (!(0.0 < low_mm && low_mm < high_mm))
        throw ConfigError("thresholds must satisfy 0 < low < high, got low=" + fmt(low_mm) +
                          " high=" + fmt(high_mm));
}

Thresholds default_thresholds(int lead_days) {
    if (lead_days == 1) return {10.0, 30.0};
    if (lead_days == 3) return {20.0, 60.0};
    throw ConfigError("no default thresholds for lead_days=" + std::to_string(lead_days));
}

EventCounts count_events(std::span<const double> pred, std::span<const double> actual,
                         Thresholds th) {
    check_lengths(pred, actual);
    EventCounts ec;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (actual[t] > th.high_mm) {
            ++ec.actual_events;
            if (pred[t] > th.low_mm) ++ec.captured;
        }
        if (pred[t] > th.high_mm) {
            ++ec.predicted_events;
            if (actual[t] < th.low_mm) ++ec.false_alarms;
        }
    }
    return ec;
}

std::optional<double> hrp(std::span<const double> pred, std::span<const double> actual,
                          Thresholds th) {
    const EventCounts ec = count_events(pred, actual, th);
    if (ec.actual_events == 0) return std::nullopt;
    return 100.0 * static_cast<double>(ec.captured) / static_cast<double>(ec.actual_events);
}

std::optional<double> far(std::span<const double> pred, std::span<const double> actual,
                          Thresholds th) {
    const EventCounts ec = count_events(pred, actual, th);
    if (ec.predicted_events == 0) return std::nullopt;
    return 100.0 * static_cast<double>(ec.false_alarms) / static_cast<double>(ec.predicted_events);
}

std::optional<double> correlation(std::span<const double> pred, std::span<const double> actual) {
    check_lengths(pred, actual);
    const std::size_t n = pred.size();
    if (n < 2)
        throw UsageError("correlation needs at least 2 points, got " + std::to_string(n));
    double mp = 0.0, ma = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        mp += pred[t];
        ma += actual[t];
    }
    mp /= static_cast<double>(n);
    ma /= static_cast<double>(n);
    double cov = 0.0, vp = 0.0, va = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double dp = pred[t] - mp;
        const double da = actual[t] - ma;
        cov += dp * da;
        vp += dp * dp;
        va += da * da;
    }
    if (vp == 0.0 || va == 0.0) return std::nullopt;
    return std::clamp(cov / std::sqrt(vp * va), -1.0, 1.0);
}

std::optional<double> excess_error_pct(double model_loss, double reference_loss) {
    if (reference_loss <= 0.0) return std::nullopt;
    return 100.0 * (model_loss - reference_loss) / reference_loss;
}

SkillReport evaluate(const std::vector<ForecastField>& forecasts,
                     const std::vector<DailyField>& obs, const GridIndex& grid, Thresholds th,
                     std::span<const double> reference_loss, LossExponents exp, Exec exec) {
    th.validate();
    if (forecasts.empty())
        throw DataError("no forecasts to evaluate");
    const int lead = forecasts[0].lead_days;
    const std::size_t C = grid.count();
    for (const auto& f : forecasts) {
        if (f.lead_days != lead)
            throw ConfigError("evaluation set mixes lead_days " + std::to_string(lead) + " and " +
                              std::to_string(f.lead_days));
        if (f.values.size() != C || f.present.size() != C)
            throw ShapeError("forecast field on " + f.issue_date.iso() + " has " +
                             std::to_string(f.values.size()) + " cells, grid has " +
                             std::to_string(C));
    }
    if (!reference_loss.empty() && reference_loss.size() != C)
        throw ShapeError("reference loss vector has " + std::to_string(reference_loss.size()) +
                         " cells, grid has " + std::to_string(C));

    FieldIndex index(obs);
    struct JointEval {
        const ForecastField* fcst;
        DailyField realized;
    };
    std::vector<JointEval> days;
    for (const auto& f : forecasts)
        if (auto r = realized_target(index, f.issue_date, lead))
            days.push_back({&f, std::move(*r)});
    if (days.empty())
        throw DataError("no forecast has a realised observation to score against");

    SkillReport rep;
    rep.thresholds = th;
    rep.lead_days = lead;
    rep.cells.resize(C);

    for_each_index(C, exec, [&](std::size_t c) {
        std::vector<double> pred, actual;
        pred.reserve(days.size());
        actual.reserve(days.size());
        for (const auto& d : days)
            if (d.fcst->present[c] && d.realized.present[c]) {
                pred.push_back(d.fcst->values[c]);
                actual.push_back(d.realized.values[c]);
            }
        CellSkill cs;
        cs.cell = c;
        cs.n_days = pred.size();
        if (!pred.empty()) {
            cs.loss = peak_biased_loss(pred, actual, exp);
            cs.events = count_events(pred, actual, th);
            cs.hrp_pct = hrp(pred, actual, th);
            cs.far_pct = far(pred, actual, th);
            if (pred.size() >= 2) cs.cc = correlation(pred, actual);
            if (!reference_loss.empty())
                cs.excess_pct = excess_error_pct(*cs.loss, reference_loss[c]);
        }
        rep.cells[c] = std::move(cs);
    });

    auto& agg = rep.aggregate;
    agg.n_cells = C;
    agg.n_days = days.size();
    double loss_sum = 0, hrp_sum = 0, far_sum = 0, cc_sum = 0, ref_sum = 0;
    std::size_t loss_n = 0, hrp_n = 0, far_n = 0, cc_n = 0;
    for (const auto& cs : rep.cells) {
        if (cs.loss) {
            loss_sum += *cs.loss;
            ++loss_n;
            if (!reference_loss.empty()) ref_sum += reference_loss[cs.cell];
        }
        if (cs.hrp_pct) { hrp_sum += *cs.hrp_pct; ++hrp_n; }
        if (cs.far_pct) { far_sum += *cs.far_pct; ++far_n; }
        if (cs.cc) { cc_sum += *cs.cc; ++cc_n; }
        agg.events.actual_events += cs.events.actual_events;
        agg.events.captured += cs.events.captured;
        agg.events.predicted_events += cs.events.predicted_events;
        agg.events.false_alarms += cs.events.false_alarms;
    }
    if (loss_n) agg.loss = loss_sum / static_cast<double>(loss_n);
    if (hrp_n) agg.hrp_pct = hrp_sum / static_cast<double>(hrp_n);
    if (far_n) agg.far_pct = far_sum / static_cast<double>(far_n);
    if (cc_n) agg.cc = cc_sum / static_cast<double>(cc_n);
    agg.loss_excluded = C - loss_n;
    agg.hrp_excluded = C - hrp_n;
    agg.far_excluded = C - far_n;
    agg.cc_excluded = C - cc_n;
    if (!reference_loss.empty() && agg.loss && loss_n)
        agg.excess_pct = excess_error_pct(*agg.loss, ref_sum / static_cast<double>(loss_n));
    return rep;
}

namespace {

const char* kSkillHeader =
    "cell,lat,lon,name,days,loss,hrp_pct,far_pct,cc,excess_pct,"
    "actual_events,captured,predicted_events,false_alarms,"
    "loss_excluded,hrp_excluded,far_excluded,cc_excluded,lead_days,low_mm,high_mm";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw DataError("bad " + what + " value '" + s + "'");
    return v;
}

std::optional<double> parse_opt(const std::string& s, const std::string& what) {
    if (s.empty()) return std::nullopt;
    return parse_double(s, what);
}

long long parse_count(const std::string& s, const std::string& what) {
    long long v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw DataError("bad " + what + " count '" + s + "'");
    return v;
}

} // namespace

void save_skill_csv(const SkillReport& report, const GridIndex& grid, const std::string& path) {
    std::vector<std::string> cell_name(grid.count());
    for (const auto& [name, ord] : grid.name_map())
        cell_name[ord] = name;

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write skill report " + path);
    out << kSkillHeader << '\n';
    for (const auto& cs : report.cells) {
        const LatLon& ll = grid.cell(cs.cell);
        out << cs.cell << ',' << fmt(ll.lat_deg) << ',' << fmt(ll.lon_deg) << ','
            << cell_name[cs.cell] << ',' << cs.n_days << ',' << fmt_opt(cs.loss) << ','
            << fmt_opt(cs.hrp_pct) << ',' << fmt_opt(cs.far_pct) << ',' << fmt_opt(cs.cc) << ','
            << fmt_opt(cs.excess_pct) << ',' << cs.events.actual_events << ','
            << cs.events.captured << ',' << cs.events.predicted_events << ','
            << cs.events.false_alarms << ",,,,,,,\n";
    }
    const auto& a = report.aggregate;
    out << "ALL,,," << ',' << a.n_days << ',' << fmt_opt(a.loss) << ',' << fmt_opt(a.hrp_pct)
        << ',' << fmt_opt(a.far_pct) << ',' << fmt_opt(a.cc) << ',' << fmt_opt(a.excess_pct) << ','
        << a.events.actual_events << ',' << a.events.captured << ',' << a.events.predicted_events
        << ',' << a.events.false_alarms << ',' << a.loss_excluded << ',' << a.hrp_excluded << ','
        << a.far_excluded << ',' << a.cc_excluded << ',' << report.lead_days << ','
        << fmt(report.thresholds.low_mm) << ',' << fmt(report.thresholds.high_mm) << '\n';
    if (!out)
        throw DataError("failed while writing skill report " + path);
}

SkillReport load_skill_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open skill report " + path);
    std::string line;
    if (!std::getline(in, line) || line != kSkillHeader)
        throw DataError("skill report " + path + " has an unexpected header");
    SkillReport rep;
    bool saw_all = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 21)
            throw DataError("skill report " + path + " has a malformed row: " + line);
        if (f[0] == "ALL") {
            auto& a = rep.aggregate;
            a.n_days = static_cast<std::size_t>(parse_count(f[4], "days"));
            a.loss = parse_opt(f[5], "loss");
            a.hrp_pct = parse_opt(f[6], "hrp");
            a.far_pct = parse_opt(f[7], "far");
            a.cc = parse_opt(f[8], "cc");
            a.excess_pct = parse_opt(f[9], "excess");
            a.events.actual_events = parse_count(f[10], "actual_events");
            a.events.captured = parse_count(f[11], "captured");
            a.events.predicted_events = parse_count(f[12], "predicted_events");
            a.events.false_alarms = parse_count(f[13], "false_alarms");
            a.loss_excluded = static_cast<std::size_t>(parse_count(f[14], "loss_excluded"));
            a.hrp_excluded = static_cast<std::size_t>(parse_count(f[15], "hrp_excluded"));
            a.far_excluded = static_cast<std::size_t>(parse_count(f[16], "far_excluded"));
            a.cc_excluded = static_cast<std::size_t>(parse_count(f[17], "cc_excluded"));
            rep.lead_days = static_cast<int>(parse_count(f[18], "lead_days"));
            rep.thresholds.low_mm = parse_double(f[19], "low_mm");
            rep.thresholds.high_mm = parse_double(f[20], "high_mm");
            saw_all = true;
        } else {
            CellSkill cs;
            cs.cell = static_cast<std::size_t>(parse_count(f[0], "cell"));
            cs.n_days = static_cast<std::size_t>(parse_count(f[4], "days"));
            cs.loss = parse_opt(f[5], "loss");
            cs.hrp_pct = parse_opt(f[6], "hrp");
            cs.far_pct = parse_opt(f[7], "far");
            cs.cc = parse_opt(f[8], "cc");
            cs.excess_pct = parse_opt(f[9], "excess");
            cs.events.actual_events = parse_count(f[10], "actual_events");
            cs.events.captured = parse_count(f[11], "captured");
            cs.events.predicted_events = parse_count(f[12], "predicted_events");
            cs.events.false_alarms = parse_count(f[13], "false_alarms");
            rep.cells.push_back(std::move(cs));
        }
    }
    if (!saw_all)
        throw DataError("skill report " + path + " is missing the ALL row");
    rep.aggregate.n_cells = rep.cells.size();
    return rep;
}

std::string event_table_markdown(const std::vector<std::string>& model_names,
                                 const std::vector<const SkillReport*>& reports,
                                 const GridIndex& grid) {
    if (model_names.size() != reports.size())
        throw UsageError("one report per model name is required");
    if (reports.empty())
        throw UsageError("event table needs at least one model");
    for (const auto& [name, ord] : grid.name_map())
        for (std::size_t m = 1; m < reports.size(); ++m)
            if (reports[m]->cells.at(ord).events.actual_events !=
                reports[0]->cells.at(ord).events.actual_events)
                throw UsageError("skill reports disagree on the event count for " + name +
                                 "; score every model over the same days");
    std::ostringstream md;
    md << "| City | Events |";
    for (const auto& name : model_names)
        md << ' ' << name << " captured |";
    md << "\n|---|---|";
    for (std::size_t k = 0; k < model_names.size(); ++k)
        md << "---|";
    md << '\n';
    long long total_events = 0;
    std::vector<long long> total_captured(reports.size(), 0);
    for (const auto& [name, ord] : grid.name_map()) {
        const auto& base = reports[0]->cells.at(ord);
        md << "| " << name << " | " << base.events.actual_events << " |";
        total_events += base.events.actual_events;
        for (std::size_t m = 0; m < reports.size(); ++m) {
            const auto& cs = reports[m]->cells.at(ord);
            md << ' ' << cs.events.captured << " |";
            total_captured[m] += cs.events.captured;
        }
        md << '\n';
    }
    md << "| Total | " << total_events << " |";
    for (long long c : total_captured)
        md << ' ' << c << " |";
    md << "\n| % captured | |";
    for (long long c : total_captured) {
        if (total_events > 0)
            md << ' ' << fmt_fixed2(100.0 * static_cast<double>(c) / static_cast<double>(total_events)) << " |";
        else
            md << " |";
    }
    md << '\n';
    return md.str();
}

std::string loss_table_markdown(const std::vector<std::string>& model_names,
                                const std::vector<const SkillReport*>& reports,
                                const GridIndex& grid) {
    if (model_names.size() != reports.size())
        throw UsageError("one report per model name is required");
    if (reports.empty())
        throw UsageError("loss table needs at least one model");
    for (std::size_t m = 1; m < reports.size(); ++m)
        if (reports[m]->aggregate.n_days != reports[0]->aggregate.n_days)
            throw UsageError("skill reports cover different day counts; score every model over "
                             "the same days");
    std::ostringstream md;
    md << "| City |";
    for (const auto& name : model_names)
        md << ' ' << name << " |";
    md << "\n|---|";
    for (std::size_t k = 0; k < model_names.size(); ++k)
        md << "---|";
    md << '\n';
    std::vector<double> sums(reports.size(), 0.0);
    std::vector<std::size_t> counts(reports.size(), 0);
    for (const auto& [name, ord] : grid.name_map()) {
        md << "| " << name << " |";
        for (std::size_t m = 0; m < reports.size(); ++m) {
            const auto& cs = reports[m]->cells.at(ord);
            if (cs.loss) {
                md << ' ' << fmt_fixed2(*cs.loss) << " |";
                sums[m] += *cs.loss;
                ++counts[m];
            } else {
                md << " |";
            }
        }
        md << '\n';
    }
    md << "| Mean |";
    for (std::size_t m = 0; m < reports.size(); ++m) {
        if (counts[m])
            md << ' ' << fmt_fixed2(sums[m] / static_cast<double>(counts[m])) << " |";
        else
            md << " |";
    }
    md << '\n';
    return md.str();
}

} // namespace monsoon
