#include "monsoon/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "monsoon/errors.hpp"
#include "monsoon/rng.hpp"

namespace monsoon {

SynthKind synth_kind_from_string(const std::string& s) {
    if (s == "ar_advect") return SynthKind::ar_advect;
    if (s == "planted_lag") return SynthKind::planted_lag;
    if (s == "white_noise") return SynthKind::white_noise;
    throw ConfigError("unknown synth kind '" + s + "'");
}

std::string to_string(SynthKind k) {
    switch (k) {
    case SynthKind::ar_advect: return "ar_advect";
    case SynthKind::planted_lag: return "planted_lag";
    case SynthKind::white_noise: return "white_noise";
    }
    return "ar_advect";
}

namespace {

void validate(const SynthConfig& cfg) {
    if (cfg.grid_rows < 1 || cfg.grid_cols < 1)
        throw ConfigError("synthetic grid must have positive extents");
    if (cfg.n_years < 1)
        throw ConfigError("n_years must be at least 1");
    if (cfg.months.empty())
        throw ConfigError("months must be non-empty");
    for (int m : cfg.months)
        if (m < 1 || m > 12)
            throw ConfigError("month " + std::to_string(m) + " out of range");
    if (cfg.ar_coeff < 0.0 || cfg.ar_coeff >= 1.0)
        throw ConfigError("ar_coeff must lie in [0, 1)");
    if (cfg.advect < 0.0 || cfg.ar_coeff + cfg.advect >= 1.0)
        throw ConfigError("ar_coeff + advect must stay below 1; the advection chain amplifies otherwise");
    if (cfg.noise_sigma < 0.0 || cfg.shared_sigma < 0.0 || cfg.burst_rate < 0.0 ||
        cfg.burst_rate > 1.0 || cfg.burst_rate_wet < 0.0 || cfg.burst_rate_wet > 1.0)
        throw ConfigError("noise/burst settings out of range");
    if (cfg.kind == SynthKind::planted_lag && cfg.planted_lag < 1)
        throw ConfigError("planted_lag must be at least 1");
}

unsigned days_in_month(int year, unsigned month) {
    namespace chr = std::chrono;
    const auto last = chr::year_month_day_last{chr::year{year}, chr::month_day_last{chr::month{month}}};
    return unsigned(last.day());
}

} // namespace

GridIndex synth_grid(const SynthConfig& cfg) {
    validate(cfg);
    std::vector<LatLon> cells;
    cells.reserve(static_cast<std::size_t>(cfg.grid_rows) * cfg.grid_cols);
    for (int r = 0; r < cfg.grid_rows; ++r)
        for (int c = 0; c < cfg.grid_cols; ++c)
            cells.push_back({cfg.lat0 + r, cfg.lon0 + c});
    return GridIndex(std::move(cells));
}

std::vector<DailyField> synth_rainfall(const SynthConfig& cfg) {
    validate(cfg);
    const std::size_t C = static_cast<std::size_t>(cfg.grid_rows) * cfg.grid_cols;
    Rng rng(cfg.seed);
    std::vector<DailyField> out;

    for (int year = cfg.first_year; year < cfg.first_year + cfg.n_years; ++year) {
        // one season: the listed months in calendar order
        std::vector<Date> dates;
        for (int m : cfg.months)
            for (unsigned d = 1; d <= days_in_month(year, static_cast<unsigned>(m)); ++d)
                dates.emplace_back(year, static_cast<unsigned>(m), d);

        const std::size_t len = dates.size();
        std::vector<std::vector<double>> season(len, std::vector<double>(C, 0.0));

        if (cfg.kind == SynthKind::ar_advect) {
            std::vector<double> state(C, cfg.base_mm);
            for (std::size_t t = 0; t < len; ++t) {
                double mean_anom = 0.0;
                for (double s : state) mean_anom += s - cfg.base_mm;
                mean_anom /= static_cast<double>(C);
                const double g_shared = rng.next_gaussian();
                const double p_burst =
                    mean_anom > cfg.burst_trigger_mm ? cfg.burst_rate_wet : cfg.burst_rate;
                const bool burst_day = rng.next_unit() < p_burst;
                const double burst_amp = cfg.burst_mm * (0.5 + rng.next_unit());
                std::vector<double> next(C);
                std::vector<double> emitted(C);
                for (std::size_t c = 0; c < C; ++c) {
                    const double g = rng.next_gaussian();
                    const bool has_west = (c % static_cast<std::size_t>(cfg.grid_cols)) != 0;
                    // calm inflow at the western boundary keeps the recurrence stable
                    const double west = has_west ? state[c - 1] : cfg.base_mm;
                    const double v = cfg.base_mm + cfg.ar_coeff * (state[c] - cfg.base_mm) +
                                     cfg.advect * (west - cfg.base_mm) +
                                     cfg.shared_sigma * g_shared + cfg.noise_sigma * g;
                    next[c] = std::max(0.0, v);
                    // bursts are transient: they show up in the day's rainfall but
                    // not in the state the next day evolves from
                    emitted[c] = std::max(0.0, v + (burst_day ? burst_amp : 0.0));
                }
                state = std::move(next);
                season[t] = std::move(emitted);
            }
        } else if (cfg.kind == SynthKind::planted_lag) {
            const std::size_t lag = static_cast<std::size_t>(cfg.planted_lag);
            const double a = std::min(0.95, std::max(0.0, cfg.planted_weight));
            for (std::size_t t = 0; t < len; ++t) {
                // bursts enter the echoing state here, so they recur every
                // planted_lag days with weight a: a quasi-periodic wet cycle
                const bool burst_day = rng.next_unit() < cfg.burst_rate;
                const double burst_amp = cfg.burst_mm * (0.5 + rng.next_unit());
                for (std::size_t c = 0; c < C; ++c) {
                    const double n = cfg.noise_sigma * std::fabs(rng.next_gaussian());
                    double v = t >= lag ? a * season[t - lag][c] + n : cfg.base_mm + n;
                    if (burst_day)
                        v += burst_amp;
                    season[t][c] = v;
                }
            }
        } else {
            for (std::size_t t = 0; t < len; ++t)
                for (std::size_t c = 0; c < C; ++c)
                    season[t][c] = cfg.base_mm + cfg.noise_sigma * std::fabs(rng.next_gaussian());
        }

        for (std::size_t t = 0; t < len; ++t)
            out.push_back({dates[t], std::move(season[t]), std::vector<bool>(C, true)});
    }
    return out;
}

GridIndex synth_nwp_grid(const GridIndex& obs_grid) {
    std::vector<LatLon> cells;
    cells.reserve(obs_grid.count());
    for (const auto& c : obs_grid.cells())
        cells.push_back(unalign_nwp(c));
    return GridIndex(std::move(cells));
}

std::vector<ForecastField> synth_nwp(const std::vector<DailyField>& obs,
                                     const GridIndex& obs_grid, const GridIndex& nwp_grid,
                                     const SynthNwpConfig& cfg) {
    if (cfg.lead_days != 1 && cfg.lead_days != 3)
        throw ConfigError("lead_days must be 1 or 3");
    if (cfg.coverage <= 0.0 || cfg.coverage > 1.0)
        throw ConfigError("coverage must lie in (0, 1]");
    if (cfg.noise_sigma < 0.0)
        throw ConfigError("noise_sigma must be nonnegative");

    const std::size_t K = nwp_grid.count();
    std::vector<std::size_t> aligned_to(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto c = obs_grid.find(align_nwp(nwp_grid.cell(k)));
        if (!c)
            throw DataError("forecast cell " + std::to_string(k) +
                            " does not align onto any observation cell");
        aligned_to[k] = *c;
    }

    Rng cover_rng(cfg.seed);
    Rng noise_rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
    FieldIndex index(obs);
    std::vector<ForecastField> out;
    for (const auto& f : obs) {
        if (!cfg.years.contains(f.date.year()))
            continue;
        const double u = cover_rng.next_unit();
        if (u >= cfg.coverage)
            continue;
        const auto realized = realized_target(index, f.date, cfg.lead_days);
        if (!realized)
            continue;
        ForecastField fc{f.date, cfg.lead_days, std::vector<double>(K, 0.0),
                         std::vector<bool>(K, false)};
        for (std::size_t k = 0; k < K; ++k) {
            const double g = noise_rng.next_gaussian();
            const std::size_t c = aligned_to[k];
            if (!realized->present[c])
                continue;
            fc.values[k] = std::max(0.0, realized->values[c] + cfg.noise_sigma * g);
            fc.present[k] = true;
        }
        out.push_back(std::move(fc));
    }
    return out;
}

} // namespace monsoon
