#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "monsoon/errors.hpp"
#include "monsoon/metrics.hpp"
#include "monsoon/synth.hpp"

using namespace monsoon;

namespace {

SynthConfig tiny(SynthKind kind) {
    SynthConfig cfg;
    cfg.kind = kind;
    cfg.grid_rows = 2;
    cfg.grid_cols = 3;
    cfg.n_years = 2;
    return cfg;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

TEST_CASE("kind names round-trip") {
    for (auto k : {SynthKind::ar_advect, SynthKind::planted_lag, SynthKind::white_noise})
        CHECK(synth_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(synth_kind_from_string("pink_noise"), ConfigError);
}

TEST_CASE("synthetic grid walks longitude fastest") {
    const auto grid = synth_grid(tiny(SynthKind::white_noise));
    REQUIRE(grid.count() == 6);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) {
            const auto& cell = grid.cell(static_cast<std::size_t>(r * 3 + c));
            CHECK(cell.lat_deg == 10.5 + r);
            CHECK(cell.lon_deg == 70.5 + c);
        }
}

TEST_CASE("season calendar covers the configured months") {
    auto cfg = tiny(SynthKind::white_noise);
    const auto fields = synth_rainfall(cfg);
    // June through September is 122 days, two years of them
    REQUIRE(fields.size() == 2 * 122);
    CHECK(fields.front().date == Date(2000, 6, 1));
    CHECK(fields[121].date == Date(2000, 9, 30));
    CHECK(fields[122].date == Date(2001, 6, 1));
    for (const auto& f : fields) {
        CHECK(cfg.months.count(static_cast<int>(f.date.month())) == 1);
        CHECK(f.fully_present());
        CHECK(f.values.size() == 6);
        for (double v : f.values) CHECK(v >= 0.0);
    }
    for (std::size_t i = 1; i < fields.size(); ++i)
        CHECK(fields[i - 1].date < fields[i].date);
}

TEST_CASE("same config reproduces the same series") {
    for (auto kind : {SynthKind::ar_advect, SynthKind::planted_lag, SynthKind::white_noise}) {
        const auto a = synth_rainfall(tiny(kind));
        const auto b = synth_rainfall(tiny(kind));
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i].values == b[i].values);
    }
    auto other = tiny(SynthKind::ar_advect);
    other.seed = 2;
    CHECK(synth_rainfall(tiny(SynthKind::ar_advect))[5].values != synth_rainfall(other)[5].values);
}

TEST_CASE("default generator stays in a plausible rainfall range") {
    const auto fields = synth_rainfall(SynthConfig{});
    double max_v = 0.0, total = 0.0;
    std::size_t n = 0;
    for (const auto& f : fields) {
        for (double v : f.values) {
            max_v = std::max(max_v, v);
            total += v;
            ++n;
        }
    }
    // the advection chain must not amplify; bursts top out well under 100 mm
    CHECK(max_v < 200.0);
    CHECK(total / static_cast<double>(n) > 4.0);
    CHECK(total / static_cast<double>(n) < 20.0);
}

TEST_CASE("config validation rejects unstable or nonsense settings") {
    auto cfg = tiny(SynthKind::ar_advect);
    cfg.ar_coeff = 0.8;
    cfg.advect = 0.3; // row sum 1.1 amplifies down the chain
    CHECK_THROWS_AS(synth_rainfall(cfg), ConfigError);

    cfg = tiny(SynthKind::ar_advect);
    cfg.ar_coeff = 1.0;
    CHECK_THROWS_AS(synth_rainfall(cfg), ConfigError);

    cfg = tiny(SynthKind::ar_advect);
    cfg.months.clear();
    CHECK_THROWS_AS(synth_rainfall(cfg), ConfigError);

    cfg = tiny(SynthKind::ar_advect);
    cfg.burst_rate_wet = 1.5;
    CHECK_THROWS_AS(synth_rainfall(cfg), ConfigError);

    cfg = tiny(SynthKind::planted_lag);
    cfg.planted_lag = 0;
    CHECK_THROWS_AS(synth_rainfall(cfg), ConfigError);

    cfg = tiny(SynthKind::white_noise);
    cfg.grid_rows = 0;
    CHECK_THROWS_AS(synth_grid(cfg), ConfigError);
}

TEST_CASE("white noise has no day-to-day memory") {
    auto cfg = tiny(SynthKind::white_noise);
    cfg.grid_rows = cfg.grid_cols = 1;
    cfg.n_years = 4;
    const auto fields = synth_rainfall(cfg);

    std::vector<double> x;
    for (const auto& f : fields) x.push_back(f.values[0]);

    // half-normal noise: mean is base + sigma * sqrt(2/pi)
    const double expect = cfg.base_mm + cfg.noise_sigma * std::sqrt(2.0 / 3.14159265358979312);
    CHECK(mean_of(x) == doctest::Approx(expect).epsilon(0.02));

    std::vector<double> head(x.begin(), x.end() - 1), tail(x.begin() + 1, x.end());
    const auto r = correlation(head, tail);
    REQUIRE(r.has_value());
    CHECK(std::fabs(*r) < 0.15);
}

TEST_CASE("planted echo is visible at its lag and not at shorter ones") {
    SynthConfig cfg;
    cfg.kind = SynthKind::planted_lag;
    cfg.grid_rows = cfg.grid_cols = 1;
    cfg.n_years = 6;
    cfg.planted_lag = 10;
    cfg.burst_rate = 0.08;
    cfg.burst_mm = 20.0;
    const auto fields = synth_rainfall(cfg);

    auto lag_corr = [&](std::size_t lag) {
        std::vector<double> a, b;
        for (std::size_t y = 0; y < static_cast<std::size_t>(cfg.n_years); ++y) {
            // stay inside one season so the echo chain is unbroken
            for (std::size_t t = lag; t < 122; ++t) {
                a.push_back(fields[y * 122 + t - lag].values[0]);
                b.push_back(fields[y * 122 + t].values[0]);
            }
        }
        return *correlation(a, b);
    };
    CHECK(lag_corr(10) > 0.55);
    CHECK(lag_corr(10) > lag_corr(3) + 0.3);
}

TEST_CASE("persistent wet and dry spells emerge from the shared innovation") {
    SynthConfig cfg; // defaults: 20x20, shared regional factor dominates
    cfg.n_years = 2;
    const auto fields = synth_rainfall(cfg);

    // day-to-day correlation of the regional mean should look like the AR
    // coefficient, far above anything a memoryless field would show
    std::vector<double> m;
    for (const auto& f : fields) m.push_back(mean_of(f.values));
    std::vector<double> head, tail;
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t t = 1; t < 122; ++t) {
            head.push_back(m[y * 122 + t - 1]);
            tail.push_back(m[y * 122 + t]);
        }
    const auto r = correlation(head, tail);
    REQUIRE(r.has_value());
    CHECK(*r > 0.45);
}

TEST_CASE("forecast mesh aligns cell-for-cell") {
    const auto obs = synth_grid(tiny(SynthKind::white_noise));
    const auto nwp = synth_nwp_grid(obs);
    REQUIRE(nwp.count() == obs.count());
    for (std::size_t i = 0; i < nwp.count(); ++i) {
        CHECK(is_integer_convention(nwp.cell(i)));
        const auto back = align_nwp(nwp.cell(i));
        CHECK(back.lat_deg == obs.cell(i).lat_deg);
        CHECK(back.lon_deg == obs.cell(i).lon_deg);
    }
}

TEST_CASE("noise-free synthetic forecasts equal the realised target") {
    auto cfg = tiny(SynthKind::ar_advect);
    const auto grid = synth_grid(cfg);
    const auto nwp_grid = synth_nwp_grid(grid);
    const auto obs = synth_rainfall(cfg);

    SynthNwpConfig nc;
    nc.lead_days = 1;
    nc.years = {2000, 2001};
    const auto fcst = synth_nwp(obs, grid, nwp_grid, nc);

    // every day except each season's last can be scored at lead 1
    REQUIRE(fcst.size() == 2 * 121);
    FieldIndex index(obs);
    for (const auto& f : fcst) {
        const auto realized = realized_target(index, f.issue_date, 1);
        REQUIRE(realized.has_value());
        CHECK(f.values == realized->values);
        CHECK(f.lead_days == 1);
    }

    SynthNwpConfig nc3 = nc;
    nc3.lead_days = 3;
    const auto fcst3 = synth_nwp(obs, grid, nwp_grid, nc3);
    REQUIRE(fcst3.size() == 2 * 119);
    const auto realized3 = realized_target(index, fcst3.front().issue_date, 3);
    CHECK(fcst3.front().values == realized3->values);
}

TEST_CASE("forecast year filter and coverage subsetting") {
    auto cfg = tiny(SynthKind::ar_advect);
    const auto grid = synth_grid(cfg);
    const auto nwp_grid = synth_nwp_grid(grid);
    const auto obs = synth_rainfall(cfg);

    SynthNwpConfig one_year;
    one_year.years = {2001, 2001};
    const auto fcst = synth_nwp(obs, grid, nwp_grid, one_year);
    REQUIRE(!fcst.empty());
    for (const auto& f : fcst) CHECK(f.issue_date.year() == 2001);

    SynthNwpConfig holes = one_year;
    holes.coverage = 0.5;
    const auto sparse = synth_nwp(obs, grid, nwp_grid, holes);
    CHECK(sparse.size() < fcst.size());
    CHECK(!sparse.empty());
    const auto sparse_again = synth_nwp(obs, grid, nwp_grid, holes);
    REQUIRE(sparse_again.size() == sparse.size());
    for (std::size_t i = 0; i < sparse.size(); ++i)
        CHECK(sparse_again[i].issue_date == sparse[i].issue_date);
}

TEST_CASE("forecast noise perturbs but never goes negative") {
    auto cfg = tiny(SynthKind::ar_advect);
    const auto grid = synth_grid(cfg);
    const auto nwp_grid = synth_nwp_grid(grid);
    const auto obs = synth_rainfall(cfg);

    SynthNwpConfig noisy;
    noisy.noise_sigma = 5.0;
    const auto fcst = synth_nwp(obs, grid, nwp_grid, noisy);
    REQUIRE(!fcst.empty());
    FieldIndex index(obs);
    bool any_differs = false;
    for (const auto& f : fcst) {
        const auto realized = realized_target(index, f.issue_date, 1);
        for (std::size_t k = 0; k < f.values.size(); ++k) {
            CHECK(f.values[k] >= 0.0);
            if (f.values[k] != realized->values[k]) any_differs = true;
        }
    }
    CHECK(any_differs);
}

TEST_CASE("forecast generator validates its config") {
    auto cfg = tiny(SynthKind::ar_advect);
    const auto grid = synth_grid(cfg);
    const auto nwp_grid = synth_nwp_grid(grid);
    const auto obs = synth_rainfall(cfg);

    SynthNwpConfig bad;
    bad.lead_days = 2;
    CHECK_THROWS_AS(synth_nwp(obs, grid, nwp_grid, bad), ConfigError);
    bad = {};
    bad.coverage = 0.0;
    CHECK_THROWS_AS(synth_nwp(obs, grid, nwp_grid, bad), ConfigError);
    bad = {};
    bad.noise_sigma = -1.0;
    CHECK_THROWS_AS(synth_nwp(obs, grid, nwp_grid, bad), ConfigError);
}
