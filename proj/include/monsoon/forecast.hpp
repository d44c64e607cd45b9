#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "monsoon/data.hpp"
#include "monsoon/geo.hpp"
#include "monsoon/nn.hpp"
#include "monsoon/parallel.hpp"

namespace monsoon {

enum class PipelineKind { dl_hd, nwp, nwp_plus, nwp_dlhd, persistence };

PipelineKind pipeline_from_string(const std::string& s);
std::string to_string(PipelineKind k);

// Naive baseline: the forecast issued on `issue_date` is the field observed
// that day, for both the 1-day amount and the 3-day mean.
ForecastField persistence_forecast(const std::vector<DailyField>& fields, Date issue_date,
                                   int lead_days);

// Persistence forecasts for every observed day whose year and month fall in
// the given ranges.
std::vector<ForecastField> persistence_forecasts(const std::vector<DailyField>& fields,
                                                 YearRange years, const std::set<int>& months,
                                                 int lead_days);

// Keep only fields at the given lead.
std::vector<ForecastField> filter_lead(const std::vector<ForecastField>& fields, int lead_days);

// Layer chains. The rainfall predictor reads the context as `d` timesteps of
// grid-wide features, then passes the final hidden state through an identity
// dense chain into a sigmoid head with two blocks: cells 0..G-1 predict the
// next-day amount, cells G..2G-1 the 3-day mean.
std::vector<nn::LayerSpec> dl_hd_layers(std::size_t grid_count, const std::vector<int>& hidden);
// ReLU chain ending in a single sigmoid unit, for the candidate-pooling nets.
std::vector<nn::LayerSpec> fusion_layers(int in_dim, const std::vector<int>& hidden);

struct DlHdConfig {
    int context_days = 12;
    int ensemble_runs = 10;
    std::uint64_t base_seed = 1;
    std::vector<int> hidden = {32, 16}; // LSTM hidden size, then dense widths
    nn::TrainConfig train;              // batch/epochs/patience/adam/loss exponents
    double cap_mm = 500.0; // scales context inputs into [0,1] and the sigmoid head back to mm
};

// Small sizes that train in seconds on synthetic fixtures.
DlHdConfig desk_dl_hd();
// The published operating point: 400-100-50 stack, batch 64, 300 epochs, patience 20.
DlHdConfig paper_dl_hd();

struct DlHdResult {
    std::vector<ForecastField> lead1;
    std::vector<ForecastField> lead3;
    std::vector<nn::ModelParams> models;      // one per ensemble member
    std::vector<nn::TrainHistory> histories;  // parallel to models
    bool empty_warning = false;
};

// Trains `ensemble_runs` seeded models (seeds base_seed..base_seed+k-1) on the
// train windows and emits the ensemble-mean forecast for every test window.
// Empty train or test windows produce an empty result with the warning flag.
DlHdResult run_dl_hd(const WindowSet& windows, std::size_t grid_count, const DlHdConfig& cfg,
                     Exec exec = Exec::parallel);

// Up to five source-grid ordinals per target cell (centre, N, S, E, W at one
// degree, after aligning the source mesh); absent slots are structural gaps.
std::vector<std::array<std::optional<std::size_t>, 5>> stencil_map(const GridIndex& obs_grid,
                                                                   const GridIndex& fcst_grid);

// For each target cell, picks the stencil candidate whose forecast series has
// the lowest peak-biased error against the realised observations over the
// calibration years. Ties break to the earlier stencil slot.
MatchTable build_match_table(const std::vector<DailyField>& obs,
                             const std::vector<ForecastField>& fcst, const GridIndex& obs_grid,
                             const GridIndex& fcst_grid, YearRange calib_years,
                             LossExponents exp = {}, Exec exec = Exec::parallel);

// Best-match passthrough: copies the chosen candidate's value for every date
// present in both series; a candidate absent on a date marks the cell
// not-present that day.
std::vector<ForecastField> run_nwp(const std::vector<DailyField>& obs,
                                   const std::vector<ForecastField>& fcst,
                                   const GridIndex& obs_grid, const MatchTable& match);

struct FusionConfig {
    std::vector<int> hidden = {32, 16}; // dense widths before the 1-unit head
    nn::TrainConfig train;
    double cap_mm = 500.0;
    YearRange train_years{2011, 2020};
    YearRange test_years{2021, 2022};
    std::uint64_t base_seed = 1;
    int ensemble_runs = 1;
    bool shared_net = false; // one net across cells instead of one per cell
};

FusionConfig desk_fusion();

// Per-cell nets mapping the five stencil forecasts (value + presence flag
// each) to the realised observation; trained on train_years, predicted on
// test_years. Missing candidates enter as value 0 with flag 0.
std::vector<ForecastField> run_nwp_plus(const std::vector<DailyField>& obs,
                                        const std::vector<ForecastField>& fcst,
                                        const GridIndex& obs_grid, const GridIndex& fcst_grid,
                                        const FusionConfig& cfg, Exec exec = Exec::parallel);

// As run_nwp_plus with a sixth input: the rainfall predictor's own forecast
// for the same issue date. Every fusion date must have one; missing dates are
// an alignment error listing the dates.
std::vector<ForecastField> run_nwp_dlhd(const std::vector<DailyField>& obs,
                                        const std::vector<ForecastField>& fcst,
                                        const std::vector<ForecastField>& dlhd,
                                        const GridIndex& obs_grid, const GridIndex& fcst_grid,
                                        const FusionConfig& cfg, Exec exec = Exec::parallel);

struct LagSweepPoint {
    int context_days = 0;
    std::vector<double> seed_losses; // aggregate test loss of each seeded run
    double mean_loss = 0.0;
    double stderr_loss = 0.0; // sample s.e. of the mean over seeds
};

// Context-length sweep: per d, trains ensemble_runs single models with the
// same seed list and scores each on the test windows at lead 1.
std::vector<LagSweepPoint> lag_sweep(const std::vector<DailyField>& fields, const GridIndex& grid,
                                     std::span<const int> d_values, const SplitSpec& split,
                                     const DlHdConfig& cfg, Exec exec = Exec::parallel);

} // namespace monsoon
