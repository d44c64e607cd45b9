#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "monsoon/data.hpp"
#include "monsoon/geo.hpp"

namespace monsoon {

enum class SynthKind { ar_advect, planted_lag, white_noise };

SynthKind synth_kind_from_string(const std::string& s);
std::string to_string(SynthKind k);

// Seeded rainfall generator on a rectangular half-degree mesh. ar_advect runs
// a per-cell AR(1) with a westerly advection term and occasional heavy
// bursts; planted_lag emits half-normal noise plus an echo of the noise from
// `planted_lag` days earlier (so contexts shorter than the lag cannot see the
// driver); white_noise is the memoryless control.
struct SynthConfig {
    SynthKind kind = SynthKind::ar_advect;
    int grid_rows = 20;    // latitude steps
    int grid_cols = 20;    // longitude steps
    double lat0 = 10.5;    // south-west cell centre
    double lon0 = 70.5;
    int first_year = 2000;
    int n_years = 15;
    std::set<int> months{6, 7, 8, 9};
    double ar_coeff = 0.8;
    double advect = 0.1;
    double shared_sigma = 3.0; // region-wide innovation scale, mm (wet/dry spells)
    double noise_sigma = 0.5;  // per-cell innovation scale, mm
    double base_mm = 8.0;      // seasonal mean level
    // Region-wide one-day bursts ride on top of the AR state without entering it,
    // and fire more often while the region runs wetter than burst_trigger_mm above
    // base. Transience plus priming is what separates a trained forecaster from
    // persistence on this fixture.
    double burst_rate = 0.01;     // per-day burst chance in a dry spell
    double burst_rate_wet = 0.15; // per-day burst chance in a wet spell
    double burst_trigger_mm = 4.0; // mean anomaly that switches the regime
    double burst_mm = 25.0;        // burst magnitude scale
    int planted_lag = 10;
    double planted_weight = 0.85; // lag-echo coefficient, clamped to [0, 0.95]
    std::uint64_t seed = 1;
};

GridIndex synth_grid(const SynthConfig& cfg);
std::vector<DailyField> synth_rainfall(const SynthConfig& cfg);

// Companion integer-convention mesh that aligns cell-for-cell onto the
// half-degree grid: (lat - 0.5, lon + 0.5) per cell.
GridIndex synth_nwp_grid(const GridIndex& obs_grid);

// Synthetic forecast file content: per issue date in `years` (and the obs
// months), each forecast cell carries the realised observation of the obs
// cell it aligns onto, plus centred Gaussian noise of scale noise_sigma,
// clamped at 0. coverage < 1 drops a seeded random subset of days.
struct SynthNwpConfig {
    int lead_days = 1;
    YearRange years{2000, 2014};
    double noise_sigma = 0.0;
    double coverage = 1.0;
    std::uint64_t seed = 7;
};

std::vector<ForecastField> synth_nwp(const std::vector<DailyField>& obs,
                                     const GridIndex& obs_grid, const GridIndex& nwp_grid,
                                     const SynthNwpConfig& cfg);

} // namespace monsoon
