#include "monsoon/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "monsoon/errors.hpp"
#include "monsoon/metrics.hpp"

namespace monsoon {

PipelineKind pipeline_from_string(const std::string& s) {
    if (s == "dl_hd") return PipelineKind::dl_hd;
    if (s == "nwp") return PipelineKind::nwp;
    if (s == "nwp_plus") return PipelineKind::nwp_plus;
    if (s == "nwp_dlhd") return PipelineKind::nwp_dlhd;
    if (s == "persistence") return PipelineKind::persistence;
    throw ConfigError("unknown pipeline '" + s + "'");
}

std::string to_string(PipelineKind k) {
    switch (k) {
    case PipelineKind::dl_hd: return "dl_hd";
    case PipelineKind::nwp: return "nwp";
    case PipelineKind::nwp_plus: return "nwp_plus";
    case PipelineKind::nwp_dlhd: return "nwp_dlhd";
    case PipelineKind::persistence: return "persistence";
    }
    return "dl_hd";
}

namespace {

void check_lead(int lead_days) {
    if (lead_days != 1 && lead_days != 3)
        throw ConfigError("lead_days must be 1 or 3, got " + std::to_string(lead_days));
}

int uniform_lead(const std::vector<ForecastField>& fields) {
    if (fields.empty())
        throw DataError("forecast list is empty");
    const int lead = fields[0].lead_days;
    for (const auto& f : fields)
        if (f.lead_days != lead)
            throw ConfigError("forecast list mixes lead_days " + std::to_string(lead) + " and " +
                              std::to_string(f.lead_days));
    return lead;
}

} // namespace

ForecastField persistence_forecast(const std::vector<DailyField>& fields, Date issue_date,
                                   int lead_days) {
    check_lead(lead_days);
    for (const auto& f : fields)
        if (f.date == issue_date)
            return {issue_date, lead_days, f.values, f.present};
    throw DataError("no observation on " + issue_date.iso() + " to persist");
}

std::vector<ForecastField> persistence_forecasts(const std::vector<DailyField>& fields,
                                                 YearRange years, const std::set<int>& months,
                                                 int lead_days) {
    check_lead(lead_days);
    std::vector<ForecastField> out;
    for (const auto& f : fields)
        if (years.contains(f.date.year()) && months.contains(static_cast<int>(f.date.month())))
            out.push_back({f.date, lead_days, f.values, f.present});
    return out;
}

std::vector<ForecastField> filter_lead(const std::vector<ForecastField>& fields, int lead_days) {
    check_lead(lead_days);
    std::vector<ForecastField> out;
    for (const auto& f : fields)
        if (f.lead_days == lead_days)
            out.push_back(f);
    return out;
}

std::vector<nn::LayerSpec> dl_hd_layers(std::size_t grid_count, const std::vector<int>& hidden) {
    if (grid_count == 0)
        throw ConfigError("grid is empty");
    if (hidden.empty())
        throw ConfigError("at least one hidden width is required");
    for (int h : hidden)
        if (h < 1)
            throw ConfigError("hidden widths must be positive, got " + std::to_string(h));
    const int G = static_cast<int>(grid_count);
    std::vector<nn::LayerSpec> specs;
    specs.push_back(nn::lstm(G, hidden[0]));
    for (std::size_t i = 1; i < hidden.size(); ++i)
        specs.push_back(nn::dense(hidden[i - 1], hidden[i], nn::Activation::identity));
    specs.push_back(nn::dense(hidden.back(), 2 * G, nn::Activation::sigmoid));
    return specs;
}

std::vector<nn::LayerSpec> fusion_layers(int in_dim, const std::vector<int>& hidden) {
    if (in_dim < 1)
        throw ConfigError("fusion input width must be positive");
    if (hidden.empty())
        throw ConfigError("at least one hidden width is required");
    for (int h : hidden)
        if (h < 1)
            throw ConfigError("hidden widths must be positive, got " + std::to_string(h));
    std::vector<nn::LayerSpec> specs;
    int prev = in_dim;
    for (int h : hidden) {
        specs.push_back(nn::dense(prev, h, nn::Activation::relu));
        prev = h;
    }
    specs.push_back(nn::dense(prev, 1, nn::Activation::sigmoid));
    return specs;
}

DlHdConfig desk_dl_hd() {
    DlHdConfig cfg;
    cfg.context_days = 8;
    cfg.ensemble_runs = 3;
    cfg.hidden = {32, 16};
    cfg.train.batch_size = 32;
    cfg.train.max_epochs = 60;
    cfg.train.early_stop_patience = 8;
    cfg.train.adam.step_size = 3e-3;
    cfg.cap_mm = 100.0; // desk fixtures stay under 100 mm/day
    return cfg;
}

DlHdConfig paper_dl_hd() {
    DlHdConfig cfg;
    cfg.context_days = 12;
    cfg.ensemble_runs = 10;
    cfg.hidden = {400, 100, 50};
    cfg.train.batch_size = 64;
    cfg.train.max_epochs = 300;
    cfg.train.early_stop_patience = 20;
    return cfg;
}

FusionConfig desk_fusion() {
    FusionConfig cfg;
    cfg.hidden = {32, 16};
    cfg.train.batch_size = 24;
    cfg.train.max_epochs = 100;
    cfg.train.early_stop_patience = 10;
    cfg.cap_mm = 100.0; // desk fixtures stay under 100 mm/day
    return cfg;
}

namespace {

// (cells x d) mm context -> (d x cells) unit-scaled input; targets stay in mm.
nn::TrainSample window_to_sample(const WindowSample& w, double cap_mm) {
    const std::size_t G = w.context.rows();
    const std::size_t d = w.context.cols();
    Tensor2 input(d, G);
    for (std::size_t t = 0; t < d; ++t)
        for (std::size_t c = 0; c < G; ++c)
            input(t, c) = normalize(w.context(c, t), cap_mm);
    std::vector<double> target;
    target.reserve(2 * G);
    target.insert(target.end(), w.target1.begin(), w.target1.end());
    target.insert(target.end(), w.target3.begin(), w.target3.end());
    return {std::move(input), std::move(target)};
}

std::vector<nn::TrainSample> windows_to_samples(const std::vector<WindowSample>& windows,
                                                double cap_mm) {
    std::vector<nn::TrainSample> out;
    out.reserve(windows.size());
    for (const auto& w : windows)
        out.push_back(window_to_sample(w, cap_mm));
    return out;
}

} // namespace

DlHdResult run_dl_hd(const WindowSet& windows, std::size_t grid_count, const DlHdConfig& cfg,
                     Exec exec) {
    if (cfg.ensemble_runs < 1)
        throw ConfigError("ensemble_runs must be at least 1");
    DlHdResult res;
    if (windows.train.empty() || windows.test.empty()) {
        res.empty_warning = true;
        return res;
    }
    if (windows.train[0].context.rows() != grid_count)
        throw ShapeError("windows cover " + std::to_string(windows.train[0].context.rows()) +
                         " cells, grid has " + std::to_string(grid_count));

    const auto specs = dl_hd_layers(grid_count, cfg.hidden);
    nn::TrainConfig tcfg = cfg.train;
    tcfg.output_cap_mm = cfg.cap_mm;

    const auto train_samples = windows_to_samples(windows.train, cfg.cap_mm);
    const auto test_samples = windows_to_samples(windows.test, cfg.cap_mm);

    std::vector<std::vector<std::vector<double>>> member_preds;
    for (int r = 0; r < cfg.ensemble_runs; ++r) {
        auto tr = nn::train(train_samples, specs, tcfg, cfg.base_seed + static_cast<std::uint64_t>(r),
                            exec);
        member_preds.push_back(nn::predict(tr.params, test_samples, cfg.cap_mm, exec));
        res.models.push_back(std::move(tr.params));
        res.histories.push_back(std::move(tr.history));
    }

    const std::size_t G = grid_count;
    for (std::size_t i = 0; i < windows.test.size(); ++i) {
        std::vector<std::vector<double>> members;
        members.reserve(member_preds.size());
        for (const auto& mp : member_preds)
            members.push_back(mp[i]);
        const auto mean = nn::ensemble_average(members);
        const Date issue = windows.test[i].target_date.plus_days(-1);
        ForecastField f1{issue, 1, std::vector<double>(mean.begin(), mean.begin() + G),
                         std::vector<bool>(G, true)};
        ForecastField f3{issue, 3, std::vector<double>(mean.begin() + G, mean.end()),
                         std::vector<bool>(G, true)};
        res.lead1.push_back(std::move(f1));
        res.lead3.push_back(std::move(f3));
    }
    return res;
}

std::vector<std::array<std::optional<std::size_t>, 5>> stencil_map(const GridIndex& obs_grid,
                                                                   const GridIndex& fcst_grid) {
    const GridIndex aligned = fcst_grid.aligned();
    static constexpr double kOffsets[5][2] = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    std::vector<std::array<std::optional<std::size_t>, 5>> slots(obs_grid.count());
    for (std::size_t c = 0; c < obs_grid.count(); ++c) {
        const LatLon t = obs_grid.cell(c);
        for (int j = 0; j < 5; ++j)
            slots[c][j] = aligned.find({t.lat_deg + kOffsets[j][0], t.lon_deg + kOffsets[j][1]});
    }
    return slots;
}

MatchTable build_match_table(const std::vector<DailyField>& obs,
                             const std::vector<ForecastField>& fcst, const GridIndex& obs_grid,
                             const GridIndex& fcst_grid, YearRange calib_years, LossExponents exp,
                             Exec exec) {
    const int lead = uniform_lead(fcst);
    const auto slots = stencil_map(obs_grid, fcst_grid);

    FieldIndex index(obs);
    struct CalDay {
        const ForecastField* fcst;
        DailyField realized;
    };
    std::vector<CalDay> days;
    for (const auto& f : fcst)
        if (calib_years.contains(f.issue_date.year()))
            if (auto r = realized_target(index, f.issue_date, lead))
                days.push_back({&f, std::move(*r)});
    if (days.empty())
        throw DataError("no calibration days with realised observations");

    const std::size_t C = obs_grid.count();
    MatchTable table;
    table.entries.resize(C);
    std::vector<std::string> cell_error(C);
    const ErrorFunctional functional = [exp](std::span<const double> pred,
                                             std::span<const double> actual) {
        return peak_biased_loss(pred, actual, exp);
    };

    for_each_index(C, exec, [&](std::size_t c) {
        std::vector<std::size_t> cand;
        for (const auto& s : slots[c])
            if (s)
                cand.push_back(*s);
        if (cand.empty()) {
            cell_error[c] = "no forecast grid candidate";
            return;
        }
        std::vector<double> target;
        std::vector<std::vector<double>> series(cand.size());
        for (const auto& day : days) {
            if (!day.realized.present[c])
                continue;
            bool all = true;
            for (std::size_t k : cand)
                if (!day.fcst->present[k]) {
                    all = false;
                    break;
                }
            if (!all)
                continue;
            target.push_back(day.realized.values[c]);
            for (std::size_t k = 0; k < cand.size(); ++k)
                series[k].push_back(day.fcst->values[cand[k]]);
        }
        if (target.empty()) {
            cell_error[c] = "no jointly present calibration day";
            return;
        }
        const BestMatch bm = best_match(target, series, functional);
        table.entries[c] = {cand[bm.candidate_index], bm.error};
    });
    for (std::size_t c = 0; c < C; ++c)
        if (!cell_error[c].empty())
            throw DataError("cell " + std::to_string(c) + ": " + cell_error[c]);
    return table;
}

std::vector<ForecastField> run_nwp(const std::vector<DailyField>& obs,
                                   const std::vector<ForecastField>& fcst,
                                   const GridIndex& obs_grid, const MatchTable& match) {
    uniform_lead(fcst);
    const std::size_t C = obs_grid.count();
    if (match.entries.size() != C)
        throw ShapeError("match table covers " + std::to_string(match.entries.size()) +
                         " cells, grid has " + std::to_string(C));
    std::vector<ForecastField> out;
    for (const auto& jd : filter_joint_days(obs, fcst)) {
        ForecastField f{jd.date, jd.fcst->lead_days, std::vector<double>(C, 0.0),
                        std::vector<bool>(C, false)};
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t s = match.entries[c].source_ordinal;
            if (jd.fcst->present[s]) {
                f.values[c] = jd.fcst->values[s];
                f.present[c] = true;
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

namespace {

struct FusionDay {
    const ForecastField* fcst = nullptr;
    const ForecastField* dlhd = nullptr; // null unless the six-input variant
    std::optional<DailyField> realized;  // needed for training days
};

// Candidate values live in the first half of the feature vector, presence
// flags in the second half, so width = 2 * (5 + dlhd).
std::vector<double> fusion_features(const FusionDay& day,
                                    const std::array<std::optional<std::size_t>, 5>& slots,
                                    std::size_t cell, double cap_mm) {
    const std::size_t half = day.dlhd ? 6 : 5;
    std::vector<double> x(2 * half, 0.0);
    for (std::size_t j = 0; j < 5; ++j)
        if (slots[j] && day.fcst->present[*slots[j]]) {
            x[j] = normalize(day.fcst->values[*slots[j]], cap_mm);
            x[half + j] = 1.0;
        }
    if (day.dlhd && day.dlhd->present[cell]) {
        x[5] = normalize(day.dlhd->values[cell], cap_mm);
        x[half + 5] = 1.0;
    }
    return x;
}

std::vector<ForecastField> run_fusion(const std::vector<DailyField>& obs,
                                      const std::vector<ForecastField>& fcst,
                                      const std::vector<ForecastField>* dlhd,
                                      const GridIndex& obs_grid, const GridIndex& fcst_grid,
                                      const FusionConfig& cfg, Exec exec) {
    if (cfg.ensemble_runs < 1)
        throw ConfigError("ensemble_runs must be at least 1");
    const int lead = uniform_lead(fcst);
    const auto slots = stencil_map(obs_grid, fcst_grid);
    const std::size_t C = obs_grid.count();
    const std::size_t in_dim = dlhd ? 12 : 10;

    std::vector<ForecastField> dlhd_lead;
    if (dlhd)
        dlhd_lead = filter_lead(*dlhd, lead);

    FieldIndex index(obs);
    std::vector<FusionDay> train_days, test_days;
    std::vector<std::string> missing_dlhd;
    for (const auto& jd : filter_joint_days(obs, fcst)) {
        const int year = jd.date.year();
        const bool in_train = cfg.train_years.contains(year);
        const bool in_test = cfg.test_years.contains(year);
        if (!in_train && !in_test)
            continue;
        FusionDay day;
        day.fcst = jd.fcst;
        if (dlhd) {
            for (const auto& df : dlhd_lead)
                if (df.issue_date == jd.date) {
                    day.dlhd = &df;
                    break;
                }
            if (!day.dlhd) {
                missing_dlhd.push_back(jd.date.iso());
                continue;
            }
        }
        if (in_train) {
            day.realized = realized_target(index, jd.date, lead);
            if (day.realized)
                train_days.push_back(day);
        } else {
            test_days.push_back(day);
        }
    }
    if (!missing_dlhd.empty()) {
        std::string list;
        const std::size_t shown = std::min<std::size_t>(missing_dlhd.size(), 20);
        for (std::size_t i = 0; i < shown; ++i)
            list += (i ? ", " : "") + missing_dlhd[i];
        if (shown < missing_dlhd.size())
            list += ", ... (" + std::to_string(missing_dlhd.size()) + " total)";
        throw DataError("no matching rainfall-predictor forecast for dates: " + list);
    }
    if (train_days.empty())
        throw ConfigError("no fusion training dates in " + std::to_string(cfg.train_years.first) +
                          "-" + std::to_string(cfg.train_years.last));

    const auto specs = fusion_layers(static_cast<int>(in_dim), cfg.hidden);
    nn::TrainConfig tcfg = cfg.train;
    tcfg.output_cap_mm = cfg.cap_mm;

    // value rows per test day, flat: day-major [d * C + c]
    std::vector<double> test_values(test_days.size() * C, 0.0);
    std::vector<char> test_present(test_days.size() * C, 0);

    auto cell_train_samples = [&](std::size_t c) {
        std::vector<nn::TrainSample> samples;
        for (const auto& day : train_days)
            if (day.realized->present[c]) {
                auto x = fusion_features(day, slots[c], c, cfg.cap_mm);
                samples.push_back({Tensor2(1, in_dim, std::move(x)), {day.realized->values[c]}});
            }
        return samples;
    };
    auto cell_test_samples = [&](std::size_t c) {
        std::vector<nn::TrainSample> samples;
        samples.reserve(test_days.size());
        for (const auto& day : test_days) {
            auto x = fusion_features(day, slots[c], c, cfg.cap_mm);
            samples.push_back({Tensor2(1, in_dim, std::move(x)), {0.0}});
        }
        return samples;
    };

    auto predict_mean = [&](std::span<const nn::TrainSample> train_s,
                            std::span<const nn::TrainSample> test_s, std::uint64_t seed_base,
                            Exec inner) {
        std::vector<std::vector<double>> members;
        for (int r = 0; r < cfg.ensemble_runs; ++r) {
            auto tr = nn::train(train_s, specs, tcfg, seed_base + static_cast<std::uint64_t>(r),
                                inner);
            const auto preds = nn::predict(tr.params, test_s, cfg.cap_mm, inner);
            std::vector<double> flatp(test_s.size());
            for (std::size_t i = 0; i < test_s.size(); ++i)
                flatp[i] = preds[i][0];
            members.push_back(std::move(flatp));
        }
        return nn::ensemble_average(members);
    };

    if (cfg.shared_net) {
        std::vector<nn::TrainSample> pooled;
        for (std::size_t c = 0; c < C; ++c) {
            auto s = cell_train_samples(c);
            std::move(s.begin(), s.end(), std::back_inserter(pooled));
        }
        if (pooled.empty())
            throw ConfigError("no fusion training samples");
        for (std::size_t c = 0; c < C; ++c) {
            const auto test_s = cell_test_samples(c);
            const auto mean = predict_mean(pooled, test_s, cfg.base_seed, exec);
            for (std::size_t d = 0; d < test_days.size(); ++d) {
                test_values[d * C + c] = mean[d];
                test_present[d * C + c] = 1;
            }
        }
    } else {
        for_each_index(C, exec, [&](std::size_t c) {
            const auto train_s = cell_train_samples(c);
            if (train_s.empty())
                return; // cell never observed in the training era: left not-present
            const auto test_s = cell_test_samples(c);
            const std::uint64_t seed =
                cfg.base_seed ^ (static_cast<std::uint64_t>(c) * 0x9e3779b97f4a7c15ULL);
            const auto mean = predict_mean(train_s, test_s, seed, Exec::serial);
            for (std::size_t d = 0; d < test_days.size(); ++d) {
                test_values[d * C + c] = mean[d];
                test_present[d * C + c] = 1;
            }
        });
    }

    std::vector<ForecastField> out;
    out.reserve(test_days.size());
    for (std::size_t d = 0; d < test_days.size(); ++d) {
        ForecastField f{test_days[d].fcst->issue_date, lead, std::vector<double>(C, 0.0),
                        std::vector<bool>(C, false)};
        for (std::size_t c = 0; c < C; ++c) {
            f.values[c] = test_values[d * C + c];
            f.present[c] = test_present[d * C + c] != 0;
        }
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace

std::vector<ForecastField> run_nwp_plus(const std::vector<DailyField>& obs,
                                        const std::vector<ForecastField>& fcst,
                                        const GridIndex& obs_grid, const GridIndex& fcst_grid,
                                        const FusionConfig& cfg, Exec exec) {
    return run_fusion(obs, fcst, nullptr, obs_grid, fcst_grid, cfg, exec);
}

std::vector<ForecastField> run_nwp_dlhd(const std::vector<DailyField>& obs,
                                        const std::vector<ForecastField>& fcst,
                                        const std::vector<ForecastField>& dlhd,
                                        const GridIndex& obs_grid, const GridIndex& fcst_grid,
                                        const FusionConfig& cfg, Exec exec) {
    return run_fusion(obs, fcst, &dlhd, obs_grid, fcst_grid, cfg, exec);
}

std::vector<LagSweepPoint> lag_sweep(const std::vector<DailyField>& fields, const GridIndex& grid,
                                     std::span<const int> d_values, const SplitSpec& split,
                                     const DlHdConfig& cfg, Exec exec) {
    if (d_values.empty())
        throw ConfigError("lag sweep needs at least one context length");
    for (int d : d_values)
        if (d < 3 || d > 20)
            throw ConfigError("context length " + std::to_string(d) + " is outside [3, 20]");
    if (cfg.ensemble_runs < 1)
        throw ConfigError("ensemble_runs must be at least 1");

    const Thresholds th = default_thresholds(1);
    std::vector<LagSweepPoint> points;
    for (int d : d_values) {
        const WindowSet windows = make_windows(fields, d, split);
        if (windows.train.empty() || windows.test.empty())
            throw DataError("context length " + std::to_string(d) +
                            " leaves no usable train/test windows");
        DlHdConfig run_cfg = cfg;
        run_cfg.context_days = d;
        run_cfg.ensemble_runs = 1;

        LagSweepPoint pt;
        pt.context_days = d;
        for (int r = 0; r < cfg.ensemble_runs; ++r) {
            run_cfg.base_seed = cfg.base_seed + static_cast<std::uint64_t>(r);
            const DlHdResult res = run_dl_hd(windows, grid.count(), run_cfg, exec);
            const SkillReport rep =
                evaluate(res.lead1, fields, grid, th, {}, cfg.train.loss_exp, exec);
            if (!rep.aggregate.loss)
                throw DataError("no scoreable cells at context length " + std::to_string(d));
            pt.seed_losses.push_back(*rep.aggregate.loss);
        }
        double mean = 0.0;
        for (double v : pt.seed_losses)
            mean += v;
        mean /= static_cast<double>(pt.seed_losses.size());
        pt.mean_loss = mean;
        if (pt.seed_losses.size() > 1) {
            double ss = 0.0;
            for (double v : pt.seed_losses)
                ss += (v - mean) * (v - mean);
            pt.stderr_loss = std::sqrt(ss / static_cast<double>(pt.seed_losses.size() - 1)) /
                             std::sqrt(static_cast<double>(pt.seed_losses.size()));
        }
        points.push_back(std::move(pt));
    }
    return points;
}

} // namespace monsoon
