#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "monsoon/config.hpp"
#include "monsoon/data.hpp"
#include "monsoon/errors.hpp"
#include "monsoon/forecast.hpp"
#include "monsoon/geo.hpp"
#include "monsoon/metrics.hpp"
#include "monsoon/nn.hpp"
#include "monsoon/parallel.hpp"
#include "monsoon/report.hpp"
#include "monsoon/synth.hpp"

namespace {

using namespace monsoon;

std::string reg_input(RunManifest& man, const std::string& path) {
    man.inputs.emplace_back(path, file_digest_hex(path));
    return path;
}

// Artifacts land under their final name only once complete: the saver writes
// to <path>.tmp which is then renamed over the target.
template <typename SaveFn>
void atomic_artifact(RunManifest& man, const std::string& path, SaveFn&& save) {
    const std::string tmp = path + ".tmp";
    save(tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw DataError("cannot move " + path + " into place: " + ec.message());
    man.outputs.push_back(path);
}

GridIndex grid_input(const Config& cfg, RunManifest& man, const std::string& key = "grid") {
    return load_grid(reg_input(man, cfg.get_str(key)));
}

std::vector<DailyField> rainfall_input(const Config& cfg, RunManifest& man,
                                       const GridIndex& grid) {
    return load_rainfall(reg_input(man, cfg.get_str("rainfall")), grid);
}

SplitSpec split_from(const Config& cfg) {
    SplitSpec s;
    s.train_years = cfg.get_year_range("train_years", s.train_years);
    s.test_years = cfg.get_year_range("test_years", s.test_years);
    const auto months = cfg.get_int_list("months", {6, 7, 8, 9});
    s.months = std::set<int>(months.begin(), months.end());
    s.validate();
    return s;
}

DlHdConfig dl_hd_from(const Config& cfg) {
    const std::string preset = cfg.get_str("preset", "desk");
    DlHdConfig d;
    if (preset == "desk")
        d = desk_dl_hd();
    else if (preset == "paper")
        d = paper_dl_hd();
    else
        throw ConfigError("unknown preset '" + preset + "' (expected desk or paper)");
    d.context_days = static_cast<int>(cfg.get_int("context_days", d.context_days));
    d.ensemble_runs = static_cast<int>(cfg.get_int("ensemble_runs", d.ensemble_runs));
    if (cfg.has("hidden")) d.hidden = cfg.get_int_list("hidden");
    d.base_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    d.cap_mm = cfg.get_real("cap_mm", d.cap_mm);
    d.train.batch_size = static_cast<int>(cfg.get_int("batch_size", d.train.batch_size));
    d.train.max_epochs = static_cast<int>(cfg.get_int("max_epochs", d.train.max_epochs));
    d.train.early_stop_patience =
        static_cast<int>(cfg.get_int("patience", d.train.early_stop_patience));
    d.train.adam.step_size = cfg.get_real("learning_rate", d.train.adam.step_size);
    d.train.validation_fraction =
        cfg.get_real("validation_fraction", d.train.validation_fraction);
    return d;
}

FusionConfig fusion_from(const Config& cfg) {
    FusionConfig f = desk_fusion();
    if (cfg.has("fusion_hidden")) f.hidden = cfg.get_int_list("fusion_hidden");
    f.train.batch_size = static_cast<int>(cfg.get_int("fusion_batch_size", f.train.batch_size));
    f.train.max_epochs = static_cast<int>(cfg.get_int("fusion_max_epochs", f.train.max_epochs));
    f.train.early_stop_patience =
        static_cast<int>(cfg.get_int("fusion_patience", f.train.early_stop_patience));
    f.train.adam.step_size = cfg.get_real("fusion_learning_rate", f.train.adam.step_size);
    f.cap_mm = cfg.get_real("cap_mm", f.cap_mm);
    f.train_years = cfg.get_year_range("fusion_train_years", f.train_years);
    f.test_years = cfg.get_year_range("fusion_test_years", f.test_years);
    f.base_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    f.ensemble_runs = static_cast<int>(cfg.get_int("fusion_runs", f.ensemble_runs));
    f.shared_net = cfg.get_bool("shared_net", f.shared_net);
    return f;
}

std::vector<std::string> split_names(const std::string& raw) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const auto comma = raw.find(',', pos);
        const auto end = comma == std::string::npos ? raw.size() : comma;
        auto item = raw.substr(pos, end - pos);
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string slug(const std::string& name) {
    std::string out;
    for (char ch : name) {
        if (std::isalnum(static_cast<unsigned char>(ch)))
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        else if (!out.empty() && out.back() != '_')
            out += '_';
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? "cell" : out;
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

void print_aggregate(const SkillReport& rep) {
    const auto& a = rep.aggregate;
    std::cout << "lead " << rep.lead_days << ": cells " << a.n_cells << ", days " << a.n_days
              << ", loss " << fmt_opt(a.loss) << ", hrp% " << fmt_opt(a.hrp_pct) << ", far% "
              << fmt_opt(a.far_pct) << ", cc " << fmt_opt(a.cc) << ", excess% "
              << fmt_opt(a.excess_pct) << "\n";
}

void cmd_synth(const Config& cfg, RunManifest& man, const std::string& out) {
    SynthConfig sc;
    sc.kind = synth_kind_from_string(cfg.get_str("synth_kind", "ar_advect"));
    sc.grid_rows = static_cast<int>(cfg.get_int("synth_rows", sc.grid_rows));
    sc.grid_cols = static_cast<int>(cfg.get_int("synth_cols", sc.grid_cols));
    sc.lat0 = cfg.get_real("synth_lat0", sc.lat0);
    sc.lon0 = cfg.get_real("synth_lon0", sc.lon0);
    sc.first_year = static_cast<int>(cfg.get_int("synth_first_year", sc.first_year));
    sc.n_years = static_cast<int>(cfg.get_int("synth_n_years", sc.n_years));
    const auto months = cfg.get_int_list("months", {6, 7, 8, 9});
    sc.months = std::set<int>(months.begin(), months.end());
    sc.ar_coeff = cfg.get_real("synth_ar", sc.ar_coeff);
    sc.advect = cfg.get_real("synth_advect", sc.advect);
    sc.shared_sigma = cfg.get_real("synth_shared_sigma", sc.shared_sigma);
    sc.noise_sigma = cfg.get_real("synth_sigma", sc.noise_sigma);
    sc.base_mm = cfg.get_real("synth_base_mm", sc.base_mm);
    sc.burst_rate = cfg.get_real("synth_burst_rate", sc.burst_rate);
    sc.burst_rate_wet = cfg.get_real("synth_burst_rate_wet", sc.burst_rate_wet);
    sc.burst_trigger_mm = cfg.get_real("synth_burst_trigger", sc.burst_trigger_mm);
    sc.burst_mm = cfg.get_real("synth_burst_mm", sc.burst_mm);
    sc.planted_lag = static_cast<int>(cfg.get_int("synth_lag", sc.planted_lag));
    sc.planted_weight = cfg.get_real("synth_lag_weight", sc.planted_weight);
    sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    man.seeds.push_back(sc.seed);

    const GridIndex grid = synth_grid(sc);
    const auto rain = synth_rainfall(sc);
    atomic_artifact(man, out + "/grid.csv", [&](const std::string& p) { save_grid(grid, p); });
    atomic_artifact(man, out + "/rainfall.csv",
                    [&](const std::string& p) { save_rainfall(rain, grid, p); });
    std::cout << "synth: " << grid.count() << " cells, " << rain.size() << " days\n";

    if (cfg.get_bool("synth_nwp", false)) {
        const GridIndex ngrid = synth_nwp_grid(grid);
        SynthNwpConfig nc;
        nc.lead_days = static_cast<int>(cfg.get_int("nwp_lead_days", nc.lead_days));
        nc.years = cfg.get_year_range(
            "nwp_years", YearRange{sc.first_year, sc.first_year + sc.n_years - 1});
        nc.noise_sigma = cfg.get_real("nwp_noise_sigma", nc.noise_sigma);
        nc.coverage = cfg.get_real("nwp_coverage", nc.coverage);
        nc.seed = static_cast<std::uint64_t>(cfg.get_int("nwp_seed", 7));
        man.seeds.push_back(nc.seed);
        const auto nfc = synth_nwp(rain, grid, ngrid, nc);
        atomic_artifact(man, out + "/nwp_grid.csv",
                        [&](const std::string& p) { save_grid(ngrid, p); });
        atomic_artifact(man, out + "/nwp_forecasts.csv",
                        [&](const std::string& p) { save_forecasts(nfc, ngrid, p); });
        std::cout << "synth: " << nfc.size() << " forecast days on the companion mesh\n";
    }
}

void cmd_ingest(const Config& cfg, RunManifest& man, const std::string& out) {
    const GridIndex grid = grid_input(cfg, man);
    const auto rain = rainfall_input(cfg, man, grid);
    const SplitSpec split = split_from(cfg);
    const int d = static_cast<int>(cfg.get_int("context_days", 12));
    const WindowSet ws = make_windows(rain, d, split);

    nlohmann::json j;
    j["context_days"] = d;
    j["grid_cells"] = grid.count();
    j["empty_warning"] = ws.empty_warning;
    auto dates = [](const std::vector<WindowSample>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& w : v) a.push_back(w.target_date.iso());
        return a;
    };
    j["train_targets"] = dates(ws.train);
    j["test_targets"] = dates(ws.test);
    atomic_artifact(man, out + "/windows.json",
                    [&](const std::string& p) { write_text_atomic(p, j.dump(2) + "\n"); });
    std::cout << "windows: train " << ws.train.size() << " / test " << ws.test.size() << "\n";
    if (ws.empty_warning)
        std::cout << "warning: no feasible window in any season run\n";
}

void cmd_train(const Config& cfg, RunManifest& man, const std::string& out) {
    const GridIndex grid = grid_input(cfg, man);
    const auto rain = rainfall_input(cfg, man, grid);
    const SplitSpec split = split_from(cfg);
    const DlHdConfig dl = dl_hd_from(cfg);
    for (int k = 0; k < dl.ensemble_runs; ++k)
        man.seeds.push_back(dl.base_seed + static_cast<std::uint64_t>(k));

    const WindowSet ws = make_windows(rain, dl.context_days, split);
    const DlHdResult res = run_dl_hd(ws, grid.count(), dl);
    if (res.empty_warning) {
        std::cout << "warning: no train or test windows, nothing to train\n";
        return;
    }
    for (std::size_t k = 0; k < res.models.size(); ++k) {
        const std::string path = out + "/checkpoint_run" + std::to_string(k) + ".json";
        atomic_artifact(man, path, [&](const std::string& p) {
            nn::save_checkpoint(res.models[k], res.histories[k], dl.cap_mm, p);
        });
        const auto& h = res.histories[k];
        std::cout << "run " << k << ": " << h.epochs_run << " epochs, best epoch "
                  << h.best_epoch << ", val loss "
                  << (h.best_epoch > 0 ? h.val_loss[static_cast<std::size_t>(h.best_epoch) - 1]
                                       : 0.0)
                  << "\n";
    }
}

std::vector<ForecastField> nwp_inputs(const Config& cfg, RunManifest& man,
                                      const GridIndex& nwp_grid, int lead) {
    auto fc = load_forecasts(reg_input(man, cfg.get_str("nwp_forecasts")), nwp_grid);
    fc = filter_lead(fc, lead);
    if (fc.empty())
        throw DataError("no forecasts at lead " + std::to_string(lead) + " in " +
                        cfg.get_str("nwp_forecasts"));
    return fc;
}

void cmd_predict(const Config& cfg, RunManifest& man, const std::string& out) {
    const PipelineKind kind = pipeline_from_string(cfg.get_str("pipeline"));
    const GridIndex grid = grid_input(cfg, man);
    const auto rain = rainfall_input(cfg, man, grid);

    std::vector<ForecastField> fc;
    switch (kind) {
    case PipelineKind::persistence: {
        const YearRange years = cfg.get_year_range("test_years", YearRange{2012, 2022});
        const auto mlist = cfg.get_int_list("months", {6, 7, 8, 9});
        const std::set<int> months(mlist.begin(), mlist.end());
        for (int lead : cfg.get_int_list("lead_days", {1, 3})) {
            auto part = persistence_forecasts(rain, years, months, lead);
            fc.insert(fc.end(), part.begin(), part.end());
        }
        break;
    }
    case PipelineKind::dl_hd: {
        const SplitSpec split = split_from(cfg);
        const DlHdConfig dl = dl_hd_from(cfg);
        for (int k = 0; k < dl.ensemble_runs; ++k)
            man.seeds.push_back(dl.base_seed + static_cast<std::uint64_t>(k));
        const WindowSet ws = make_windows(rain, dl.context_days, split);
        DlHdResult res = run_dl_hd(ws, grid.count(), dl);
        if (res.empty_warning)
            std::cout << "warning: no train or test windows, empty forecast set\n";
        fc = std::move(res.lead1);
        fc.insert(fc.end(), res.lead3.begin(), res.lead3.end());
        break;
    }
    case PipelineKind::nwp: {
        const GridIndex ngrid = grid_input(cfg, man, "nwp_grid");
        const int lead = static_cast<int>(cfg.get_int("lead_days", 1));
        const auto nfc = nwp_inputs(cfg, man, ngrid, lead);
        const YearRange calib = cfg.get_year_range("calib_years");
        const MatchTable match = build_match_table(rain, nfc, grid, ngrid, calib);
        fc = run_nwp(rain, nfc, grid, match);
        break;
    }
    case PipelineKind::nwp_plus: {
        const GridIndex ngrid = grid_input(cfg, man, "nwp_grid");
        const int lead = static_cast<int>(cfg.get_int("lead_days", 1));
        const auto nfc = nwp_inputs(cfg, man, ngrid, lead);
        const FusionConfig fus = fusion_from(cfg);
        man.seeds.push_back(fus.base_seed);
        fc = run_nwp_plus(rain, nfc, grid, ngrid, fus);
        break;
    }
    case PipelineKind::nwp_dlhd: {
        const GridIndex ngrid = grid_input(cfg, man, "nwp_grid");
        const int lead = static_cast<int>(cfg.get_int("lead_days", 1));
        const auto nfc = nwp_inputs(cfg, man, ngrid, lead);
        auto dlhd = load_forecasts(reg_input(man, cfg.get_str("dlhd_forecasts")), grid);
        dlhd = filter_lead(dlhd, lead);
        const FusionConfig fus = fusion_from(cfg);
        man.seeds.push_back(fus.base_seed);
        fc = run_nwp_dlhd(rain, nfc, dlhd, grid, ngrid, fus);
        break;
    }
    }
    atomic_artifact(man, out + "/forecasts.csv",
                    [&](const std::string& p) { save_forecasts(fc, grid, p); });
    std::cout << to_string(kind) << ": " << fc.size() << " forecast fields written\n";
}

std::vector<double> reference_losses(const Config& cfg, RunManifest& man, const GridIndex& grid,
                                     const std::vector<DailyField>& rain, int lead,
                                     Thresholds th) {
    const auto ref = filter_lead(load_forecasts(reg_input(man, cfg.get_str("reference")), grid),
                                 lead);
    const SkillReport rep = evaluate(ref, rain, grid, th);
    std::vector<double> losses(grid.count(), 0.0);
    for (const auto& c : rep.cells)
        losses[c.cell] = c.loss.value_or(0.0);
    return losses;
}

void cmd_evaluate(const Config& cfg, RunManifest& man, const std::string& out) {
    GridIndex grid = grid_input(cfg, man);
    if (cfg.has("cities"))
        load_city_names(reg_input(man, cfg.get_str("cities")), grid);
    const auto rain = rainfall_input(cfg, man, grid);
    const int lead = static_cast<int>(cfg.get_int("lead_days", 1));
    const auto fc =
        filter_lead(load_forecasts(reg_input(man, cfg.get_str("forecasts")), grid), lead);
    if (fc.empty())
        throw DataError("no forecasts at lead " + std::to_string(lead) + " in " +
                        cfg.get_str("forecasts"));

    Thresholds th = default_thresholds(lead);
    th.low_mm = cfg.get_real("low_mm", th.low_mm);
    th.high_mm = cfg.get_real("high_mm", th.high_mm);
    th.validate();

    std::vector<double> ref_loss;
    if (cfg.has("reference"))
        ref_loss = reference_losses(cfg, man, grid, rain, lead, th);

    const SkillReport rep = evaluate(fc, rain, grid, th, ref_loss);
    atomic_artifact(man, out + "/skill.csv",
                    [&](const std::string& p) { save_skill_csv(rep, grid, p); });

    const std::string name = cfg.get_str("model_name", "model");
    std::string md = "# Skill: " + name + " (lead " + std::to_string(lead) + ")\n\n";
    md += "## Events\n\n" + event_table_markdown({name}, {&rep}, grid) + "\n";
    md += "## Loss\n\n" + loss_table_markdown({name}, {&rep}, grid);
    atomic_artifact(man, out + "/skill.md",
                    [&](const std::string& p) { write_text_atomic(p, md); });
    print_aggregate(rep);
}

void cmd_lag_sweep(const Config& cfg, RunManifest& man, const std::string& out) {
    const GridIndex grid = grid_input(cfg, man);
    const auto rain = rainfall_input(cfg, man, grid);
    const SplitSpec split = split_from(cfg);
    const DlHdConfig dl = dl_hd_from(cfg);
    for (int k = 0; k < dl.ensemble_runs; ++k)
        man.seeds.push_back(dl.base_seed + static_cast<std::uint64_t>(k));

    std::vector<int> ds;
    if (cfg.has("d_values")) {
        ds = cfg.get_int_list("d_values");
    } else {
        const int lo = static_cast<int>(cfg.get_int("d_min", 3));
        const int hi = static_cast<int>(cfg.get_int("d_max", 20));
        const int step = static_cast<int>(cfg.get_int("d_step", 1));
        if (step < 1) throw ConfigError("d_step must be >= 1");
        for (int d = lo; d <= hi; d += step) ds.push_back(d);
    }
    const auto pts = lag_sweep(rain, grid, ds, split, dl);

    std::string csv = "context_days,mean_loss,stderr_loss";
    const std::size_t runs = pts.empty() ? 0 : pts.front().seed_losses.size();
    for (std::size_t k = 0; k < runs; ++k) csv += ",seed" + std::to_string(k);
    csv += "\n";
    char buf[64];
    for (const auto& p : pts) {
        csv += std::to_string(p.context_days);
        std::snprintf(buf, sizeof(buf), ",%.10g,%.10g", p.mean_loss, p.stderr_loss);
        csv += buf;
        for (double v : p.seed_losses) {
            std::snprintf(buf, sizeof(buf), ",%.10g", v);
            csv += buf;
        }
        csv += "\n";
        std::cout << "d=" << p.context_days << ": loss " << p.mean_loss << " +- "
                  << p.stderr_loss << "\n";
    }
    atomic_artifact(man, out + "/lag_curve.csv",
                    [&](const std::string& p) { write_text_atomic(p, csv); });
}

void cmd_report(const Config& cfg, RunManifest& man, const std::string& out) {
    GridIndex grid = grid_input(cfg, man);
    if (cfg.has("cities"))
        load_city_names(reg_input(man, cfg.get_str("cities")), grid);
    const auto rain = rainfall_input(cfg, man, grid);
    const int lead = static_cast<int>(cfg.get_int("lead_days", 1));
    const auto fc =
        filter_lead(load_forecasts(reg_input(man, cfg.get_str("forecasts")), grid), lead);
    if (fc.empty())
        throw DataError("no forecasts at lead " + std::to_string(lead) + " in " +
                        cfg.get_str("forecasts"));

    const double lo = cfg.get_real("heatmap_min", 0.0);
    const double hi = cfg.get_real("heatmap_max", 50.0);
    const FieldIndex idx(rain);
    const std::size_t G = grid.count();

    std::vector<double> pred_sum(G, 0.0), act_sum(G, 0.0);
    std::vector<long> pred_n(G, 0), act_n(G, 0);
    for (const auto& f : fc) {
        const auto target = realized_target(idx, f.issue_date, lead);
        for (std::size_t c = 0; c < G; ++c) {
            if (f.present[c]) {
                pred_sum[c] += f.values[c];
                ++pred_n[c];
            }
            if (target && target->present[c]) {
                act_sum[c] += target->values[c];
                ++act_n[c];
            }
        }
    }
    std::vector<double> pred_mean(G, 0.0), act_mean(G, 0.0);
    std::vector<bool> pred_have(G, false), act_have(G, false);
    for (std::size_t c = 0; c < G; ++c) {
        if (pred_n[c]) {
            pred_mean[c] = pred_sum[c] / static_cast<double>(pred_n[c]);
            pred_have[c] = true;
        }
        if (act_n[c]) {
            act_mean[c] = act_sum[c] / static_cast<double>(act_n[c]);
            act_have[c] = true;
        }
    }
    atomic_artifact(man, out + "/forecast_mean.pgm", [&](const std::string& p) {
        write_text_atomic(p, render_heatmap(pred_mean, pred_have, grid, lo, hi));
    });
    atomic_artifact(man, out + "/actual_mean.pgm", [&](const std::string& p) {
        write_text_atomic(p, render_heatmap(act_mean, act_have, grid, lo, hi));
    });

    for (const auto& [name, cell] : grid.name_map()) {
        std::vector<double> pred, act;
        std::vector<Date> dates;
        for (const auto& f : fc) {
            if (!f.present[cell]) continue;
            const auto target = realized_target(idx, f.issue_date, lead);
            if (!target || !target->present[cell]) continue;
            pred.push_back(f.values[cell]);
            act.push_back(target->values[cell]);
            dates.push_back(f.issue_date);
        }
        if (pred.empty()) continue;
        const std::string title = name + " lead-" + std::to_string(lead);
        atomic_artifact(man, out + "/city_" + slug(name) + ".svg", [&](const std::string& p) {
            write_text_atomic(p, render_series_plot(pred, act, dates, title));
        });
    }

    if (cfg.has("skill_csvs")) {
        const auto paths = split_names(cfg.get_str("skill_csvs"));
        std::vector<std::string> names = cfg.has("model_names")
                                             ? split_names(cfg.get_str("model_names"))
                                             : std::vector<std::string>{};
        if (names.empty())
            for (std::size_t i = 0; i < paths.size(); ++i)
                names.push_back("model" + std::to_string(i + 1));
        if (names.size() != paths.size())
            throw ConfigError("model_names must list one name per skill_csvs entry");
        std::vector<SkillReport> reports;
        reports.reserve(paths.size());
        for (const auto& p : paths)
            reports.push_back(load_skill_csv(reg_input(man, p)));
        std::vector<const SkillReport*> ptrs;
        for (const auto& r : reports) ptrs.push_back(&r);
        std::string md = "# Model comparison (lead " + std::to_string(lead) + ")\n\n";
        md += "## Events\n\n" + event_table_markdown(names, ptrs, grid) + "\n";
        md += "## Loss\n\n" + loss_table_markdown(names, ptrs, grid);
        atomic_artifact(man, out + "/tables.md",
                        [&](const std::string& p) { write_text_atomic(p, md); });
    }
    std::cout << "report: " << man.outputs.size() << " artifacts in " << out << "\n";
}

int run_command(const std::string& name, const std::string& config_path,
                const std::string& out_flag, const std::string& seed_flag,
                const std::string& cities_flag) {
    RunManifest man;
    man.command = name;
    man.config_path = config_path;
    man.started_at = now_iso_utc();

    std::string out = "out";
    bool have_out = false;
    int code = 0;
    std::string message;
    try {
        Config cfg = Config::load(config_path);
        if (!out_flag.empty()) cfg.set("out_dir", out_flag);
        if (!seed_flag.empty()) cfg.set("seed", seed_flag);
        if (!cities_flag.empty()) cfg.set("cities", cities_flag);
        man.config_digest = digest_hex(cfg.canonical());

        out = cfg.get_str("out_dir", out);
        std::filesystem::create_directories(out);
        have_out = true;

        if (name == "synth")
            cmd_synth(cfg, man, out);
        else if (name == "ingest")
            cmd_ingest(cfg, man, out);
        else if (name == "train")
            cmd_train(cfg, man, out);
        else if (name == "predict")
            cmd_predict(cfg, man, out);
        else if (name == "evaluate")
            cmd_evaluate(cfg, man, out);
        else if (name == "lag-sweep")
            cmd_lag_sweep(cfg, man, out);
        else if (name == "report")
            cmd_report(cfg, man, out);
        man.status = "ok";
    } catch (const ConfigError& e) {
        man.status = "config-error";
        message = e.what();
        code = 2;
    } catch (const DataError& e) {
        man.status = "data-error";
        message = e.what();
        code = 3;
    } catch (const NumericError& e) {
        man.status = "numeric-error";
        message = e.what();
        code = 4;
    } catch (const std::exception& e) {
        man.status = "error";
        message = e.what();
        code = 1;
    }
    man.finished_at = now_iso_utc();
    if (have_out) {
        try {
            save_manifest(man, out + "/manifest.json");
        } catch (const std::exception& e) {
            std::cerr << "error: could not write manifest: " << e.what() << "\n";
            if (code == 0) code = 3;
        }
    }
    if (code != 0)
        std::cerr << "error: " << message << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    monsoon::apply_thread_env();

    CLI::App app{"monsoon-bench: gridded rainfall forecasting and verification toolkit"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "generate a seeded synthetic rainfall fixture"},
        {"ingest", "validate inputs and cache the training windows"},
        {"train", "train the rainfall predictor ensemble and write checkpoints"},
        {"predict", "emit forecasts for the configured pipeline"},
        {"evaluate", "score forecasts against observations"},
        {"lag-sweep", "sweep the context length and record test losses"},
        {"report", "render heatmaps, city series plots, and comparison tables"},
    };

    struct Flags {
        std::string config, out, seed, cities;
    };
    std::map<std::string, Flags> flags;
    for (const auto& [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        auto& fl = flags[name];
        sub->add_option("--config", fl.config, "run configuration file")->required();
        sub->add_option("--out", fl.out, "artifact directory (overrides out_dir)");
        sub->add_option("--seed", fl.seed, "base seed (overrides seed)");
        sub->add_option("--cities", fl.cities, "city list CSV (overrides cities)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    for (const auto& [name, desc] : commands) {
        if (app.got_subcommand(name)) {
            const auto& fl = flags[name];
            return run_command(name, fl.config, fl.out, fl.seed, fl.cities);
        }
    }
    return 2;
}
