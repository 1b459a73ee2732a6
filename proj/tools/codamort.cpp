// Batch front end: ingest -> preprocess -> tune -> forecast -> evaluate,
// plus plot-ready error tables.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "codamort/codamort.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string countries;
    std::string gender;  // empty = whatever the config says
    std::string transform;
    std::string model;
    int horizon = 0;
    int jobs = -1;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Run configuration (JSON)")
        ->required();
    cmd->add_option("--countries", flags.countries,
                    "Comma-separated country codes (overrides config)");
    cmd->add_option("--gender", flags.gender, "female, male or both")
        ->check(CLI::IsMember({"female", "male", "both"}));
    cmd->add_option("--transform", flags.transform,
                    "clr, ilr, alpha:auto or alpha:<value>");
    cmd->add_option("--model", flags.model, "default, auto or both")
        ->check(CLI::IsMember({"default", "auto", "both"}));
    cmd->add_option("--horizon", flags.horizon, "Forecast horizon (default 8)");
    cmd->add_option("--jobs", flags.jobs,
                    "Parallel populations (0 = logical cores)");
    cmd->add_option("--out", flags.out_dir, "Output directory");
}

codamort::RunConfig resolve(const CommonFlags& flags) {
    codamort::RunConfig cfg = codamort::load_config(flags.config_path);
    if (!flags.countries.empty()) {
        cfg.countries.clear();
        std::string cur;
        for (char c : flags.countries + ",") {
            if (c == ',') {
                if (!cur.empty()) cfg.countries.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (cfg.countries.empty())
            throw codamort::ConfigError("--countries: no codes given");
    }
    if (flags.gender == "female") cfg.genders = {codamort::Gender::female};
    if (flags.gender == "male") cfg.genders = {codamort::Gender::male};
    if (flags.gender == "both")
        cfg.genders = {codamort::Gender::female, codamort::Gender::male};
    if (!flags.transform.empty()) cfg.transform = flags.transform;
    if (!flags.model.empty()) cfg.model = flags.model;
    if (flags.horizon > 0) cfg.horizon = flags.horizon;
    if (flags.jobs >= 0) cfg.jobs = flags.jobs;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compositional mortality forecasting (alpha/CLR/ILR pipelines)"};
    app.require_subcommand(1);

    CommonFlags flags;
    CLI::App* preprocess =
        app.add_subcommand("preprocess", "Write smoothed per-year life tables");
    CLI::App* tune =
        app.add_subcommand("tune", "Select alpha by expanding-window validation");
    CLI::App* forecast =
        app.add_subcommand("forecast", "Fit the pipeline and forecast deaths");
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Score saved forecasts (RMSE/MAE)");
    CLI::App* report =
        app.add_subcommand("report", "Plot-ready error breakdowns by year/age");
    for (CLI::App* cmd : {preprocess, tune, forecast, evaluate, report})
        add_common(cmd, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        const codamort::RunConfig cfg = resolve(flags);
        if (preprocess->parsed()) return codamort::run_preprocess(cfg);
        if (tune->parsed()) return codamort::run_tune(cfg);
        if (forecast->parsed()) return codamort::run_forecast(cfg);
        if (evaluate->parsed()) return codamort::run_evaluate(cfg);
        if (report->parsed()) return codamort::run_report(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
