#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "codamort/errors.hpp"
#include "codamort/evaluation.hpp"
#include "codamort/hmd.hpp"
#include "codamort/lifetable.hpp"
#include "codamort/pipeline.hpp"
#include "codamort/tuning.hpp"

namespace codamort {

/// Resolved settings for one batch run.
struct RunConfig {
    std::filesystem::path data_dir;
    std::filesystem::path out_dir = "out";
    std::vector<std::string> countries;
    std::vector<Gender> genders = {Gender::female, Gender::male};
    StudyWindow window;
    int rank_female = 7;
    int rank_male = 4;
    std::string transform = "clr";  // clr | ilr | alpha:auto | alpha:<value>
    std::string model = "default";  // default | auto | both
    int horizon = 8;
    int jobs = 0;  // 0 = logical cores
    int kannisto_lo = 80;
    int kannisto_hi = 100;

    int rank_for(Gender g) const {
        return g == Gender::male ? rank_male : rank_female;
    }

    std::vector<std::string> model_list() const {
        if (model == "both") return {"default", "auto"};
        if (model == "default" || model == "auto") return {model};
        throw ConfigError("config: model must be default, auto or both, got '" +
                          model + "'");
    }
};

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    RunConfig c;
    try {
        c.data_dir = j.at("data_dir").get<std::string>();
        for (const auto& v : j.at("countries"))
            c.countries.push_back(v.get<std::string>());
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("genders")) {
            c.genders.clear();
            for (const auto& v : j["genders"]) {
                const std::string g = v.get<std::string>();
                if (g == "female")
                    c.genders.push_back(Gender::female);
                else if (g == "male")
                    c.genders.push_back(Gender::male);
                else
                    throw ConfigError("config: unknown gender '" + g + "'");
            }
        }
        if (j.contains("window")) {
            const auto& w = j["window"];
            c.window.train_begin = w.at("train_begin").get<int>();
            c.window.train_end = w.at("train_end").get<int>();
            c.window.test_begin = w.at("test_begin").get<int>();
            c.window.test_end = w.at("test_end").get<int>();
        }
        if (j.contains("rank")) {
            c.rank_female = j["rank"].at("female").get<int>();
            c.rank_male = j["rank"].at("male").get<int>();
        }
        if (j.contains("transform")) c.transform = j["transform"].get<std::string>();
        if (j.contains("model")) c.model = j["model"].get<std::string>();
        if (j.contains("horizon")) c.horizon = j["horizon"].get<int>();
        if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
        if (j.contains("kannisto_window")) {
            c.kannisto_lo = j["kannisto_window"].at(0).get<int>();
            c.kannisto_hi = j["kannisto_window"].at(1).get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (c.countries.empty())
        throw ConfigError("config " + path.string() +
                          ": field 'countries' must be a non-empty array");
    c.window.validate();
    return c;
}

/// Either a fixed transform or "tune alpha per population".
struct TransformSetting {
    bool auto_alpha = false;
    Transform fixed = Transform::CLR();
};

inline TransformSetting parse_transform_setting(const std::string& s) {
    TransformSetting t;
    if (s == "clr") {
        t.fixed = Transform::CLR();
    } else if (s == "ilr") {
        t.fixed = Transform::ILR();
    } else if (s == "alpha:auto") {
        t.auto_alpha = true;
    } else if (s.rfind("alpha:", 0) == 0) {
        try {
            t.fixed = Transform::Alpha(std::stod(s.substr(6)));
        } catch (const std::exception&) {
            throw ConfigError("transform: cannot parse '" + s + "'");
        }
    } else {
        throw ConfigError("transform: expected clr, ilr, alpha:auto or "
                          "alpha:<value>, got '" + s + "'");
    }
    return t;
}

// ----------------------------------------------------------------------
// data access
// ----------------------------------------------------------------------

/// Observations plus preprocessed life tables and the train/test split.
struct PopulationData {
    MortalityGrid grid;
    Preprocessed prep;
    DeathMatrix train;
    DeathMatrix test;
};

inline PopulationData load_population(const RunConfig& cfg,
                                      const std::string& country, Gender gender) {
    const auto rates_path = cfg.data_dir / (country + ".Mx_1x1.txt");
    const auto expo_path = cfg.data_dir / (country + ".Exposures_1x1.txt");
    std::ifstream rates_in(rates_path), expo_in(expo_path);
    if (!rates_in)
        throw ConfigError("missing input file " + rates_path.string());
    if (!expo_in)
        throw ConfigError("missing input file " + expo_path.string());
    const HmdTable rates = parse_hmd(rates_in, HmdKind::rates);
    const HmdTable expo = parse_hmd(expo_in, HmdKind::exposures);

    PopulationData pop;
    pop.grid = build_grid(rates, expo, gender, cfg.window, country);
    PreprocessOptions popt;
    popt.kannisto_fit_lo = cfg.kannisto_lo;
    popt.kannisto_fit_hi = cfg.kannisto_hi;
    popt.training_rows = cfg.window.train_years();
    pop.prep = preprocess(pop.grid, popt);

    const DeathMatrix full = assemble(pop.prep.tables);
    pop.train.values = full.values.topRows(cfg.window.train_years());
    pop.train.years.assign(full.years.begin(),
                           full.years.begin() + cfg.window.train_years());
    pop.test.values = full.values.bottomRows(cfg.window.test_years());
    pop.test.years.assign(full.years.end() - cfg.window.test_years(),
                          full.years.end());
    return pop;
}

// ----------------------------------------------------------------------
// small formatting helpers
// ----------------------------------------------------------------------

namespace detail {

inline std::string g17(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

inline std::string g10(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.10g", v);
    return b;
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << body;
}

/// Deterministic worker fan-out over population indices.
template <typename Work>
inline void parallel_over(std::size_t n, int jobs, Work&& work) {
    int threads = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                work(i);
            }
        });
    for (auto& th : pool) th.join();
}

struct PopulationKey {
    std::string country;
    Gender gender;
};

inline std::vector<PopulationKey> population_keys(const RunConfig& cfg) {
    std::vector<PopulationKey> keys;
    for (const std::string& c : cfg.countries)
        for (Gender g : cfg.genders) keys.push_back({c, g});
    return keys;
}

inline std::string tag(const PopulationKey& k) {
    return k.country + "_" + to_string(k.gender);
}

inline nlohmann::ordered_json config_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["data_dir"] = cfg.data_dir.string();
    j["out_dir"] = cfg.out_dir.string();
    j["countries"] = cfg.countries;
    std::vector<std::string> gs;
    for (Gender g : cfg.genders) gs.push_back(to_string(g));
    j["genders"] = gs;
    j["window"] = {{"train_begin", cfg.window.train_begin},
                   {"train_end", cfg.window.train_end},
                   {"test_begin", cfg.window.test_begin},
                   {"test_end", cfg.window.test_end}};
    j["rank"] = {{"female", cfg.rank_female}, {"male", cfg.rank_male}};
    j["transform"] = cfg.transform;
    j["model"] = cfg.model;
    j["horizon"] = cfg.horizon;
    j["jobs"] = cfg.jobs;
    j["kannisto_window"] = {cfg.kannisto_lo, cfg.kannisto_hi};
    return j;
}

inline void write_manifest(const RunConfig& cfg, const std::string& verb,
                           nlohmann::ordered_json extra = {}) {
    nlohmann::ordered_json j;
    j["tool"] = "codamort";
    j["command"] = verb;
    j["config"] = config_json(cfg);
    if (!extra.is_null() && !extra.empty()) j["resolved"] = extra;
    write_file(cfg.out_dir / ("manifest_" + verb + ".json"), j.dump(2) + "\n");
}

inline int report_failures(const std::vector<std::string>& failures) {
    for (const std::string& f : failures)
        if (!f.empty()) std::cerr << "error: " << f << "\n";
    int count = 0;
    for (const std::string& f : failures) count += f.empty() ? 0 : 1;
    if (count > 0)
        std::cerr << count << " population(s) failed\n";
    return count > 0 ? 1 : 0;
}

}  // namespace detail

// ----------------------------------------------------------------------
// preprocess
// ----------------------------------------------------------------------

inline std::string lifetable_csv(const std::vector<LifeTable>& tables) {
    std::string body = "year,age,mx,ax,qx,lx,dx\n";
    for (const LifeTable& lt : tables)
        for (int x = 0; x < age_count; ++x)
            body += std::to_string(lt.year) + "," + std::to_string(x) + "," +
                    detail::g17(lt.m[x]) + "," + detail::g17(lt.a[x]) + "," +
                    detail::g17(lt.q[x]) + "," + detail::g17(lt.l[x]) + "," +
                    detail::g17(lt.d[x]) + "\n";
    return body;
}

inline int run_preprocess(const RunConfig& cfg) {
    const auto keys = detail::population_keys(cfg);
    std::vector<std::string> bodies(keys.size());
    std::vector<std::string> failures(keys.size());
    detail::parallel_over(keys.size(), cfg.jobs, [&](std::size_t i) {
        try {
            const PopulationData pop =
                load_population(cfg, keys[i].country, keys[i].gender);
            bodies[i] = lifetable_csv(pop.prep.tables);
        } catch (const std::exception& e) {
            failures[i] = detail::tag(keys[i]) + ": " + e.what();
        }
    });
    for (std::size_t i = 0; i < keys.size(); ++i)
        if (failures[i].empty())
            detail::write_file(
                cfg.out_dir / ("lifetables_" + detail::tag(keys[i]) + ".csv"),
                bodies[i]);
    detail::write_manifest(cfg, "preprocess");
    return detail::report_failures(failures);
}

// ----------------------------------------------------------------------
// tune
// ----------------------------------------------------------------------

inline int run_tune(const RunConfig& cfg) {
    const auto keys = detail::population_keys(cfg);
    std::vector<TuningResult> results(keys.size());
    std::vector<std::string> failures(keys.size());
    detail::parallel_over(keys.size(), cfg.jobs, [&](std::size_t i) {
        try {
            const PopulationData pop =
                load_population(cfg, keys[i].country, keys[i].gender);
            results[i] =
                optimize_alpha(pop.train, cfg.rank_for(keys[i].gender));
        } catch (const std::exception& e) {
            failures[i] = detail::tag(keys[i]) + ": " + e.what();
        }
    });

    std::string body =
        "country,gender,optimal_alpha,avg_validation_rmse,evaluations,all_penalized\n";
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (!failures[i].empty()) continue;
        const TuningResult& r = results[i];
        body += keys[i].country + "," + to_string(keys[i].gender) + "," +
                detail::g17(r.optimal_alpha) + "," +
                detail::g17(r.avg_validation_rmse) + "," +
                std::to_string(r.evaluations) + "," +
                (r.all_penalized ? "1" : "0") + "\n";
    }
    detail::write_file(cfg.out_dir / "tuning_report.csv", body);
    detail::write_manifest(cfg, "tune");
    return detail::report_failures(failures);
}

/// Tuned alpha values keyed by country and gender, read back from the
/// tune verb's report.
inline std::map<std::pair<std::string, std::string>, double> read_tuning_report(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open tuning report " + path.string() +
                          " (run the tune command first)");
    std::map<std::pair<std::string, std::string>, double> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string country, gender, alpha;
        std::getline(ss, country, ',');
        std::getline(ss, gender, ',');
        std::getline(ss, alpha, ',');
        out[{country, gender}] = std::strtod(alpha.c_str(), nullptr);
    }
    return out;
}

// ----------------------------------------------------------------------
// forecast
// ----------------------------------------------------------------------

inline std::string death_matrix_csv(const DeathMatrix& dm) {
    std::string body = "year,age,dx_hat,dx_hat_per_100k\n";
    for (int t = 0; t < dm.year_count(); ++t)
        for (int x = 0; x < dm.parts(); ++x) {
            char b100k[64];
            std::snprintf(b100k, sizeof b100k, "%.4f", dm.values(t, x) * 100000.0);
            body += std::to_string(dm.years[t]) + "," + std::to_string(x) + "," +
                    detail::g17(dm.values(t, x)) + "," + b100k + "\n";
        }
    return body;
}

inline DeathMatrix read_death_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::map<int, std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string year, age, dx;
        std::getline(ss, year, ',');
        std::getline(ss, age, ',');
        std::getline(ss, dx, ',');
        rows[std::atoi(year.c_str())].push_back(std::strtod(dx.c_str(), nullptr));
    }
    DeathMatrix dm;
    dm.values.resize(static_cast<Eigen::Index>(rows.size()), age_count);
    int t = 0;
    for (const auto& [year, vals] : rows) {
        if (static_cast<int>(vals.size()) != age_count)
            throw MalformedRow(path.string() + ": year " + std::to_string(year) +
                               " has " + std::to_string(vals.size()) + " ages");
        for (int x = 0; x < age_count; ++x) dm.values(t, x) = vals[x];
        dm.years.push_back(year);
        ++t;
    }
    return dm;
}

inline std::string artifacts_text(const FitArtifacts& a, int rank, bool jumpoff) {
    std::string s;
    s += "format=codamort-artifacts/v1\n";
    s += "transform=" + a.transform.name() + "\n";
    s += "alpha=" + detail::g17(a.transform.alpha) + "\n";
    s += "rank=" + std::to_string(rank) + "\n";
    s += "jumpoff=" + std::string(jumpoff ? "1" : "0") + "\n";
    s += "clamp_events=" + std::to_string(a.clamp_events) + "\n";
    s += "singular_values=";
    for (int i = 0; i < a.svd.singular_values.size(); ++i)
        s += (i ? ";" : "") + detail::g17(a.svd.singular_values[i]);
    s += "\nexplained_variance=";
    for (int i = 0; i < a.svd.explained_variance.size(); ++i)
        s += (i ? ";" : "") + detail::g17(a.svd.explained_variance[i]);
    s += "\ncenter=";
    for (int i = 0; i < a.center.size(); ++i)
        s += (i ? ";" : "") + detail::g17(a.center[i]);
    s += "\n";
    for (std::size_t k = 0; k < a.kappa_models.size(); ++k)
        s += "kappa_model_" + std::to_string(k) + "=" +
             a.kappa_models[k].serialize() + "\n";
    return s;
}

inline std::map<std::string, std::string> read_artifacts_text(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

inline int run_forecast(const RunConfig& cfg) {
    const TransformSetting setting = parse_transform_setting(cfg.transform);
    std::map<std::pair<std::string, std::string>, double> tuned;
    if (setting.auto_alpha)
        tuned = read_tuning_report(cfg.out_dir / "tuning_report.csv");

    const auto keys = detail::population_keys(cfg);
    const std::vector<std::string> models = cfg.model_list();

    struct Output {
        std::vector<std::pair<std::string, std::string>> files;  // name, body
        nlohmann::ordered_json resolved;
    };
    std::vector<Output> outputs(keys.size());
    std::vector<std::string> failures(keys.size());

    detail::parallel_over(keys.size(), cfg.jobs, [&](std::size_t i) {
        try {
            const detail::PopulationKey& key = keys[i];
            Transform tf = setting.fixed;
            if (setting.auto_alpha) {
                const auto it =
                    tuned.find({key.country, to_string(key.gender)});
                if (it == tuned.end())
                    throw ConfigError("no tuned alpha for " + detail::tag(key) +
                                      " in tuning_report.csv");
                tf = Transform::Alpha(it->second);
            }
            const PopulationData pop = load_population(cfg, key.country, key.gender);

            Output& out = outputs[i];
            out.resolved["country"] = key.country;
            out.resolved["gender"] = to_string(key.gender);
            out.resolved["transform"] = tf.name();
            out.resolved["alpha"] = tf.alpha;
            out.resolved["rank"] = cfg.rank_for(key.gender);
            out.resolved["models"] = models;

            for (const std::string& model : models) {
                PipelineOptions opt;
                opt.transform = tf;
                opt.rank = cfg.rank_for(key.gender);
                opt.model = model == "auto" ? ModelChoice::auto_model
                                            : ModelChoice::default_model;
                opt.horizon = cfg.horizon;
                opt.jumpoff = true;
                opt.with_fitted = true;
                opt.inverse_policy = InversePolicy::clamp;
                const PipelineResult res = run_pipeline(pop.train, opt);
                const std::string suffix = detail::tag(key) + "_" + model;
                out.files.emplace_back("forecast_" + suffix + ".csv",
                                       death_matrix_csv(res.forecasts));
                out.files.emplace_back("fitted_" + suffix + ".csv",
                                       death_matrix_csv(res.fitted));
                out.files.emplace_back(
                    "artifacts_" + suffix + ".txt",
                    artifacts_text(res.artifacts, opt.rank, opt.jumpoff));
                if (res.artifacts.clamp_events > 0)
                    out.resolved["clamp_events_" + model] =
                        res.artifacts.clamp_events;
            }
        } catch (const std::exception& e) {
            failures[i] = detail::tag(keys[i]) + ": " + e.what();
        }
    });

    nlohmann::ordered_json resolved = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (!failures[i].empty()) continue;
        for (const auto& [name, body] : outputs[i].files)
            detail::write_file(cfg.out_dir / name, body);
        resolved.push_back(outputs[i].resolved);
    }
    detail::write_manifest(cfg, "forecast", resolved);
    return detail::report_failures(failures);
}

// ----------------------------------------------------------------------
// evaluate + report
// ----------------------------------------------------------------------

/// Train- and test-phase accuracy of one stored model run.
struct ModelEvaluation {
    std::string model;
    ErrorReport train;
    ErrorReport test;
};

struct PopulationEvaluation {
    std::string country;
    Gender gender = Gender::female;
    std::string transform_name;
    double alpha = 0.0;
    std::vector<ModelEvaluation> models;
    int selected = 0;
    std::string failure;  // non-empty when this population could not be scored
};

/**
 * @brief Score saved forecasts against recomputed observations.
 *
 * Reads the forecast/fitted CSVs written by the forecast verb (full
 * double precision, so the result is bit-identical to the in-run
 * evaluation) and recomputes the actual life-table deaths from the data
 * directory.
 */
inline std::vector<PopulationEvaluation> compute_evaluation(const RunConfig& cfg) {
    const auto keys = detail::population_keys(cfg);
    std::vector<PopulationEvaluation> evals(keys.size());
    detail::parallel_over(keys.size(), cfg.jobs, [&](std::size_t i) {
        PopulationEvaluation& pe = evals[i];
        pe.country = keys[i].country;
        pe.gender = keys[i].gender;
        try {
            const PopulationData pop =
                load_population(cfg, keys[i].country, keys[i].gender);
            for (const std::string& model : {std::string("default"), std::string("auto")}) {
                const std::string suffix = detail::tag(keys[i]) + "_" + model;
                const auto fpath = cfg.out_dir / ("forecast_" + suffix + ".csv");
                if (!std::filesystem::exists(fpath)) continue;
                ModelEvaluation me;
                me.model = model;
                DeathMatrix forecast = read_death_matrix_csv(fpath);
                DeathMatrix fitted = read_death_matrix_csv(
                    cfg.out_dir / ("fitted_" + suffix + ".csv"));
                me.test = evaluate(pop.test, forecast, Phase::test);
                me.train = evaluate(pop.train, fitted, Phase::train);
                const auto kv = read_artifacts_text(
                    cfg.out_dir / ("artifacts_" + suffix + ".txt"));
                if (kv.count("transform")) pe.transform_name = kv.at("transform");
                if (kv.count("alpha"))
                    pe.alpha = std::strtod(kv.at("alpha").c_str(), nullptr);
                pe.models.push_back(std::move(me));
            }
            if (pe.models.empty())
                throw ConfigError("no saved forecasts for " + detail::tag(keys[i]) +
                                  " (run the forecast command first)");
            std::vector<ErrorReport> tests;
            for (const ModelEvaluation& me : pe.models) tests.push_back(me.test);
            pe.selected = model_select(tests);
        } catch (const std::exception& e) {
            pe.failure = detail::tag(keys[i]) + ": " + e.what();
        }
    });
    return evals;
}

inline int run_evaluate(const RunConfig& cfg) {
    const std::vector<PopulationEvaluation> evals = compute_evaluation(cfg);

    std::string body =
        "country,gender,transform,alpha,model,phase,rmse,mae,selected\n";
    std::map<std::tuple<std::string, std::string, std::string>,
             std::vector<std::pair<std::string, ErrorReport>>>
        grouped;

    std::vector<std::string> failures;
    for (const PopulationEvaluation& pe : evals) {
        if (!pe.failure.empty()) {
            failures.push_back(pe.failure);
            continue;
        }
        for (std::size_t m = 0; m < pe.models.size(); ++m) {
            const ModelEvaluation& me = pe.models[m];
            for (const ErrorReport* rep : {&me.train, &me.test}) {
                body += pe.country + "," + to_string(pe.gender) + "," +
                        pe.transform_name + "," + detail::g10(pe.alpha) + "," +
                        me.model + "," + to_string(rep->phase) + "," +
                        detail::g10(rep->rmse) + "," + detail::g10(rep->mae) + "," +
                        (static_cast<int>(m) == pe.selected ? "1" : "0") + "\n";
                grouped[{to_string(pe.gender), me.model, to_string(rep->phase)}]
                    .push_back({pe.country, *rep});
            }
        }
    }
    for (const auto& [key, reports] : grouped) {
        const auto& [gender, model, phase] = key;
        const MultiCountryReport mc = pool_reports(reports);
        body += "ALL," + gender + ",,," + model + "," + phase + "," +
                detail::g10(mc.rmse) + "," + detail::g10(mc.mae) + ",0\n";
    }
    detail::write_file(cfg.out_dir / "evaluation.csv", body);
    detail::write_manifest(cfg, "evaluate");
    return detail::report_failures(failures);
}

/**
 * @brief Long-format error files for plotting: unweighted means across
 * countries per year and per age, split by gender, model and phase.
 */
inline int run_report(const RunConfig& cfg) {
    const std::vector<PopulationEvaluation> evals = compute_evaluation(cfg);

    struct Acc {
        std::map<int, std::pair<double, double>> sums;  // label -> (rmse, mae)
        int populations = 0;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Acc> by_year,
        by_age;

    std::vector<std::string> failures;
    for (const PopulationEvaluation& pe : evals) {
        if (!pe.failure.empty()) {
            failures.push_back(pe.failure);
            continue;
        }
        for (const ModelEvaluation& me : pe.models) {
            for (const ErrorReport* rep : {&me.train, &me.test}) {
                const auto key = std::make_tuple(
                    to_string(pe.gender), me.model, to_string(rep->phase));
                Acc& ay = by_year[key];
                ++ay.populations;
                for (std::size_t j = 0; j < rep->by_year.labels.size(); ++j) {
                    auto& s = ay.sums[rep->by_year.labels[j]];
                    s.first += rep->by_year.rmse[j];
                    s.second += rep->by_year.mae[j];
                }
                Acc& aa = by_age[key];
                ++aa.populations;
                for (std::size_t j = 0; j < rep->by_age.labels.size(); ++j) {
                    auto& s = aa.sums[rep->by_age.labels[j]];
                    s.first += rep->by_age.rmse[j];
                    s.second += rep->by_age.mae[j];
                }
            }
        }
    }

    auto emit = [&](const std::map<std::tuple<std::string, std::string, std::string>,
                                   Acc>& acc,
                    const char* label) {
        std::string body = std::string("gender,model,phase,") + label +
                           ",mean_rmse,mean_mae\n";
        for (const auto& [key, a] : acc) {
            const auto& [gender, model, phase] = key;
            for (const auto& [lab, sums] : a.sums)
                body += gender + "," + model + "," + phase + "," +
                        std::to_string(lab) + "," +
                        detail::g10(sums.first / a.populations) + "," +
                        detail::g10(sums.second / a.populations) + "\n";
        }
        return body;
    };
    detail::write_file(cfg.out_dir / "errors_by_year.csv", emit(by_year, "year"));
    detail::write_file(cfg.out_dir / "errors_by_age.csv", emit(by_age, "age"));
    nlohmann::ordered_json meta;
    meta["aggregation"] = "unweighted mean across countries per year/age";
    detail::write_manifest(cfg, "report", meta);
    return detail::report_failures(failures);
}

}  // namespace codamort
