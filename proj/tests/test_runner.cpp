#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "codamort/runner.hpp"
#include "codamort/synthetic.hpp"

using namespace codamort;
namespace fs = std::filesystem;

namespace {

struct TempTree {
    fs::path root;
    explicit TempTree(const std::string& name) {
        root = fs::temp_directory_path() / ("codamort_" + name);
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
};

RunConfig fixture_config(const fs::path& root, int n_countries = 1) {
    RunConfig cfg;
    cfg.data_dir = root / "data";
    cfg.out_dir = root / "out";
    for (int i = 0; i < n_countries; ++i) {
        SyntheticSpec spec;
        spec.country = "SYN" + std::to_string(i + 1);
        spec.seed = 20240901 + 1000u * i;
        write_hmd_fixture(cfg.data_dir, spec);
        cfg.countries.push_back(spec.country);
    }
    cfg.genders = {Gender::female};
    cfg.transform = "clr";
    cfg.model = "default";
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, LoadsAndValidates) {
    TempTree tmp("config");
    const fs::path cfg_path = tmp.root / "run.json";
    {
        std::ofstream out(cfg_path);
        out << R"({
  "data_dir": ")" << (tmp.root / "data").string() << R"(",
  "countries": ["SYN1"],
  "genders": ["female"],
  "rank": {"female": 5, "male": 3},
  "transform": "alpha:0.25",
  "horizon": 6
})";
    }
    const RunConfig cfg = load_config(cfg_path);
    EXPECT_EQ(cfg.countries.size(), 1u);
    EXPECT_EQ(cfg.rank_female, 5);
    EXPECT_EQ(cfg.horizon, 6);
    EXPECT_EQ(cfg.transform, "alpha:0.25");
    EXPECT_EQ(cfg.rank_for(Gender::female), 5);

    EXPECT_THROW(load_config(tmp.root / "absent.json"), ConfigError);
    {
        std::ofstream out(cfg_path);
        out << R"({"data_dir": "x", "countries": []})";
    }
    EXPECT_THROW(load_config(cfg_path), ConfigError);
}

TEST(TransformSetting, Parsing) {
    EXPECT_EQ(parse_transform_setting("clr").fixed.kind, Transform::Kind::clr);
    EXPECT_EQ(parse_transform_setting("ilr").fixed.kind, Transform::Kind::ilr);
    EXPECT_TRUE(parse_transform_setting("alpha:auto").auto_alpha);
    const TransformSetting t = parse_transform_setting("alpha:0.37");
    EXPECT_EQ(t.fixed.kind, Transform::Kind::alpha);
    EXPECT_NEAR(t.fixed.alpha, 0.37, 1e-15);
    EXPECT_THROW(parse_transform_setting("bogus"), ConfigError);
    EXPECT_THROW(parse_transform_setting("alpha:2"), ConfigError);
}

TEST(Runner, PreprocessWritesLifetables) {
    TempTree tmp("preprocess");
    const RunConfig cfg = fixture_config(tmp.root);
    EXPECT_EQ(run_preprocess(cfg), 0);
    const std::string csv = slurp(cfg.out_dir / "lifetables_SYN1_female.csv");
    EXPECT_NE(csv.find("year,age,mx,ax,qx,lx,dx"), std::string::npos);
    // 36 years x 111 ages + header
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'),
              36 * 111 + 1);
    EXPECT_TRUE(fs::exists(cfg.out_dir / "manifest_preprocess.json"));
}

TEST(Runner, ForecastEvaluateRoundTripIsExact) {
    TempTree tmp("roundtrip");
    RunConfig cfg = fixture_config(tmp.root);
    cfg.model = "both";
    EXPECT_EQ(run_forecast(cfg), 0);
    ASSERT_TRUE(fs::exists(cfg.out_dir / "forecast_SYN1_female_default.csv"));
    ASSERT_TRUE(fs::exists(cfg.out_dir / "fitted_SYN1_female_auto.csv"));
    ASSERT_TRUE(fs::exists(cfg.out_dir / "artifacts_SYN1_female_default.txt"));

    // in-run evaluation, recomputed from scratch
    const PopulationData pop = load_population(cfg, "SYN1", Gender::female);
    PipelineOptions opt;
    opt.transform = Transform::CLR();
    opt.rank = cfg.rank_female;
    opt.horizon = cfg.horizon;
    const PipelineResult res = run_pipeline(pop.train, opt);
    const ErrorReport in_run_test = evaluate(pop.test, res.forecasts, Phase::test);
    const ErrorReport in_run_train = evaluate(pop.train, res.fitted, Phase::train);

    // evaluation recomputed from the saved CSVs must agree bit for bit
    const std::vector<PopulationEvaluation> evals = compute_evaluation(cfg);
    ASSERT_EQ(evals.size(), 1u);
    ASSERT_TRUE(evals[0].failure.empty());
    ASSERT_EQ(evals[0].models.size(), 2u);
    EXPECT_EQ(evals[0].models[0].model, "default");
    EXPECT_EQ(evals[0].models[0].test.rmse, in_run_test.rmse);
    EXPECT_EQ(evals[0].models[0].test.mae, in_run_test.mae);
    EXPECT_EQ(evals[0].models[0].train.rmse, in_run_train.rmse);
    EXPECT_EQ(evals[0].transform_name, "clr");

    EXPECT_EQ(run_evaluate(cfg), 0);
    const std::string csv = slurp(cfg.out_dir / "evaluation.csv");
    EXPECT_NE(csv.find("country,gender,transform,alpha,model,phase,rmse,mae,selected"),
              std::string::npos);
    EXPECT_NE(csv.find("SYN1,female,clr"), std::string::npos);
    EXPECT_NE(csv.find("ALL,female"), std::string::npos);

    EXPECT_EQ(run_report(cfg), 0);
    const std::string by_year = slurp(cfg.out_dir / "errors_by_year.csv");
    EXPECT_NE(by_year.find("gender,model,phase,year,mean_rmse,mean_mae"),
              std::string::npos);
    EXPECT_NE(by_year.find("female,default,test,2011"), std::string::npos);
    const std::string by_age = slurp(cfg.out_dir / "errors_by_age.csv");
    EXPECT_NE(by_age.find("female,default,train,110"), std::string::npos);
}

TEST(Runner, TuneThenAutoAlphaForecast) {
    TempTree tmp("autoalpha");
    RunConfig cfg = fixture_config(tmp.root);
    EXPECT_EQ(run_tune(cfg), 0);
    const std::string report = slurp(cfg.out_dir / "tuning_report.csv");
    EXPECT_NE(report.find("country,gender,optimal_alpha"), std::string::npos);
    EXPECT_NE(report.find("SYN1,female,"), std::string::npos);

    const auto tuned = read_tuning_report(cfg.out_dir / "tuning_report.csv");
    const double alpha = tuned.at({"SYN1", "female"});
    EXPECT_GE(alpha, 0.0);
    EXPECT_LE(alpha, 1.0);

    cfg.transform = "alpha:auto";
    EXPECT_EQ(run_forecast(cfg), 0);
    const auto kv =
        read_artifacts_text(cfg.out_dir / "artifacts_SYN1_female_default.txt");
    EXPECT_EQ(std::strtod(kv.at("alpha").c_str(), nullptr), alpha);
}

TEST(Runner, AutoAlphaWithoutTuningReportFails) {
    TempTree tmp("noreport");
    RunConfig cfg = fixture_config(tmp.root);
    cfg.transform = "alpha:auto";
    EXPECT_THROW(run_forecast(cfg), ConfigError);
}

TEST(Runner, PerCountryFailuresAreCollected) {
    TempTree tmp("failures");
    RunConfig cfg = fixture_config(tmp.root);
    cfg.countries.push_back("MISSING");  // no files for this one
    EXPECT_NE(run_forecast(cfg), 0);
    // the healthy population still produced its outputs
    EXPECT_TRUE(fs::exists(cfg.out_dir / "forecast_SYN1_female_default.csv"));
    EXPECT_FALSE(fs::exists(cfg.out_dir / "forecast_MISSING_female_default.csv"));
}

TEST(Runner, ParallelRunsMatchSerialRuns) {
    TempTree tmp("parallel");
    RunConfig serial = fixture_config(tmp.root, 2);
    serial.genders = {Gender::female, Gender::male};
    serial.out_dir = tmp.root / "out_serial";
    serial.jobs = 1;
    RunConfig parallel = serial;
    parallel.out_dir = tmp.root / "out_parallel";
    parallel.jobs = 4;

    EXPECT_EQ(run_forecast(serial), 0);
    EXPECT_EQ(run_forecast(parallel), 0);
    for (const std::string name :
         {"forecast_SYN1_female_default.csv", "forecast_SYN2_male_default.csv",
          "fitted_SYN2_female_default.csv", "artifacts_SYN1_male_default.txt"}) {
        EXPECT_EQ(slurp(serial.out_dir / name), slurp(parallel.out_dir / name))
            << name;
    }
}

TEST(Runner, DeathMatrixCsvRoundTripsExactly) {
    TempTree tmp("dmcsv");
    const RunConfig cfg = fixture_config(tmp.root);
    const PopulationData pop = load_population(cfg, "SYN1", Gender::female);
    const fs::path p = tmp.root / "m.csv";
    {
        std::ofstream out(p, std::ios::binary);
        out << death_matrix_csv(pop.train);
    }
    const DeathMatrix back = read_death_matrix_csv(p);
    ASSERT_EQ(back.year_count(), pop.train.year_count());
    EXPECT_EQ(back.years, pop.train.years);
    for (int t = 0; t < back.year_count(); ++t)
        for (int x = 0; x < back.parts(); ++x)
            EXPECT_EQ(back.values(t, x), pop.train.values(t, x));
}
