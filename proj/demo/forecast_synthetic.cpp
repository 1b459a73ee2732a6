// Minimal end-to-end walkthrough on synthetic data: preprocess one
// population, forecast with CLR and a fixed alpha, and compare test errors.

#include <cstdio>

#include "codamort/codamort.hpp"

using namespace codamort;

int main() {
    SyntheticSpec spec;
    spec.country = "DEMO";
    const MortalityGrid grid = synthetic_grid(Gender::female, spec);

    PreprocessOptions popt;
    popt.training_rows = 28;  // 1983-2010
    const Preprocessed prep = preprocess(grid, popt);
    const DeathMatrix full = assemble(prep.tables);

    DeathMatrix train, test;
    train.values = full.values.topRows(28);
    train.years.assign(full.years.begin(), full.years.begin() + 28);
    test.values = full.values.bottomRows(8);
    test.years.assign(full.years.end() - 8, full.years.end());

    std::printf("%-12s %10s %10s\n", "transform", "RMSE(%)", "MAE(%)");
    for (const Transform& tf :
         {Transform::CLR(), Transform::ILR(), Transform::Alpha(0.5)}) {
        PipelineOptions opt;
        opt.transform = tf;
        opt.rank = 7;
        opt.horizon = 8;
        const PipelineResult res = run_pipeline(train, opt);
        std::printf("%-12s %10.4f %10.4f\n", tf.name().c_str(),
                    rmse(test, res.forecasts), mae(test, res.forecasts));
    }
    return 0;
}
