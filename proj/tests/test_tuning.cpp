#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "codamort/tuning.hpp"
#include "support/pipeline_fixtures.hpp"
#include "support/test_util.hpp"

using namespace codamort;
using codamort::testing::alpha_generated_fixture;
using codamort::testing::rank1_fixture;
using codamort::testing::random_composition;

TEST(ExpandingWindows, PaperLayout) {
    const std::vector<WindowSplit> w = expanding_windows(28);
    ASSERT_EQ(w.size(), 10u);
    // iteration 1: 1983-1997 train, 1998-2001 validation (0-based rows)
    EXPECT_EQ(w[0].train_begin, 0);
    EXPECT_EQ(w[0].train_end, 15);
    EXPECT_EQ(w[0].val_begin, 15);
    EXPECT_EQ(w[0].val_end, 19);
    // iteration 10: 1983-2006 train, 2007-2010 validation
    EXPECT_EQ(w[9].train_end, 24);
    EXPECT_EQ(w[9].val_begin, 24);
    EXPECT_EQ(w[9].val_end, 28);
    for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_EQ(w[i].val_begin, w[i].train_end);  // never overlaps its train
        EXPECT_EQ(w[i].val_end - w[i].val_begin, 4);
        EXPECT_LE(w[i].val_end, 28);  // never reads outside the training set
        if (i > 0) { EXPECT_EQ(w[i].val_begin, w[i - 1].val_begin + 1); }
    }
}

TEST(ExpandingWindows, RejectsWrongLength) {
    EXPECT_THROW(expanding_windows(27), WrongLength);
    EXPECT_THROW(expanding_windows(36), WrongLength);
}

TEST(TuningObjective, AlphaZeroMatchesIlrPipelineExactly) {
    const DeathMatrix dm = alpha_generated_fixture(0.5, 28, 10, 0.05, 3);
    const double obj = tuning_objective(0.0, dm, 2);

    // hand-rolled ILR objective over the same windows
    PipelineOptions opt;
    opt.transform = Transform::ILR();
    opt.rank = 2;
    opt.model = ModelChoice::default_model;
    opt.horizon = 4;
    opt.jumpoff = false;
    opt.with_fitted = false;
    opt.inverse_policy = InversePolicy::strict;
    double acc = 0.0;
    for (const WindowSplit& w : expanding_windows(28)) {
        DeathMatrix sub, val;
        sub.values = dm.values.middleRows(w.train_begin, w.train_end - w.train_begin);
        sub.years.assign(dm.years.begin() + w.train_begin,
                         dm.years.begin() + w.train_end);
        val.values = dm.values.middleRows(w.val_begin, w.val_end - w.val_begin);
        val.years.assign(dm.years.begin() + w.val_begin,
                         dm.years.begin() + w.val_end);
        acc += rmse(val, run_pipeline(sub, opt).forecasts);
    }
    EXPECT_EQ(obj, acc / 10.0);
}

TEST(TuningObjective, DeterministicAndSelfConsistent) {
    const DeathMatrix dm = alpha_generated_fixture(0.5, 28, 10, 0.05, 3);
    std::vector<double> per_iter;
    const double a = tuning_objective(0.37, dm, 2, {}, &per_iter);
    const double b = tuning_objective(0.37, dm, 2);
    EXPECT_EQ(a, b);  // bit-identical
    ASSERT_EQ(per_iter.size(), 10u);
    double mean = 0.0;
    for (double v : per_iter) mean += v;
    EXPECT_EQ(a, mean / 10.0);
}

TEST(TuningObjective, GeneratingAlphaBeatsEndpoints) {
    const DeathMatrix dm = alpha_generated_fixture(0.5, 28, 10, 0.05, 3);
    const double at_half = tuning_objective(0.5, dm, 2);
    EXPECT_LE(at_half, tuning_objective(0.0, dm, 2));
    EXPECT_LE(at_half, tuning_objective(1.0, dm, 2));
}

TEST(TuningObjective, PenalizesNegativeDetectionLimits) {
    // the strongly spread power fixture drives alpha = 1 outside the image
    std::mt19937_64 rng(99);
    const Composition c = random_composition(rng, 10);
    const auto fx = rank1_fixture(Transform::Alpha(0.5), 28, 0, 10, 0.04, c);
    EXPECT_TRUE(std::isinf(tuning_objective(1.0, fx.train, 1)));
    EXPECT_TRUE(std::isfinite(tuning_objective(0.5, fx.train, 1)));
}

TEST(OptimizeAlpha, RecoversGeneratingAlpha) {
    const DeathMatrix dm = alpha_generated_fixture(0.5, 28, 10, 0.05, 3);
    const TuningResult r = optimize_alpha(dm, 2);
    EXPECT_NEAR(r.optimal_alpha, 0.5, 0.05);
    EXPECT_FALSE(r.all_penalized);
    EXPECT_GT(r.evaluations, 21);
    // the reported value re-evaluates bit-identically
    EXPECT_EQ(r.avg_validation_rmse, tuning_objective(r.optimal_alpha, dm, 2));
    ASSERT_EQ(r.per_iteration_rmse.size(), 10u);
    double mean = 0.0;
    for (double v : r.per_iteration_rmse) mean += v;
    EXPECT_EQ(r.avg_validation_rmse, mean / 10.0);
}

TEST(OptimizeAlpha, NeverReturnsPenalizedOptimum) {
    std::mt19937_64 rng(99);
    const Composition c = random_composition(rng, 10);
    const auto fx = rank1_fixture(Transform::Alpha(0.5), 28, 0, 10, 0.04, c);
    const TuningResult r = optimize_alpha(fx.train, 1);
    EXPECT_TRUE(std::isfinite(r.avg_validation_rmse));
    EXPECT_FALSE(r.all_penalized);
}
