#include <gtest/gtest.h>

#include <random>

#include "codamort/evaluation.hpp"
#include "codamort/pipeline.hpp"
#include "codamort/synthetic.hpp"
#include "support/pipeline_fixtures.hpp"
#include "support/test_util.hpp"

using namespace codamort;
using codamort::testing::max_abs_diff;
using codamort::testing::random_composition;
using codamort::testing::rank1_fixture;

namespace {

std::vector<LifeTable> prep_tables(int years = 28) {
    SyntheticSpec spec;
    spec.year_end = spec.year_begin + years - 1;
    PreprocessOptions opt;
    opt.training_rows = years;
    return preprocess(synthetic_grid(Gender::female, spec), opt).tables;
}

}  // namespace

TEST(Assemble, BuildsUnitSumRows) {
    const std::vector<LifeTable> tables = prep_tables();
    const DeathMatrix dm = assemble(tables);
    EXPECT_EQ(dm.year_count(), 28);
    EXPECT_EQ(dm.parts(), 111);
    for (int t = 0; t < dm.year_count(); ++t)
        EXPECT_NEAR(dm.values.row(t).sum(), 1.0, 1e-12);
    EXPECT_NO_THROW(dm.validate());
}

TEST(Assemble, SingleTableGivesOneRow) {
    const std::vector<LifeTable> tables = prep_tables(1);
    const DeathMatrix dm = assemble(tables);
    EXPECT_EQ(dm.year_count(), 1);
    EXPECT_EQ(dm.parts(), 111);
}

TEST(Assemble, DetectsGapsAndBadRows) {
    std::vector<LifeTable> tables = prep_tables(12);
    tables[5].year += 1;
    EXPECT_THROW(assemble(tables), GapInYears);

    std::vector<LifeTable> tables2 = prep_tables(12);
    tables2[3].d[40] = 0.0;
    EXPECT_THROW(assemble(tables2), RowNotComposition);
}

TEST(Assemble, InvariantToCommonScalingBeforeClosure) {
    std::vector<LifeTable> tables = prep_tables(12);
    const DeathMatrix base = assemble(tables);
    for (LifeTable& lt : tables) lt.d *= 7.5;
    const DeathMatrix scaled = assemble(tables);
    EXPECT_LT((base.values - scaled.values).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Center, IdenticalRowsCenterToUniform) {
    std::mt19937_64 rng(51);
    const Composition x = random_composition(rng, 10);
    DeathMatrix dm;
    dm.values.resize(5, 10);
    for (int t = 0; t < 5; ++t) {
        dm.values.row(t) = x.parts();
        dm.years.push_back(2000 + t);
    }
    const CenteredMatrix f = center(dm);
    EXPECT_LT(max_abs_diff(f.center, x.parts()), 1e-14);
    for (int t = 0; t < 5; ++t)
        EXPECT_LT(max_abs_diff(f.values.row(t),
                               Composition::uniform(10).parts()),
                  1e-13);
}

TEST(Center, TwoByTwoToy) {
    DeathMatrix dm;
    dm.values.resize(2, 2);
    dm.values << 0.25, 0.75, 0.75, 0.25;
    dm.years = {2000, 2001};
    const CenteredMatrix f = center(dm);
    EXPECT_NEAR(f.center[0], 0.5, 1e-14);
    EXPECT_NEAR(f.center[1], 0.5, 1e-14);
    EXPECT_LT((f.values - dm.values).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Center, PerturbingBackRecoversRows) {
    std::mt19937_64 rng(52);
    DeathMatrix dm;
    dm.values.resize(8, 15);
    for (int t = 0; t < 8; ++t) {
        dm.values.row(t) = random_composition(rng, 15).parts();
        dm.years.push_back(1990 + t);
    }
    const CenteredMatrix f = center(dm);
    const Composition ctr{f.center};
    for (int t = 0; t < 8; ++t) {
        const Composition row{Eigen::VectorXd(f.values.row(t))};
        EXPECT_LT(max_abs_diff(perturb(row, ctr).parts(), dm.values.row(t)),
                  1e-12);
    }
}

TEST(TransformMatrix, RoundTripAllTags) {
    std::mt19937_64 rng(53);
    DeathMatrix dm;
    dm.values.resize(12, 30);
    for (int t = 0; t < 12; ++t) {
        dm.values.row(t) = random_composition(rng, 30).parts();
        dm.years.push_back(1990 + t);
    }
    const CenteredMatrix f = center(dm);
    for (const Transform& tf : {Transform::CLR(), Transform::ILR(),
                                 Transform::Alpha(0.4), Transform::Alpha(1.0)}) {
        const TransformedMatrix h = transform_matrix(f, tf);
        EXPECT_EQ(h.values.cols(), tf.kind == Transform::Kind::clr ? 30 : 29);
        const DeathMatrix back = inverse_matrix(h, f.center);
        EXPECT_LT((back.values - dm.values).cwiseAbs().maxCoeff(), 1e-9)
            << tf.name();
    }
}

TEST(TransformMatrix, ClrOfConstantMatrixIsZero) {
    std::mt19937_64 rng(54);
    const Composition x = random_composition(rng, 9);
    DeathMatrix dm;
    dm.values.resize(4, 9);
    for (int t = 0; t < 4; ++t) {
        dm.values.row(t) = x.parts();
        dm.years.push_back(2000 + t);
    }
    const TransformedMatrix h = transform_matrix(center(dm), Transform::CLR());
    EXPECT_LT(h.values.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TransformMatrix, AlphaZeroEqualsIlrExactly) {
    std::mt19937_64 rng(55);
    DeathMatrix dm;
    dm.values.resize(6, 12);
    for (int t = 0; t < 6; ++t) {
        dm.values.row(t) = random_composition(rng, 12).parts();
        dm.years.push_back(2000 + t);
    }
    const CenteredMatrix f = center(dm);
    const TransformedMatrix a = transform_matrix(f, Transform::Alpha(0.0));
    const TransformedMatrix b = transform_matrix(f, Transform::ILR());
    for (int t = 0; t < 6; ++t)
        for (int j = 0; j < a.values.cols(); ++j)
            EXPECT_EQ(a.values(t, j), b.values(t, j));
}

TEST(SvdRankK, ExactRankOne) {
    Eigen::VectorXd kappa(6), beta(9);
    kappa << 3, 2, 1, 0, -1, -2;
    beta << 0.5, 0.4, 0.3, 0.2, 0.1, -0.1, -0.4, -0.5, -0.5;
    beta.normalize();
    TransformedMatrix h;
    h.values = kappa * beta.transpose();
    h.parts = 10;
    h.transform = Transform::ILR();
    h.years = {2000, 2001, 2002, 2003, 2004, 2005};

    const SvdFactorization fac = svd_rank_k(h, 1);
    EXPECT_NEAR(fac.explained_variance[0], 1.0, 1e-12);
    EXPECT_LT((fac.reconstruct() - h.values).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(fac.kappa.col(0).norm(), fac.singular_values[0], 1e-10);
    EXPECT_NEAR(fac.beta.col(0).norm(), 1.0, 1e-12);
}

TEST(SvdRankK, FullRankReconstructsExactly) {
    std::mt19937_64 rng(56);
    std::normal_distribution<double> g(0, 1);
    TransformedMatrix h;
    h.values.resize(7, 11);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 11; ++j) h.values(i, j) = g(rng);
    h.parts = 12;
    h.transform = Transform::ILR();
    h.years = {1, 2, 3, 4, 5, 6, 7};
    const SvdFactorization fac = svd_rank_k(h, 7);
    EXPECT_LT((fac.reconstruct() - h.values).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(fac.explained_variance[6], 1.0, 1e-12);
    for (int k = 1; k < 7; ++k) {
        EXPECT_GE(fac.explained_variance[k], fac.explained_variance[k - 1]);
        EXPECT_GE(fac.singular_values[k - 1], fac.singular_values[k]);
    }
    EXPECT_THROW(svd_rank_k(h, 8), RankTooLarge);
    EXPECT_THROW(svd_rank_k(h, 0), RankTooLarge);
}

TEST(ForecastMatrix, LinearScoresAdvanceLinearly) {
    Eigen::VectorXd kappa(20), beta(5);
    for (int t = 0; t < 20; ++t) kappa[t] = 0.5 * t - 3.0;
    beta << 0.6, 0.5, -0.3, -0.4, 0.2;
    beta.normalize();
    TransformedMatrix h;
    h.values = kappa * beta.transpose();
    h.parts = 6;
    h.transform = Transform::ILR();
    for (int t = 0; t < 20; ++t) h.years.push_back(1991 + t);

    const SvdFactorization fac = svd_rank_k(h, 1);
    const TransformedMatrix h_star =
        forecast_matrix(fac, ModelChoice::default_model, 8, h);
    EXPECT_EQ(h_star.values.rows(), 8);
    EXPECT_EQ(h_star.years.front(), 2011);
    for (int j = 0; j < 8; ++j)
        EXPECT_LT(max_abs_diff(h_star.values.row(j),
                               (0.5 * (20 + j) - 3.0) * beta.transpose()),
                  1e-8);
    // a second component with zero singular value changes nothing
    const SvdFactorization fac2 = svd_rank_k(h, 2);
    EXPECT_LT(fac2.singular_values[1], 1e-12);
    const TransformedMatrix h_star2 =
        forecast_matrix(fac2, ModelChoice::default_model, 8, h);
    EXPECT_LT((h_star2.values - h_star.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(JumpoffAdjust, ShiftMechanics) {
    TransformedMatrix h_star;
    h_star.values.resize(3, 4);
    h_star.values << 1, 2, 3, 4, 2, 3, 4, 5, 3, 4, 5, 6;
    h_star.parts = 5;
    h_star.transform = Transform::ILR();
    h_star.years = {2011, 2012, 2013};

    Eigen::VectorXd observed(4), fitted(4);
    observed << 1, 1, 1, 1;
    fitted << 1, 1, 1, 1;
    const TransformedMatrix same = jumpoff_adjust(h_star, observed, fitted);
    EXPECT_LT((same.values - h_star.values).cwiseAbs().maxCoeff(), 1e-15);

    fitted << 0.5, 1.5, 0.0, 2.0;
    const TransformedMatrix shifted = jumpoff_adjust(h_star, observed, fitted);
    const Eigen::RowVectorXd shift = (observed - fitted).transpose();
    for (int t = 0; t < 3; ++t)
        EXPECT_LT(max_abs_diff(shifted.values.row(t),
                               h_star.values.row(t) + shift),
                  1e-15);
    // increments between horizons are untouched
    EXPECT_LT(((shifted.values.row(2) - shifted.values.row(1)) -
               (h_star.values.row(2) - h_star.values.row(1)))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
}

TEST(Pipeline, JumpoffReproducesLastObservedRow) {
    const DeathMatrix dm = assemble(prep_tables());
    for (const Transform& tf :
         {Transform::CLR(), Transform::Alpha(0.5)}) {
        PipelineOptions opt;
        opt.transform = tf;
        opt.rank = 4;
        const PipelineResult res = run_pipeline(dm, opt);
        const int last = dm.year_count() - 1;
        EXPECT_LT(max_abs_diff(res.fitted.values.row(last), dm.values.row(last)),
                  1e-12)
            << tf.name();
    }
}

TEST(Pipeline, NoiseFreeRank1Identifiability) {
    std::mt19937_64 rng(57);
    const Composition c = random_composition(rng, 10);
    for (const Transform& tf :
         {Transform::CLR(), Transform::ILR(), Transform::Alpha(0.5),
          Transform::Alpha(1.0)}) {
        const auto fx = rank1_fixture(tf, 20, 8, 10, 0.03, c);
        PipelineOptions opt;
        opt.transform = tf;
        opt.rank = 1;
        opt.horizon = 8;
        const PipelineResult res = run_pipeline(fx.train, opt);
        EXPECT_LT(rmse(fx.future, res.forecasts) / 100.0, 1e-6) << tf.name();
        EXPECT_EQ(res.artifacts.clamp_events, 0u);
    }
}

TEST(Pipeline, ForecastRowsAreCompositions) {
    const DeathMatrix dm = assemble(prep_tables());
    for (const Transform& tf : {Transform::CLR(), Transform::ILR(),
                                 Transform::Alpha(0.3), Transform::Alpha(1.0)}) {
        PipelineOptions opt;
        opt.transform = tf;
        opt.rank = 7;
        const PipelineResult res = run_pipeline(dm, opt);
        EXPECT_NO_THROW(res.forecasts.validate()) << tf.name();
        EXPECT_EQ(res.forecasts.year_count(), 8);
        if (tf.kind == Transform::Kind::clr) {
            // forecast rows stay on the zero-sum hyperplane
            const CenteredMatrix f = center(dm);
            const TransformedMatrix h = transform_matrix(f, tf);
            const SvdFactorization fac = svd_rank_k(h, 7);
            const TransformedMatrix h_star =
                forecast_matrix(fac, ModelChoice::default_model, 8, h);
            for (int j = 0; j < 8; ++j)
                EXPECT_NEAR(h_star.values.row(j).sum(), 0.0, 1e-8);
        }
    }
}

TEST(Pipeline, ClrAndIlrForecastsCoincide) {
    // ILR is an orthonormal re-coordinatization of the CLR hyperplane, so
    // SVD scores, ARIMA fits and inverted forecasts must agree.
    const DeathMatrix dm = assemble(prep_tables());
    PipelineOptions opt;
    opt.rank = 5;
    opt.transform = Transform::CLR();
    const PipelineResult clr_res = run_pipeline(dm, opt);
    opt.transform = Transform::ILR();
    const PipelineResult ilr_res = run_pipeline(dm, opt);
    EXPECT_LT((clr_res.forecasts.values - ilr_res.forecasts.values)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-8);
    for (int k = 0; k < 5; ++k)
        EXPECT_NEAR(clr_res.artifacts.svd.singular_values[k],
                    ilr_res.artifacts.svd.singular_values[k], 1e-9);
}

TEST(Pipeline, RejectsShortPanels) {
    const DeathMatrix dm = assemble(prep_tables(9));
    PipelineOptions opt;
    EXPECT_THROW(run_pipeline(dm, opt), SeriesTooShort);
}
