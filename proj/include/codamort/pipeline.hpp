#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cstddef>
#include <string>
#include <vector>

#include "codamort/arima.hpp"
#include "codamort/composition.hpp"
#include "codamort/errors.hpp"
#include "codamort/lifetable.hpp"
#include "codamort/transforms.hpp"

namespace codamort {

/// Which map carries compositions into unconstrained real space.
struct Transform {
    enum class Kind { clr, ilr, alpha };
    Kind kind = Kind::clr;
    double alpha = 0.0;

    static Transform CLR() { return {Kind::clr, 0.0}; }
    static Transform ILR() { return {Kind::ilr, 0.0}; }
    static Transform Alpha(double a) {
        AlphaParam check(a);  // range validation
        return {Kind::alpha, check.value};
    }

    /// Transformed row width for D compositional parts.
    int transformed_cols(int parts) const {
        return kind == Kind::clr ? parts : parts - 1;
    }

    std::string name() const {
        switch (kind) {
            case Kind::clr: return "clr";
            case Kind::ilr: return "ilr";
            default: {
                char buf[48];
                std::snprintf(buf, sizeof buf, "alpha(%.4f)", alpha);
                return buf;
            }
        }
    }
};

/**
 * @brief Year-by-age matrix of life-table death counts.
 *
 * Every row is a composition: strictly positive, summing to the unit
 * radix.
 */
struct DeathMatrix {
    Eigen::MatrixXd values;  // T x D
    std::vector<int> years;

    int year_count() const { return static_cast<int>(values.rows()); }
    int parts() const { return static_cast<int>(values.cols()); }

    Composition row(int t) const { return Composition(values.row(t)); }

    void validate() const {
        if (static_cast<int>(years.size()) != year_count())
            throw ShapeMismatch("DeathMatrix: year labels do not match rows");
        for (int t = 0; t < year_count(); ++t) {
            try {
                Composition check{Eigen::VectorXd(values.row(t))};
            } catch (const Error& e) {
                throw RowNotComposition("DeathMatrix row " + std::to_string(t) +
                                        " (" + std::to_string(years[t]) +
                                        "): " + e.what());
            }
        }
    }
};

/// Stack per-year life-table deaths into a DeathMatrix, closing each row.
inline DeathMatrix assemble(const std::vector<LifeTable>& tables) {
    if (tables.empty()) throw TooShort("assemble: no life tables");
    DeathMatrix dm;
    dm.values.resize(static_cast<Eigen::Index>(tables.size()), age_count);
    dm.years.reserve(tables.size());
    for (std::size_t i = 0; i < tables.size(); ++i) {
        if (i > 0 && tables[i].year != tables[i - 1].year + 1)
            throw GapInYears("assemble: years " + std::to_string(tables[i - 1].year) +
                             " and " + std::to_string(tables[i].year) +
                             " are not consecutive");
        try {
            dm.values.row(i) = closure(tables[i].d).parts();
        } catch (const Error& e) {
            throw RowNotComposition("assemble: year " + std::to_string(tables[i].year) +
                                    ": " + e.what());
        }
        dm.years.push_back(tables[i].year);
    }
    return dm;
}

/// Rows centred by the column-specific geometric means.
struct CenteredMatrix {
    Eigen::MatrixXd values;  // T x D, rows are compositions
    Eigen::VectorXd center;  // the closed geometric-mean composition
    std::vector<int> years;

    int year_count() const { return static_cast<int>(values.rows()); }
    int parts() const { return static_cast<int>(values.cols()); }
};

inline CenteredMatrix center(const DeathMatrix& dm) {
    dm.validate();
    const int t_count = dm.year_count();
    const int d = dm.parts();
    Eigen::VectorXd log_mean = Eigen::VectorXd::Zero(d);
    for (int t = 0; t < t_count; ++t)
        log_mean += dm.values.row(t).array().log().matrix();
    log_mean /= t_count;
    const Composition ctr = clr_inv(log_mean);  // closure of exp(mean log)

    CenteredMatrix out;
    out.center = ctr.parts();
    out.years = dm.years;
    out.values.resize(t_count, d);
    for (int t = 0; t < t_count; ++t)
        out.values.row(t) =
            perturb_sub(dm.row(t), ctr).parts();
    return out;
}

/// Matrix of transformed (unconstrained) coordinates.
struct TransformedMatrix {
    Eigen::MatrixXd values;  // T x M
    Transform transform;
    int parts = 0;  ///< D of the originating compositions
    std::vector<int> years;

    int year_count() const { return static_cast<int>(values.rows()); }
};

inline TransformedMatrix transform_matrix(const CenteredMatrix& f,
                                          const Transform& tf) {
    TransformedMatrix out;
    out.transform = tf;
    out.parts = f.parts();
    out.years = f.years;
    out.values.resize(f.year_count(), tf.transformed_cols(f.parts()));
    const HelmertSubMatrix h = helmert_sub(f.parts());
    for (int t = 0; t < f.year_count(); ++t) {
        const Composition row{Eigen::VectorXd(f.values.row(t))};
        switch (tf.kind) {
            case Transform::Kind::clr: out.values.row(t) = clr(row); break;
            case Transform::Kind::ilr: out.values.row(t) = ilr(row, h); break;
            case Transform::Kind::alpha:
                out.values.row(t) = alpha_transform(row, AlphaParam(tf.alpha), h);
                break;
        }
    }
    return out;
}

/**
 * @brief Map transformed rows back to the simplex and add back the center.
 *
 * Under InversePolicy::clamp, components outside the alpha-transform image
 * are floored and counted in @p clamped instead of raising
 * NegativeDetectionLimit.
 */
inline DeathMatrix inverse_matrix(const TransformedMatrix& h_star,
                                  const Eigen::VectorXd& center_parts,
                                  InversePolicy policy = InversePolicy::strict,
                                  std::size_t* clamped = nullptr) {
    const int d = h_star.parts;
    if (center_parts.size() != d)
        throw DimensionMismatch("inverse_matrix: center has " +
                                std::to_string(center_parts.size()) +
                                " parts, expected " + std::to_string(d));
    const Composition ctr{center_parts};
    const HelmertSubMatrix h = helmert_sub(d);

    DeathMatrix out;
    out.years = h_star.years;
    out.values.resize(h_star.year_count(), d);
    for (int t = 0; t < h_star.year_count(); ++t) {
        const Eigen::VectorXd z = h_star.values.row(t);
        Composition back = [&] {
            switch (h_star.transform.kind) {
                case Transform::Kind::clr: return clr_inv(z);
                case Transform::Kind::ilr: return ilr_inv(z, h);
                default:
                    return alpha_inverse(z, AlphaParam(h_star.transform.alpha), d, h,
                                         policy, clamped);
            }
        }();
        out.values.row(t) = perturb(back, ctr).parts();
    }
    return out;
}

/**
 * @brief Truncated SVD of the transformed matrix.
 *
 * kappa carries the singular values (kappa_k = s_k u_k), leaving beta
 * orthonormal; component signs are fixed so that each beta's largest
 * entry is positive, keeping outputs reproducible.
 */
struct SvdFactorization {
    int rank = 0;
    Eigen::VectorXd singular_values;     // the leading K
    Eigen::MatrixXd kappa;               // T x K scores
    Eigen::MatrixXd beta;                // M x K age loadings
    Eigen::VectorXd explained_variance;  // cumulative ratios, length K

    Eigen::VectorXd fitted_row(int t) const {
        return beta * kappa.row(t).transpose();
    }

    Eigen::MatrixXd reconstruct() const { return kappa * beta.transpose(); }
};

inline SvdFactorization svd_rank_k(const TransformedMatrix& h, int k) {
    const int t_count = h.year_count();
    const int m = static_cast<int>(h.values.cols());
    if (k < 1 || k > std::min(t_count, m))
        throw RankTooLarge("svd_rank_k: rank " + std::to_string(k) +
                           " not in [1, " + std::to_string(std::min(t_count, m)) +
                           "]");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.values,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double total = s.squaredNorm();

    SvdFactorization fac;
    fac.rank = k;
    fac.singular_values = s.head(k);
    fac.kappa.resize(t_count, k);
    fac.beta.resize(m, k);
    fac.explained_variance.resize(k);
    double running = 0.0;
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd u = svd.matrixU().col(j);
        Eigen::VectorXd v = svd.matrixV().col(j);
        int arg_max = 0;
        v.cwiseAbs().maxCoeff(&arg_max);
        if (v[arg_max] < 0.0) {
            u = -u;
            v = -v;
        }
        fac.kappa.col(j) = s[j] * u;
        fac.beta.col(j) = v;
        running += s[j] * s[j];
        fac.explained_variance[j] = total > 0.0 ? running / total : 1.0;
    }
    return fac;
}

enum class ModelChoice { default_model, auto_model };

inline std::string to_string(ModelChoice m) {
    return m == ModelChoice::default_model ? "default" : "auto";
}

/// Score forecasts plus the models that produced them.
struct ScoreForecast {
    Eigen::MatrixXd kappa_hat;  // h x K
    std::vector<ArimaFit> models;
};

inline ScoreForecast forecast_scores(const SvdFactorization& fac,
                                     ModelChoice choice, int h) {
    ScoreForecast out;
    const int k = fac.rank;
    out.kappa_hat.resize(h, k);
    out.models.reserve(k);
    for (int j = 0; j < k; ++j) {
        KappaSeries series;
        series.label = j;
        series.values.assign(fac.kappa.col(j).data(),
                             fac.kappa.col(j).data() + fac.kappa.rows());
        ArimaFit f = choice == ModelChoice::default_model
                         ? fit(series, ArimaSpec{})
                         : auto_fit(series);
        const std::vector<double> fc = forecast(f, h);
        for (int i = 0; i < h; ++i) out.kappa_hat(i, j) = fc[i];
        out.models.push_back(std::move(f));
    }
    return out;
}

/// Extrapolate every score series h steps and rebuild transformed rows.
inline TransformedMatrix forecast_matrix(const SvdFactorization& fac,
                                         ModelChoice choice, int h,
                                         const TransformedMatrix& fitted_on) {
    if (h < 1) throw Error("forecast_matrix: horizon must be >= 1");
    const ScoreForecast sf = forecast_scores(fac, choice, h);
    TransformedMatrix out;
    out.transform = fitted_on.transform;
    out.parts = fitted_on.parts;
    out.values = sf.kappa_hat * fac.beta.transpose();
    const int last = fitted_on.years.empty() ? 0 : fitted_on.years.back();
    out.years.reserve(h);
    for (int i = 1; i <= h; ++i) out.years.push_back(last + i);
    return out;
}

/**
 * @brief Shift forecasts so the model reproduces the last observed year.
 *
 * The shift (observed minus fitted, both in transformed space) is constant
 * across the horizon, so forecast increments are untouched.
 */
inline TransformedMatrix jumpoff_adjust(const TransformedMatrix& h_star,
                                        const Eigen::VectorXd& h_last_observed,
                                        const Eigen::VectorXd& h_last_fitted) {
    if (h_last_observed.size() != h_star.values.cols() ||
        h_last_fitted.size() != h_star.values.cols())
        throw DimensionMismatch("jumpoff_adjust: row width mismatch");
    TransformedMatrix out = h_star;
    const Eigen::RowVectorXd shift =
        (h_last_observed - h_last_fitted).transpose();
    out.values.rowwise() += shift;
    return out;
}

/// Options for one pipeline run.
struct PipelineOptions {
    Transform transform = Transform::CLR();
    int rank = 7;
    ModelChoice model = ModelChoice::default_model;
    int horizon = 8;
    bool jumpoff = true;
    bool with_fitted = true;
    InversePolicy inverse_policy = InversePolicy::clamp;
};

/// Everything estimated during a pipeline run.
struct FitArtifacts {
    Transform transform;
    Eigen::VectorXd center;
    SvdFactorization svd;
    std::vector<ArimaFit> kappa_models;
    std::size_t clamp_events = 0;
};

struct PipelineResult {
    DeathMatrix forecasts;
    DeathMatrix fitted;  // training years, jump-off adjusted when enabled
    FitArtifacts artifacts;
};

/**
 * @brief The full forecasting core.
 *
 * Center by geometric means, transform, factorize at rank K, extrapolate
 * each score series, shift to the jump-off year, invert, and un-center.
 */
inline PipelineResult run_pipeline(const DeathMatrix& train,
                                   const PipelineOptions& opt) {
    if (train.year_count() < 10)
        throw SeriesTooShort("run_pipeline: need at least 10 training years, got " +
                             std::to_string(train.year_count()));
    const CenteredMatrix centered = center(train);
    const TransformedMatrix h = transform_matrix(centered, opt.transform);
    const SvdFactorization fac = svd_rank_k(h, opt.rank);

    const ScoreForecast sf = forecast_scores(fac, opt.model, opt.horizon);

    TransformedMatrix h_star;
    h_star.transform = h.transform;
    h_star.parts = h.parts;
    h_star.values = sf.kappa_hat * fac.beta.transpose();
    h_star.years.reserve(opt.horizon);
    for (int i = 1; i <= opt.horizon; ++i)
        h_star.years.push_back(train.years.back() + i);

    const int last = train.year_count() - 1;
    if (opt.jumpoff) {
        const Eigen::VectorXd observed_last = h.values.row(last);
        const Eigen::VectorXd fitted_last = fac.fitted_row(last);
        h_star = jumpoff_adjust(h_star, observed_last, fitted_last);
    }

    PipelineResult res;
    res.artifacts.transform = opt.transform;
    res.artifacts.center = centered.center;
    res.artifacts.svd = fac;
    res.artifacts.kappa_models = sf.models;

    res.forecasts = inverse_matrix(h_star, centered.center, opt.inverse_policy,
                                   &res.artifacts.clamp_events);

    if (opt.with_fitted) {
        TransformedMatrix h_fit;
        h_fit.transform = h.transform;
        h_fit.parts = h.parts;
        h_fit.years = train.years;
        h_fit.values = fac.reconstruct();
        if (opt.jumpoff) {
            const Eigen::RowVectorXd shift =
                (h.values.row(last) - fac.fitted_row(last).transpose());
            h_fit.values.rowwise() += shift;
        }
        res.fitted = inverse_matrix(h_fit, centered.center, opt.inverse_policy,
                                    &res.artifacts.clamp_events);
    }
    return res;
}

}  // namespace codamort
