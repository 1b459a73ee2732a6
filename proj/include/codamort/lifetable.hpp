#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "codamort/composition.hpp"
#include "codamort/errors.hpp"

namespace codamort {

/// Single-year ages 0..110, with 110 open-ended.
inline constexpr int age_count = 111;
inline constexpr int open_age = 110;

enum class Gender { male, female };

inline std::string to_string(Gender g) {
    return g == Gender::male ? "male" : "female";
}

/**
 * @brief Observed mortality panel for one country and gender.
 *
 * rates holds central death rates M_x, exposures the person-years E_x,
 * both as year-by-age matrices with NaN marking a missing cell.
 */
struct MortalityGrid {
    std::vector<int> years;
    Eigen::MatrixXd rates;      // years x 111
    Eigen::MatrixXd exposures;  // years x 111
    Gender gender = Gender::female;
    std::string country;

    int year_count() const { return static_cast<int>(years.size()); }

    void validate() const {
        if (rates.rows() != year_count() || exposures.rows() != year_count() ||
            rates.cols() != age_count || exposures.cols() != age_count)
            throw ShapeMismatch("MortalityGrid: matrices must be years x 111");
    }
};

/// Observed death counts D = M .* E. Cells with missing rate are NaN above
/// age 79 and an error below it.
inline Eigen::MatrixXd derive_deaths(const MortalityGrid& grid) {
    grid.validate();
    Eigen::MatrixXd deaths(grid.year_count(), age_count);
    for (int t = 0; t < grid.year_count(); ++t) {
        bool any_exposure = false;
        for (int x = 0; x < age_count; ++x)
            if (std::isfinite(grid.exposures(t, x)) && grid.exposures(t, x) > 0.0)
                any_exposure = true;
        if (!any_exposure)
            throw ExposureAllZero("derive_deaths: year " +
                                  std::to_string(grid.years[t]) +
                                  " has no positive exposure");
        for (int x = 0; x < age_count; ++x) {
            const double m = grid.rates(t, x);
            const double e = grid.exposures(t, x);
            if (x < 80 && (!std::isfinite(m) || !std::isfinite(e) || e <= 0.0))
                throw MissingCell("derive_deaths: year " +
                                  std::to_string(grid.years[t]) + " age " +
                                  std::to_string(x) +
                                  " lacks a usable rate/exposure below age 80");
            deaths(t, x) = (std::isfinite(m) && std::isfinite(e)) ? m * e
                           : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return deaths;
}

/**
 * @brief Kannisto logistic hazard fitted to old-age mortality.
 *
 * mu(x) = a e^{b(x-80)} / (1 + a e^{b(x-80)}), a,b > 0, which is strictly
 * increasing in age and bounded above by one.
 */
struct KannistoFit {
    double a = 0.0;
    double b = 0.0;
    int fit_lo = 80;
    int fit_hi = 100;

    double rate(int age) const {
        const double e = a * std::exp(b * (age - 80));
        return e / (1.0 + e);
    }
};

namespace detail {

struct KannistoData {
    std::vector<double> w;  // age - 80
    std::vector<double> deaths;
    std::vector<double> exposures;
};

inline double kannisto_loglik(const KannistoData& dat, double t1, double t2) {
    const double b = std::exp(t2);
    double ll = 0.0;
    for (std::size_t i = 0; i < dat.w.size(); ++i) {
        const double eta = t1 + b * dat.w[i];
        // log mu = eta - log(1+e^eta), computed stably
        const double log_mu = eta - (eta > 0 ? eta + std::log1p(std::exp(-eta))
                                             : std::log1p(std::exp(eta)));
        const double mu = std::exp(log_mu);
        ll += dat.deaths[i] * log_mu - dat.exposures[i] * mu;
    }
    return ll;
}

}  // namespace detail

/**
 * @brief Fit the Kannisto model by Poisson likelihood.
 *
 * Newton iterations on (ln a, ln b) with backtracking, seeded from a coarse
 * grid; stops when the gradient infinity-norm drops below 1e-10 or after
 * 200 iterations. The unconstrained parametrization keeps a, b positive.
 */
inline KannistoFit kannisto_fit(const Eigen::VectorXd& deaths_row,
                                const Eigen::VectorXd& exposure_row,
                                int fit_lo = 80, int fit_hi = 100) {
    detail::KannistoData dat;
    double total_deaths = 0.0;
    for (int x = fit_lo; x <= fit_hi; ++x) {
        const double d = deaths_row[x];
        const double e = exposure_row[x];
        if (!std::isfinite(d) || !std::isfinite(e) || e <= 0.0) continue;
        dat.w.push_back(x - 80.0);
        dat.deaths.push_back(d);
        dat.exposures.push_back(e);
        total_deaths += d;
    }
    if (dat.w.size() < 5)
        throw DataTooSparse("kannisto_fit: only " + std::to_string(dat.w.size()) +
                            " usable ages in [" + std::to_string(fit_lo) + "," +
                            std::to_string(fit_hi) + "]");
    if (total_deaths <= 0.0)
        throw FitDiverged("kannisto_fit: no deaths in the fit window");

    // Coarse grid seed over (a, b).
    double t1 = std::log(0.05), t2 = std::log(0.1);
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 15; ++i) {
        const double ca = std::exp(std::log(1e-4) +
                                   i * (std::log(2.0) - std::log(1e-4)) / 14.0);
        for (int j = 0; j < 15; ++j) {
            const double cb = 0.005 + j * (0.35 - 0.005) / 14.0;
            const double ll = detail::kannisto_loglik(dat, std::log(ca), std::log(cb));
            if (ll > best) {
                best = ll;
                t1 = std::log(ca);
                t2 = std::log(cb);
            }
        }
    }

    double ll = best;
    for (int iter = 0; iter < 200; ++iter) {
        const double b = std::exp(t2);
        double g1 = 0, g2 = 0, h11 = 0, h12 = 0, h22 = 0;
        for (std::size_t i = 0; i < dat.w.size(); ++i) {
            const double w = dat.w[i];
            const double eta = t1 + b * w;
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            const double d = dat.deaths[i], e = dat.exposures[i];
            const double lp = (1.0 - mu) * (d - e * mu);
            const double lpp = -mu * (1.0 - mu) * ((d - e * mu) + e * (1.0 - mu));
            g1 += lp;
            g2 += lp * b * w;
            h11 += lpp;
            h12 += lpp * b * w;
            h22 += lpp * b * w * b * w + lp * b * w;
        }
        if (std::max(std::abs(g1), std::abs(g2)) < 1e-10) break;

        const double det = h11 * h22 - h12 * h12;
        double s1, s2;
        if (std::abs(det) > 1e-300 && h11 < 0) {
            s1 = -(h22 * g1 - h12 * g2) / det;
            s2 = -(-h12 * g1 + h11 * g2) / det;
        } else {
            s1 = g1;  // fallback: ascent direction
            s2 = g2;
        }
        double step = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 50; ++bt) {
            const double ll_new = detail::kannisto_loglik(dat, t1 + step * s1, t2 + step * s2);
            if (std::isfinite(ll_new) && ll_new > ll) {
                t1 += step * s1;
                t2 += step * s2;
                ll = ll_new;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    if (!std::isfinite(ll))
        throw FitDiverged("kannisto_fit: likelihood is not finite");

    KannistoFit fit;
    fit.a = std::exp(t1);
    fit.b = std::exp(t2);
    fit.fit_lo = fit_lo;
    fit.fit_hi = fit_hi;
    return fit;
}

/// Smoothed rates for ages 80..110 of one year of the grid.
inline Eigen::VectorXd kannisto_smooth(const MortalityGrid& grid, int year,
                                       int fit_lo = 80, int fit_hi = 100) {
    grid.validate();
    int row = -1;
    for (int t = 0; t < grid.year_count(); ++t)
        if (grid.years[t] == year) row = t;
    if (row < 0)
        throw MissingCell("kannisto_smooth: year " + std::to_string(year) +
                          " not in grid");
    Eigen::VectorXd deaths(age_count);
    for (int x = 0; x < age_count; ++x) {
        const double m = grid.rates(row, x);
        const double e = grid.exposures(row, x);
        deaths[x] = (std::isfinite(m) && std::isfinite(e))
                        ? m * e
                        : std::numeric_limits<double>::quiet_NaN();
    }
    const KannistoFit fit =
        kannisto_fit(deaths, grid.exposures.row(row), fit_lo, fit_hi);
    Eigen::VectorXd out(age_count - 80);
    for (int x = 80; x < age_count; ++x) out[x - 80] = fit.rate(x);
    return out;
}

/**
 * @brief Replace zero death counts row by row.
 *
 * delta is half the smallest positive count observed in the first
 * @p reference_rows rows (the training period), expressed on the count
 * scale; each row containing zeros goes through multiplicative_replace,
 * which preserves its total exactly. Rows without zeros are returned
 * untouched.
 */
inline Eigen::MatrixXd impute_zeros(const Eigen::MatrixXd& deaths,
                                    int reference_rows = -1) {
    if (reference_rows < 0 || reference_rows > deaths.rows())
        reference_rows = static_cast<int>(deaths.rows());
    double min_pos = std::numeric_limits<double>::infinity();
    for (int t = 0; t < reference_rows; ++t)
        for (int x = 0; x < deaths.cols(); ++x) {
            const double v = deaths(t, x);
            if (std::isfinite(v) && v > 0.0 && v < min_pos) min_pos = v;
        }
    if (!std::isfinite(min_pos))
        throw AllZeroRow("impute_zeros: no positive death count in the reference rows");
    const double delta = min_pos / 2.0;

    Eigen::MatrixXd out = deaths;
    for (int t = 0; t < out.rows(); ++t) {
        bool has_zero = false, all_zero = true;
        for (int x = 0; x < out.cols(); ++x) {
            const double v = out(t, x);
            if (v == 0.0) has_zero = true;
            if (v > 0.0) all_zero = false;
        }
        if (all_zero)
            throw AllZeroRow("impute_zeros: row " + std::to_string(t) +
                             " has no deaths at all");
        if (has_zero) out.row(t) = multiplicative_replace(out.row(t), delta);
    }
    return out;
}

namespace detail {

struct A0Segment {
    double lo, hi, intercept, slope;
};

// Andreev-Kingkade style coefficients keyed to the infant rate range.
inline const A0Segment* a0_table(Gender g, int& n) {
    static const A0Segment male[] = {
        {0.0, 0.02300, 0.14929, -1.99545},
        {0.02300, 0.08307, 0.02832, 3.26021},
        {0.08307, std::numeric_limits<double>::infinity(), 0.29915, 0.0},
    };
    static const A0Segment female[] = {
        {0.0, 0.01724, 0.14903, -2.05527},
        {0.01724, 0.06891, 0.04667, 3.88089},
        {0.06891, std::numeric_limits<double>::infinity(), 0.31411, 0.0},
    };
    n = 3;
    return g == Gender::male ? male : female;
}

}  // namespace detail

/**
 * @brief Average years lived in the first year of life.
 *
 * Each training year's infant rate picks its own formula segment; the
 * per-year values are then averaged, so a series that straddles two
 * regimes contributes through both.
 */
inline double compute_a0(const std::vector<double>& m0_series, Gender gender) {
    if (m0_series.empty())
        throw TooShort("compute_a0: empty infant-rate series");
    int n_seg = 0;
    const detail::A0Segment* seg = detail::a0_table(gender, n_seg);
    double acc = 0.0;
    for (double m0 : m0_series) {
        if (!(m0 >= 0.0))
            throw NonPositiveEntry("compute_a0: negative infant rate");
        for (int i = 0; i < n_seg; ++i)
            if (m0 >= seg[i].lo && m0 < seg[i].hi) {
                acc += seg[i].intercept + seg[i].slope * m0;
                break;
            }
    }
    return acc / static_cast<double>(m0_series.size());
}

/**
 * @brief Period life table with radix one.
 *
 * d sums to the radix; q at the open age is one so the last interval
 * absorbs every remaining survivor.
 */
struct LifeTable {
    int year = 0;
    Eigen::VectorXd m;  // central death rate
    Eigen::VectorXd a;  // average years lived in the interval by decedents
    Eigen::VectorXd q;  // death probability
    Eigen::VectorXd l;  // survivors
    Eigen::VectorXd d;  // deaths
    static constexpr double radix = 1.0;
};

inline LifeTable build_lifetable(const Eigen::VectorXd& m, double a0) {
    if (m.size() != age_count)
        throw ShapeMismatch("build_lifetable: expected 111 rates, got " +
                            std::to_string(m.size()));
    LifeTable lt;
    lt.m = m;
    lt.a = Eigen::VectorXd::Constant(age_count, 0.5);
    lt.a[0] = a0;
    lt.q.resize(age_count);
    lt.l.resize(age_count);
    lt.d.resize(age_count);
    for (int x = 0; x < age_count; ++x) {
        if (!(m[x] > 0.0) || !std::isfinite(m[x]))
            throw InvalidRate("build_lifetable: rate at age " + std::to_string(x) +
                              " is " + std::to_string(m[x]));
        if (x == open_age) {
            lt.q[x] = 1.0;
        } else {
            lt.q[x] = m[x] / (1.0 + (1.0 - lt.a[x]) * m[x]);
            if (!(lt.q[x] > 0.0 && lt.q[x] <= 1.0))
                throw InvalidRate("build_lifetable: q at age " + std::to_string(x) +
                                  " = " + std::to_string(lt.q[x]) +
                                  " is outside (0, 1]");
        }
    }
    double l = LifeTable::radix;
    for (int x = 0; x < age_count; ++x) {
        lt.l[x] = l;
        lt.d[x] = l * lt.q[x];
        l -= lt.d[x];
    }
    return lt;
}

/// Knobs for the preprocessing chain.
struct PreprocessOptions {
    int kannisto_fit_lo = 80;
    int kannisto_fit_hi = 100;
    /// Rows (years) used both for the imputation delta and for a0; the
    /// training period. Nonpositive means the whole grid.
    int training_rows = -1;
};

/// Everything the forecasting pipeline needs from raw observations.
struct Preprocessed {
    std::vector<LifeTable> tables;  // one per grid year
    Eigen::MatrixXd rates;          // smoothed + imputed, years x 111
    double a0 = 0.0;
    std::vector<KannistoFit> kannisto;  // one per grid year
};

/**
 * @brief Full preprocessing: Kannisto smoothing above 80, multiplicative
 * zero replacement below, a0 from the training-period infant rates, then
 * one life table per year.
 */
inline Preprocessed preprocess(const MortalityGrid& grid,
                               const PreprocessOptions& opt = {}) {
    grid.validate();
    const int ty = grid.year_count();
    const int train_rows =
        (opt.training_rows > 0 && opt.training_rows <= ty) ? opt.training_rows : ty;

    const Eigen::MatrixXd observed = derive_deaths(grid);

    Preprocessed out;
    out.kannisto.reserve(ty);
    Eigen::MatrixXd counts = observed;
    Eigen::MatrixXd smooth_old(ty, age_count - 80);
    for (int t = 0; t < ty; ++t) {
        Eigen::VectorXd deaths_row = observed.row(t);
        const KannistoFit fit = kannisto_fit(deaths_row, grid.exposures.row(t),
                                             opt.kannisto_fit_lo, opt.kannisto_fit_hi);
        out.kannisto.push_back(fit);
        for (int x = 80; x < age_count; ++x) {
            const double mu = fit.rate(x);
            smooth_old(t, x - 80) = mu;
            const double e = grid.exposures(t, x);
            counts(t, x) = (std::isfinite(e) && e > 0.0) ? mu * e : 0.0;
        }
    }

    const Eigen::MatrixXd imputed = impute_zeros(counts, train_rows);

    out.rates.resize(ty, age_count);
    for (int t = 0; t < ty; ++t) {
        for (int x = 0; x < 80; ++x)
            out.rates(t, x) = imputed(t, x) / grid.exposures(t, x);
        for (int x = 80; x < age_count; ++x)
            out.rates(t, x) = smooth_old(t, x - 80);
    }

    std::vector<double> m0(out.rates.col(0).data(),
                           out.rates.col(0).data() + train_rows);
    out.a0 = compute_a0(m0, grid.gender);

    out.tables.reserve(ty);
    for (int t = 0; t < ty; ++t) {
        LifeTable lt = build_lifetable(out.rates.row(t), out.a0);
        lt.year = grid.years[t];
        out.tables.push_back(std::move(lt));
    }
    return out;
}

}  // namespace codamort
