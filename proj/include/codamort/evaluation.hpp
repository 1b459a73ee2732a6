#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "codamort/errors.hpp"
#include "codamort/pipeline.hpp"

namespace codamort {

enum class Phase { train, test };

inline std::string to_string(Phase p) {
    return p == Phase::train ? "train" : "test";
}

namespace detail {
inline void require_comparable(const DeathMatrix& actual,
                               const DeathMatrix& predicted) {
    if (actual.values.rows() != predicted.values.rows() ||
        actual.values.cols() != predicted.values.cols())
        throw ShapeMismatch("evaluation: matrices are " +
                            std::to_string(actual.values.rows()) + "x" +
                            std::to_string(actual.values.cols()) + " vs " +
                            std::to_string(predicted.values.rows()) + "x" +
                            std::to_string(predicted.values.cols()));
    if (actual.years != predicted.years)
        throw ShapeMismatch("evaluation: year labels differ");
}
}  // namespace detail

/// Root mean squared error in percent of the radix (errors scaled by 100).
inline double rmse(const DeathMatrix& actual, const DeathMatrix& predicted) {
    detail::require_comparable(actual, predicted);
    const Eigen::ArrayXXd diff =
        100.0 * (predicted.values - actual.values).array();
    return std::sqrt(diff.square().mean());
}

/// Mean absolute error in percent of the radix.
inline double mae(const DeathMatrix& actual, const DeathMatrix& predicted) {
    detail::require_comparable(actual, predicted);
    const Eigen::ArrayXXd diff =
        100.0 * (predicted.values - actual.values).array();
    return diff.abs().mean();
}

enum class BreakdownAxis { year, age };

/// Per-slice errors along one axis; labels are years or ages.
struct BreakdownSeries {
    BreakdownAxis axis = BreakdownAxis::year;
    std::vector<int> labels;
    std::vector<double> rmse;
    std::vector<double> mae;
};

inline BreakdownSeries breakdown(const DeathMatrix& actual,
                                 const DeathMatrix& predicted,
                                 BreakdownAxis axis) {
    detail::require_comparable(actual, predicted);
    const Eigen::ArrayXXd diff =
        100.0 * (predicted.values - actual.values).array();
    BreakdownSeries out;
    out.axis = axis;
    if (axis == BreakdownAxis::year) {
        for (int t = 0; t < diff.rows(); ++t) {
            out.labels.push_back(actual.years[t]);
            out.rmse.push_back(std::sqrt(diff.row(t).square().mean()));
            out.mae.push_back(diff.row(t).abs().mean());
        }
    } else {
        for (int x = 0; x < diff.cols(); ++x) {
            out.labels.push_back(x);
            out.rmse.push_back(std::sqrt(diff.col(x).square().mean()));
            out.mae.push_back(diff.col(x).abs().mean());
        }
    }
    return out;
}

/**
 * @brief Accuracy summary for one forecast against observations.
 *
 * rmse dominates mae cell by cell (power-mean inequality). Overall values
 * pool every cell, which makes the overall MAE the cell-count-weighted
 * mean of the by-age values.
 */
struct ErrorReport {
    Phase phase = Phase::test;
    double rmse = 0.0;
    double mae = 0.0;
    BreakdownSeries by_year;
    BreakdownSeries by_age;
};

inline ErrorReport evaluate(const DeathMatrix& actual,
                            const DeathMatrix& predicted, Phase phase) {
    ErrorReport rep;
    rep.phase = phase;
    rep.rmse = rmse(actual, predicted);
    rep.mae = mae(actual, predicted);
    rep.by_year = breakdown(actual, predicted, BreakdownAxis::year);
    rep.by_age = breakdown(actual, predicted, BreakdownAxis::age);
    return rep;
}

/// One country's summary inside a pooled report.
struct CountryErrors {
    std::string country;
    double rmse = 0.0;
    double mae = 0.0;
};

/// Errors pooled over every cell of several countries. With equal panel
/// shapes this equals the unweighted cross-country aggregate.
struct MultiCountryReport {
    double rmse = 0.0;
    double mae = 0.0;
    std::vector<CountryErrors> by_country;
};

inline MultiCountryReport pool_reports(
    const std::vector<std::pair<std::string, ErrorReport>>& reports) {
    if (reports.empty()) throw TooShort("pool_reports: no reports");
    MultiCountryReport out;
    double sq = 0.0, abs_sum = 0.0;
    long cells = 0;
    for (const auto& [country, rep] : reports) {
        const long n = static_cast<long>(rep.by_year.labels.size()) *
                       static_cast<long>(rep.by_age.labels.size());
        sq += rep.rmse * rep.rmse * n;
        abs_sum += rep.mae * n;
        cells += n;
        out.by_country.push_back({country, rep.rmse, rep.mae});
    }
    out.rmse = std::sqrt(sq / cells);
    out.mae = abs_sum / cells;
    return out;
}

/**
 * @brief Pick the model with the lowest test RMSE; ties go to the first
 * entry, which by convention is the default ARIMA(0,1,1)+drift.
 */
inline int model_select(const std::vector<ErrorReport>& test_reports) {
    if (test_reports.empty())
        throw TooShort("model_select: no candidate reports");
    int best = 0;
    for (int i = 1; i < static_cast<int>(test_reports.size()); ++i)
        if (test_reports[i].rmse < test_reports[best].rmse) best = i;
    return best;
}

}  // namespace codamort
