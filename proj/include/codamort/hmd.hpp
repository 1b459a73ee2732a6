#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "codamort/errors.hpp"
#include "codamort/lifetable.hpp"

namespace codamort {

enum class HmdKind { rates, exposures };

/**
 * @brief One parsed HMD 1x1 period file (Mx_1x1 or Exposures_1x1).
 *
 * Whitespace-delimited columns Year Age Female Male Total after the
 * header block; "." marks a missing value and the open age prints as
 * "110+". Data are stored as year-by-age matrices with NaN for missing.
 */
struct HmdTable {
    std::vector<std::string> header;
    std::vector<int> years;
    Eigen::MatrixXd female;  // years x 111
    Eigen::MatrixXd male;
    Eigen::MatrixXd total;

    const Eigen::MatrixXd& column(Gender g) const {
        return g == Gender::female ? female : male;
    }
};

namespace detail {

inline bool parse_hmd_value(const std::string& tok, double& out) {
    if (tok == ".") {
        out = std::numeric_limits<double>::quiet_NaN();
        return true;
    }
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size();
}

}  // namespace detail

inline HmdTable parse_hmd(std::istream& in, HmdKind /*kind*/) {
    HmdTable table;
    std::string line;
    int line_no = 0;
    bool found_data = false;

    // Header block: title line, blank line, then the column-name line.
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream probe(line);
        std::string first;
        probe >> first;
        if (first.size() == 4 &&
            first.find_first_not_of("0123456789") == std::string::npos) {
            found_data = true;
            break;
        }
        table.header.push_back(line);
        if (table.header.size() > 5)
            throw MalformedRow("parse_hmd: no data row within the first 5 lines");
    }
    if (!found_data) throw MalformedRow("parse_hmd: file has no data rows");

    struct Row {
        int year, age;
        double f, m, t;
    };
    std::vector<Row> rows;
    while (found_data) {
        std::istringstream ss(line);
        std::string ytok, atok, ftok, mtok, ttok;
        if (ss >> ytok) {
            if (!(ss >> atok >> ftok >> mtok >> ttok))
                throw MalformedRow("parse_hmd: line " + std::to_string(line_no) +
                                   ": expected 5 columns");
            Row r{};
            if (std::from_chars(ytok.data(), ytok.data() + ytok.size(),
                                r.year).ec != std::errc{})
                throw MalformedRow("parse_hmd: line " + std::to_string(line_no) +
                                   ": bad year '" + ytok + "'");
            if (atok == "110+") {
                r.age = open_age;
            } else if (std::from_chars(atok.data(), atok.data() + atok.size(),
                                       r.age).ec != std::errc{} ||
                       r.age < 0 || r.age > open_age) {
                throw MalformedRow("parse_hmd: line " + std::to_string(line_no) +
                                   ": bad age '" + atok + "'");
            }
            if (!detail::parse_hmd_value(ftok, r.f) ||
                !detail::parse_hmd_value(mtok, r.m) ||
                !detail::parse_hmd_value(ttok, r.t))
                throw MalformedRow("parse_hmd: line " + std::to_string(line_no) +
                                   ": bad value");
            rows.push_back(r);
        }
        found_data = static_cast<bool>(std::getline(in, line));
        if (found_data) ++line_no;
    }

    if (rows.empty()) throw MalformedRow("parse_hmd: file has no data rows");

    for (const Row& r : rows)
        if (table.years.empty() || table.years.back() != r.year) {
            if (!table.years.empty() && r.year != table.years.back() + 1)
                throw GapInYears("parse_hmd: year " + std::to_string(r.year) +
                                 " follows " + std::to_string(table.years.back()));
            table.years.push_back(r.year);
        }

    const int ny = static_cast<int>(table.years.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    table.female.setConstant(ny, age_count, nan);
    table.male.setConstant(ny, age_count, nan);
    table.total.setConstant(ny, age_count, nan);
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(ny, age_count);
    for (const Row& r : rows) {
        const int t = r.year - table.years.front();
        table.female(t, r.age) = r.f;
        table.male(t, r.age) = r.m;
        table.total(t, r.age) = r.t;
        seen(t, r.age) = 1;
    }
    for (int t = 0; t < ny; ++t)
        for (int x = 0; x < age_count; ++x)
            if (!seen(t, x))
                throw MissingAgeLadder("parse_hmd: year " +
                                       std::to_string(table.years[t]) +
                                       " is missing age " + std::to_string(x));
    return table;
}

/// Render a table back into the HMD text layout (used by fixtures and the
/// parse/serialize round-trip checks).
inline std::string serialize_hmd(const HmdTable& table, HmdKind kind) {
    std::string out;
    for (const std::string& h : table.header) out += h + "\n";
    char buf[160];
    auto fmt = [&](double v) -> std::string {
        if (std::isnan(v)) return ".";
        std::snprintf(buf, sizeof buf, kind == HmdKind::rates ? "%.6f" : "%.2f", v);
        return buf;
    };
    for (std::size_t t = 0; t < table.years.size(); ++t)
        for (int x = 0; x < age_count; ++x) {
            const std::string age =
                x == open_age ? "110+" : std::to_string(x);
            const std::string f = fmt(table.female(t, x));
            const std::string m = fmt(table.male(t, x));
            const std::string total = fmt(table.total(t, x));
            out += std::to_string(table.years[t]) + "\t" + age + "\t" + f +
                   "\t" + m + "\t" + total + "\n";
        }
    return out;
}

/// The 80:20 train/test split of 1983-2018.
struct StudyWindow {
    int train_begin = 1983;
    int train_end = 2010;
    int test_begin = 2011;
    int test_end = 2018;

    int train_years() const { return train_end - train_begin + 1; }
    int test_years() const { return test_end - test_begin + 1; }
    int total_years() const { return test_end - train_begin + 1; }

    void validate() const {
        if (train_begin > train_end || test_begin > test_end ||
            test_begin != train_end + 1)
            throw ConfigError("StudyWindow: expected contiguous train then test");
    }
};

/**
 * @brief Slice one gender and the study window out of parsed HMD tables.
 *
 * Missing cells below age 80 are kept as NaN (preprocessing raises on
 * them); missing cells above 80 are permitted, counted, and later refit
 * by the Kannisto smoother.
 */
inline MortalityGrid build_grid(const HmdTable& rates, const HmdTable& exposures,
                                Gender gender, const StudyWindow& window,
                                const std::string& country) {
    window.validate();
    for (const HmdTable* t : {&rates, &exposures}) {
        if (t->years.empty() || t->years.front() > window.train_begin ||
            t->years.back() < window.test_end)
            throw WindowNotCovered("build_grid: file covers " +
                                   (t->years.empty()
                                        ? std::string("nothing")
                                        : std::to_string(t->years.front()) + "-" +
                                              std::to_string(t->years.back())) +
                                   ", window needs " +
                                   std::to_string(window.train_begin) + "-" +
                                   std::to_string(window.test_end));
    }
    MortalityGrid grid;
    grid.gender = gender;
    grid.country = country;
    const int ny = window.total_years();
    grid.years.reserve(ny);
    grid.rates.resize(ny, age_count);
    grid.exposures.resize(ny, age_count);
    const int r_off = window.train_begin - rates.years.front();
    const int e_off = window.train_begin - exposures.years.front();
    for (int i = 0; i < ny; ++i) {
        grid.years.push_back(window.train_begin + i);
        grid.rates.row(i) = rates.column(gender).row(r_off + i);
        grid.exposures.row(i) = exposures.column(gender).row(e_off + i);
    }
    grid.validate();
    return grid;
}

}  // namespace codamort
