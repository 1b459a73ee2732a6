#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "codamort/hmd.hpp"
#include "codamort/lifetable.hpp"

namespace codamort {

/**
 * @brief Parameters of a synthetic mortality surface.
 *
 * The surface is a Gompertz-logistic hazard with an infant spike, a young
 * adult hump, age-dependent annual improvement and mild lognormal noise.
 * A few zero-rate cells at child ages and missing cells above age 105
 * exercise the imputation and smoothing paths. Real HMD data is
 * user-supplied; these fixtures stand in for it everywhere else.
 */
struct SyntheticSpec {
    std::string country = "SYN1";
    unsigned seed = 20240901;
    int year_begin = 1983;
    int year_end = 2018;
    bool plant_zeros = true;
    bool plant_missing_old = true;
    double noise_sd = 0.02;
};

namespace detail {

inline double synthetic_rate(int age, int year, Gender g,
                             const SyntheticSpec& spec, double noise) {
    const double male_factor = g == Gender::male ? 1.4 : 1.0;
    const double hazard = 9e-5 * male_factor * std::exp(0.088 * age);
    double m = hazard / (1.0 + hazard);
    m += (g == Gender::male ? 0.0052 : 0.0042) * std::exp(-1.1 * age);
    const double hump = (g == Gender::male ? 4.2e-4 : 1.6e-4) *
                        std::exp(-0.5 * std::pow((age - 20.0) / 7.0, 2));
    m += hump;
    const double improvement = 0.022 - 0.00012 * age;
    m *= std::exp(-improvement * (year - spec.year_begin));
    m *= std::exp(noise);
    return std::min(m, 0.95);
}

inline double synthetic_exposure(int age, int year, const SyntheticSpec& spec) {
    const double shape = 80000.0 * std::exp(-0.5 * std::pow((age - 35.0) / 30.0, 2));
    const double baseline = shape + 150.0;
    return baseline * (1.0 + 0.002 * (year - spec.year_begin));
}

}  // namespace detail

/// Deterministic synthetic observations for one gender.
inline MortalityGrid synthetic_grid(Gender gender, const SyntheticSpec& spec = {}) {
    const int ny = spec.year_end - spec.year_begin + 1;
    MortalityGrid grid;
    grid.gender = gender;
    grid.country = spec.country;
    grid.rates.resize(ny, age_count);
    grid.exposures.resize(ny, age_count);
    std::mt19937 rng(spec.seed + (gender == Gender::male ? 1 : 0));
    std::normal_distribution<double> gauss(0.0, spec.noise_sd);
    for (int t = 0; t < ny; ++t) {
        const int year = spec.year_begin + t;
        grid.years.push_back(year);
        for (int x = 0; x < age_count; ++x) {
            grid.rates(t, x) =
                detail::synthetic_rate(x, year, gender, spec, gauss(rng));
            grid.exposures(t, x) = detail::synthetic_exposure(x, year, spec);
        }
    }
    if (spec.plant_zeros) {
        // sparse child-age zeros for the multiplicative imputation to fill
        for (int t = 2; t < ny; t += 7)
            grid.rates(t, 9 + (t % 3)) = 0.0;
    }
    if (spec.plant_missing_old) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        grid.rates(1, 107) = nan;
        grid.rates(8, 109) = nan;
    }
    return grid;
}

/// Pack both genders of a synthetic population into HMD-layout tables.
inline std::pair<HmdTable, HmdTable> synthetic_tables(const SyntheticSpec& spec = {}) {
    const MortalityGrid f = synthetic_grid(Gender::female, spec);
    const MortalityGrid m = synthetic_grid(Gender::male, spec);
    const int ny = f.year_count();

    HmdTable rates, exposures;
    rates.header = {spec.country + ", Death rates (period 1x1)", "",
                    "  Year          Age             Female            Male           Total"};
    exposures.header = {spec.country + ", Exposure to risk (period 1x1)", "",
                        "  Year          Age             Female            Male           Total"};
    rates.years = exposures.years = f.years;
    rates.female = f.rates;
    rates.male = m.rates;
    rates.total.resize(ny, age_count);
    exposures.female = f.exposures;
    exposures.male = m.exposures;
    exposures.total = f.exposures + m.exposures;
    for (int t = 0; t < ny; ++t)
        for (int x = 0; x < age_count; ++x) {
            const double df = f.rates(t, x) * f.exposures(t, x);
            const double dm = m.rates(t, x) * m.exposures(t, x);
            rates.total(t, x) = (df + dm) / (f.exposures(t, x) + m.exposures(t, x));
        }
    return {rates, exposures};
}

/// Write {code}.Mx_1x1.txt and {code}.Exposures_1x1.txt under @p dir.
inline void write_hmd_fixture(const std::filesystem::path& dir,
                              const SyntheticSpec& spec = {}) {
    std::filesystem::create_directories(dir);
    auto [rates, exposures] = synthetic_tables(spec);
    {
        std::ofstream out(dir / (spec.country + ".Mx_1x1.txt"));
        out << serialize_hmd(rates, HmdKind::rates);
    }
    {
        std::ofstream out(dir / (spec.country + ".Exposures_1x1.txt"));
        out << serialize_hmd(exposures, HmdKind::exposures);
    }
}

}  // namespace codamort
