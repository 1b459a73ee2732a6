#pragma once

#include <random>
#include <vector>

#include "codamort/arima.hpp"

namespace codamort::testing {

/// Simulate y with Delta y_t = drift + eps_t + theta * eps_{t-1}.
inline std::vector<double> simulate_arima011_drift(std::mt19937_64& rng, int n,
                                                   double theta, double drift,
                                                   double sigma) {
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<double> y(n);
    double prev_eps = gauss(rng);
    double level = 0.0;
    for (int t = 0; t < n; ++t) {
        const double eps = gauss(rng);
        level += drift + eps + theta * prev_eps;
        prev_eps = eps;
        y[t] = level;
    }
    return y;
}

/// Brute-force model search over (p,d,q) <= (3,2,3) with p+q <= 5 and both
/// constant-term variants; the independent oracle the stepwise search is
/// held against.
inline ArimaFit exhaustive_best(const KappaSeries& series) {
    const ArimaFit* best = nullptr;
    std::vector<ArimaFit> fits;
    fits.reserve(160);
    for (int d = 0; d <= 2; ++d)
        for (int p = 0; p <= 3; ++p)
            for (int q = 0; q <= 3; ++q) {
                if (p + q > 5) continue;
                for (bool drift : {false, true}) {
                    if (drift && d > 1) continue;
                    if (static_cast<int>(series.values.size()) <= p + q + d + 2)
                        continue;
                    fits.push_back(fit(series, ArimaSpec{p, d, q, drift}));
                }
            }
    for (const ArimaFit& f : fits)
        if (!best || detail::fit_better(f, *best)) best = &f;
    return *best;
}

}  // namespace codamort::testing
