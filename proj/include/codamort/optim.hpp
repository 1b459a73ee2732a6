#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace codamort {

/// Result of a scalar minimization: location, value, evaluation count.
struct ScalarMinimum {
    double x = 0.0;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/**
 * @brief Golden-section search on [a, b].
 *
 * Derivative-free bracketing, safe for objectives with discontinuities
 * (e.g. penalty walls). Tracks the best point ever evaluated, which may
 * beat the final bracket midpoint when the objective is non-smooth.
 * Deterministic for a fixed objective.
 */
inline ScalarMinimum golden_section_minimize(
    const std::function<double(double)>& f, double a, double b,
    double width_tol = 1e-4, int max_iterations = 200) {
    static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    ScalarMinimum best;

    auto eval = [&](double x) {
        const double v = f(x);
        ++best.evaluations;
        if (v < best.value) {
            best.value = v;
            best.x = x;
        }
        return v;
    };

    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int it = 0; it < max_iterations && (b - a) > width_tol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    return best;
}

/// Options for nelder_mead_minimize.
struct NelderMeadOptions {
    double initial_step = 0.5;
    double f_tol = 1e-12;
    int max_evaluations = 4000;
    int restarts = 2;  ///< re-seed the simplex at the incumbent after convergence
};

/**
 * @brief Nelder-Mead simplex minimization, deterministic given the start.
 *
 * Standard reflection/expansion/contraction/shrink moves. Used where the
 * objective is smooth but gradients are inconvenient (transformed ARMA
 * likelihoods). Restarts rebuild the simplex around the incumbent to
 * escape premature collapse.
 */
inline Eigen::VectorXd nelder_mead_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {}) {
    const int n = static_cast<int>(x0.size());
    if (n == 0) return x0;

    int evals = 0;
    auto call = [&](const Eigen::VectorXd& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : 1e300;
    };

    Eigen::VectorXd incumbent = x0;
    double incumbent_value = call(incumbent);

    for (int round = 0; round <= opt.restarts; ++round) {
        std::vector<Eigen::VectorXd> pts(n + 1, incumbent);
        std::vector<double> vals(n + 1);
        vals[0] = incumbent_value;
        for (int i = 0; i < n; ++i) {
            pts[i + 1][i] += opt.initial_step;
            vals[i + 1] = call(pts[i + 1]);
        }

        auto order = [&] {
            for (int i = 1; i <= n; ++i) {  // insertion sort, simplexes are tiny
                Eigen::VectorXd p = pts[i];
                double v = vals[i];
                int j = i - 1;
                while (j >= 0 && vals[j] > v) {
                    pts[j + 1] = pts[j];
                    vals[j + 1] = vals[j];
                    --j;
                }
                pts[j + 1] = p;
                vals[j + 1] = v;
            }
        };
        order();

        while (evals < opt.max_evaluations) {
            if (std::abs(vals[n] - vals[0]) <=
                opt.f_tol * (std::abs(vals[0]) + opt.f_tol))
                break;

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < n; ++i) centroid += pts[i];
            centroid /= n;

            Eigen::VectorXd xr = centroid + (centroid - pts[n]);
            double fr = call(xr);
            if (fr < vals[0]) {
                Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
                double fe = call(xe);
                if (fe < fr) {
                    pts[n] = xe;
                    vals[n] = fe;
                } else {
                    pts[n] = xr;
                    vals[n] = fr;
                }
            } else if (fr < vals[n - 1]) {
                pts[n] = xr;
                vals[n] = fr;
            } else {
                Eigen::VectorXd xc = centroid + 0.5 * (pts[n] - centroid);
                double fc = call(xc);
                if (fc < vals[n]) {
                    pts[n] = xc;
                    vals[n] = fc;
                } else {
                    for (int i = 1; i <= n; ++i) {
                        pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                        vals[i] = call(pts[i]);
                    }
                }
            }
            order();
        }

        if (vals[0] < incumbent_value) {
            incumbent = pts[0];
            incumbent_value = vals[0];
        }
        if (evals >= opt.max_evaluations) break;
    }
    return incumbent;
}

}  // namespace codamort
