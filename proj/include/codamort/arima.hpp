#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "codamort/errors.hpp"
#include "codamort/optim.hpp"

namespace codamort {

/**
 * @brief ARIMA(p,d,q) order, optionally with a constant term.
 *
 * The constant acts on the d-times differenced series, so for d = 1 it is
 * a drift (linear trend of the original series) and for d = 0 a mean.
 */
struct ArimaSpec {
    int p = 0;
    int d = 1;
    int q = 1;
    bool drift = true;

    void validate() const {
        if (p < 0 || q < 0 || p + q > 5)
            throw Error("ArimaSpec: need p, q >= 0 with p + q <= 5");
        if (d < 0 || d > 2) throw Error("ArimaSpec: d must be 0, 1 or 2");
        if (drift && d > 1) throw Error("ArimaSpec: drift requires d <= 1");
    }

    int parameter_count() const { return p + q + (drift ? 1 : 0) + 1; }  // + sigma2

    std::string name() const {
        std::string s = "ARIMA(" + std::to_string(p) + "," + std::to_string(d) +
                        "," + std::to_string(q) + ")";
        if (drift) s += d == 0 ? "+mean" : "+drift";
        return s;
    }
};

/// One transformed-space score series to extrapolate.
struct KappaSeries {
    std::vector<double> values;
    int label = 0;
};

/**
 * @brief A fitted ARIMA model.
 *
 * ar holds the AR coefficients (stationary), ma the MA coefficients in the
 * (1 + theta_1 B + ...) convention (invertible). Enough filter state is
 * retained to produce conditional-mean forecasts.
 */
struct ArimaFit {
    ArimaSpec spec;
    Eigen::VectorXd ar;
    Eigen::VectorXd ma;
    double drift_coef = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    int n = 0;  ///< length of the differenced series
    bool degenerate = false;

    // forecasting state
    Eigen::VectorXd predicted_state;  ///< one-step state prediction, original units
    std::vector<double> series_tail;  ///< last d values of the undifferenced series

    std::string serialize() const;
};

namespace detail {

inline std::vector<double> difference(const std::vector<double>& y, int d) {
    std::vector<double> w = y;
    for (int k = 0; k < d && w.size() > 1; ++k) {
        std::vector<double> next(w.size() - 1);
        for (std::size_t i = 0; i + 1 < w.size(); ++i) next[i] = w[i + 1] - w[i];
        w = std::move(next);
    }
    return w;
}

/// Durbin-Levinson map from partial autocorrelations to a stationary
/// AR coefficient vector (Monahan's parametrization).
inline Eigen::VectorXd pacf_to_ar(const Eigen::VectorXd& pac) {
    const int k = static_cast<int>(pac.size());
    Eigen::VectorXd coef = pac;
    Eigen::VectorXd work = pac;
    for (int j = 1; j < k; ++j) {
        for (int i = 0; i < j; ++i) work[i] = coef[i] - pac[j] * coef[j - 1 - i];
        for (int i = 0; i < j; ++i) coef[i] = work[i];
    }
    return coef;
}

/// Companion-form transition matrix of the ARMA state recursion: AR
/// coefficients down the first column, ones on the superdiagonal.
inline Eigen::MatrixXd transition_matrix(const Eigen::VectorXd& ar,
                                         const Eigen::VectorXd& ma) {
    const int p = static_cast<int>(ar.size());
    const int q = static_cast<int>(ma.size());
    const int r = std::max(p, q + 1);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(r, r);
    for (int i = 0; i < p; ++i) t(i, 0) = ar[i];
    for (int i = 0; i + 1 < r; ++i) t(i, i + 1) = 1.0;
    return t;
}

struct FilterResult {
    double loglik = -std::numeric_limits<double>::infinity();
    double sigma2 = 0.0;
    Eigen::VectorXd predicted_state;  // for the step after the sample
};

// The state dimension is max(p, q+1) <= 6 under the p + q <= 5 bound, so
// the hot filter runs on stack arrays.
inline constexpr int max_state = 6;

/// In-place Gaussian elimination with partial pivoting; a is n x n
/// row-major, b the right-hand side. Returns false on a singular system.
inline bool solve_small(double* a, double* b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col]))
                pivot = row;
        if (std::abs(a[pivot * n + col]) < 1e-250) return false;
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (int row = col + 1; row < n; ++row) {
            const double factor = a[row * n + col] * inv;
            if (factor == 0.0) continue;
            for (int j = col; j < n; ++j) a[row * n + j] -= factor * a[col * n + j];
            b[row] -= factor * b[col];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        double acc = b[col];
        for (int j = col + 1; j < n; ++j) acc -= a[col * n + j] * b[j];
        b[col] = acc / a[col * n + col];
    }
    return true;
}

/// Exact Gaussian likelihood of a zero-mean ARMA series via the Kalman
/// filter with the innovation variance concentrated out. Initialization is
/// the stationary state covariance, solved from the discrete Lyapunov
/// equation.
inline FilterResult arma_filter(const std::vector<double>& w,
                                const Eigen::VectorXd& ar,
                                const Eigen::VectorXd& ma) {
    const int p_order = static_cast<int>(ar.size());
    const int q_order = static_cast<int>(ma.size());
    const int r = std::max(p_order, q_order + 1);
    const int n = static_cast<int>(w.size());

    double t[max_state][max_state] = {};
    double rv[max_state] = {};
    double rr[max_state][max_state];
    for (int i = 0; i < p_order; ++i) t[i][0] = ar[i];
    for (int i = 0; i + 1 < r; ++i) t[i][i + 1] = 1.0;
    rv[0] = 1.0;
    for (int j = 0; j < q_order; ++j) rv[j + 1] = ma[j];
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) rr[i][j] = rv[i] * rv[j];

    // vec(P) solves (I - T (x) T) vec(P) = vec(RR').
    const int n2 = r * r;
    double lyap[max_state * max_state * max_state * max_state];
    double vec_p[max_state * max_state];
    for (int i = 0; i < n2 * n2; ++i) lyap[i] = 0.0;
    for (int i = 0; i < n2; ++i) lyap[i * n2 + i] = 1.0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            for (int k = 0; k < r; ++k)
                for (int l = 0; l < r; ++l)
                    lyap[(i + j * r) * n2 + (k + l * r)] -= t[i][k] * t[j][l];
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < r; ++i) vec_p[i + j * r] = rr[i][j];

    FilterResult res;
    if (!solve_small(lyap, vec_p, n2)) return res;  // -inf loglik

    double pm[max_state][max_state];
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < r; ++i) pm[i][j] = vec_p[i + j * r];
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j)
            pm[i][j] = pm[j][i] = 0.5 * (pm[i][j] + pm[j][i]);

    double a[max_state] = {};
    double sumlog = 0.0, ssq = 0.0;
    double kg[max_state], a_post[max_state];
    double p_post[max_state][max_state], tp[max_state][max_state];
    for (int step = 0; step < n; ++step) {
        double f = pm[0][0];
        if (!(f > 1e-300) || !std::isfinite(f)) f = 1e-300;
        const double v = w[step] - a[0];
        sumlog += std::log(f);
        ssq += v * v / f;
        const double inv_f = 1.0 / f;
        for (int i = 0; i < r; ++i) kg[i] = pm[i][0] * inv_f;
        for (int i = 0; i < r; ++i) a_post[i] = a[i] + kg[i] * v;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) p_post[i][j] = pm[i][j] - kg[i] * pm[0][j];
        for (int i = 0; i < r; ++i) {
            double acc = 0.0;
            for (int j = 0; j < r; ++j) acc += t[i][j] * a_post[j];
            a[i] = acc;
        }
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                double acc = 0.0;
                for (int k = 0; k < r; ++k) acc += t[i][k] * p_post[k][j];
                tp[i][j] = acc;
            }
        for (int i = 0; i < r; ++i)
            for (int j = i; j < r; ++j) {
                double acc = rr[i][j];
                for (int k = 0; k < r; ++k) acc += tp[i][k] * t[j][k];
                pm[i][j] = pm[j][i] = acc;
            }
    }

    res.sigma2 = ssq / n;
    const double s2 = std::max(res.sigma2, 1e-280);
    res.loglik = -0.5 * (n * std::log(2.0 * M_PI) + n + n * std::log(s2) + sumlog);
    res.predicted_state.resize(r);
    for (int i = 0; i < r; ++i) res.predicted_state[i] = a[i];
    return res;
}

struct TransformedParams {
    Eigen::VectorXd ar;
    Eigen::VectorXd ma;
    double mean = 0.0;
};

inline TransformedParams unpack_params(const Eigen::VectorXd& x, int p, int q,
                                       bool drift) {
    TransformedParams tp;
    tp.ar = pacf_to_ar(x.head(p).array().tanh().matrix());
    // Invertible MA in the (1 + theta B) convention: negate a stationary
    // coefficient vector.
    tp.ma = -pacf_to_ar(x.segment(p, q).array().tanh().matrix());
    if (drift) tp.mean = x[p + q];
    return tp;
}

/// Large stand-in log-likelihood for an exactly deterministic series, so
/// that degenerate fits dominate comparisons while AICc penalties still
/// separate model sizes.
inline constexpr double degenerate_loglik = 1e15;

inline double aicc_from(double loglik, int k, int n) {
    if (n - k - 1 <= 0) return std::numeric_limits<double>::infinity();
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}

}  // namespace detail

/**
 * @brief Fit an ARIMA model by exact maximum likelihood.
 *
 * The d-times differenced series is normalized, the AR/MA coefficients are
 * searched through a partial-autocorrelation transform that enforces
 * stationarity and invertibility, and a Nelder-Mead pass is polished by
 * Newton steps on numerical derivatives until the gradient infinity-norm
 * falls below 1e-8. Deterministic for fixed inputs.
 */
inline ArimaFit fit(const KappaSeries& series, const ArimaSpec& spec) {
    spec.validate();
    const int nobs = static_cast<int>(series.values.size());
    if (nobs < 10)
        throw SeriesTooShort("arima fit: series has " + std::to_string(nobs) +
                             " points, need at least 10");
    if (nobs <= spec.p + spec.q + spec.d + 2)
        throw SeriesTooShort("arima fit: series of length " + std::to_string(nobs) +
                             " too short for " + spec.name());

    const std::vector<double> w = detail::difference(series.values, spec.d);
    const int n = static_cast<int>(w.size());

    ArimaFit out;
    out.spec = spec;
    out.n = n;
    out.series_tail.assign(series.values.end() - spec.d, series.values.end());

    // Normalize: fit on (w - m0)/s for scale equivariance and optimizer health.
    double m0 = 0.0;
    if (spec.drift) {
        for (double v : w) m0 += v;
        m0 /= n;
    }
    double s2 = 0.0;
    for (double v : w) s2 += (v - m0) * (v - m0);
    const double s = std::sqrt(s2 / n);

    const int k = spec.parameter_count();
    if (s < 1e-154) {  // deterministic series: variance is exactly zero
        out.ar = Eigen::VectorXd::Zero(spec.p);
        out.ma = Eigen::VectorXd::Zero(spec.q);
        out.drift_coef = m0;
        out.sigma2 = 0.0;
        out.degenerate = true;
        out.loglik = detail::degenerate_loglik;
        out.aicc = detail::aicc_from(out.loglik, k, n);
        out.predicted_state =
            Eigen::VectorXd::Zero(std::max(spec.p, spec.q + 1));
        return out;
    }

    std::vector<double> wn(w.size());
    for (int i = 0; i < n; ++i) wn[i] = (w[i] - m0) / s;

    const int dim = spec.p + spec.q + (spec.drift ? 1 : 0);
    auto objective = [&](const Eigen::VectorXd& x) -> double {
        const detail::TransformedParams tp =
            detail::unpack_params(x, spec.p, spec.q, spec.drift);
        std::vector<double> centered(wn.size());
        for (int i = 0; i < n; ++i) centered[i] = wn[i] - tp.mean;
        return -detail::arma_filter(centered, tp.ar, tp.ma).loglik;
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    if (dim > 0) {
        NelderMeadOptions nm;
        nm.initial_step = 0.5;
        nm.f_tol = 1e-11;
        nm.max_evaluations = 400 * dim + 100;
        nm.restarts = 1;
        x = nelder_mead_minimize(objective, x, nm);

        // Newton polish with central differences; stop at grad inf-norm 1e-8.
        double fx = objective(x);
        for (int iter = 0; iter < 40; ++iter) {
            const double h = 1e-5;
            Eigen::VectorXd g(dim);
            Eigen::MatrixXd hess(dim, dim);
            std::vector<double> fp(dim), fm(dim);
            for (int i = 0; i < dim; ++i) {
                Eigen::VectorXd xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                fp[i] = objective(xp);
                fm[i] = objective(xm);
                g[i] = (fp[i] - fm[i]) / (2 * h);
                hess(i, i) = (fp[i] - 2 * fx + fm[i]) / (h * h);
            }
            if (g.lpNorm<Eigen::Infinity>() < 1e-8) break;
            for (int i = 0; i < dim; ++i)
                for (int j = i + 1; j < dim; ++j) {
                    Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
                    xpp[i] += h; xpp[j] += h;
                    xpm[i] += h; xpm[j] -= h;
                    xmp[i] -= h; xmp[j] += h;
                    xmm[i] -= h; xmm[j] -= h;
                    hess(i, j) = hess(j, i) =
                        (objective(xpp) - objective(xpm) - objective(xmp) +
                         objective(xmm)) /
                        (4 * h * h);
                }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
            Eigen::VectorXd step = ldlt.solve(-g);
            double scale = 1.0;
            bool moved = false;
            for (int bt = 0; bt < 30; ++bt) {
                const double f_new = objective(x + scale * step);
                if (f_new < fx) {
                    x += scale * step;
                    fx = f_new;
                    moved = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!moved) break;
        }
    }

    const detail::TransformedParams tp =
        detail::unpack_params(x, spec.p, spec.q, spec.drift);
    std::vector<double> centered(wn.size());
    for (int i = 0; i < n; ++i) centered[i] = wn[i] - tp.mean;
    const detail::FilterResult fr = detail::arma_filter(centered, tp.ar, tp.ma);

    out.ar = tp.ar;
    out.ma = tp.ma;
    out.drift_coef = spec.drift ? m0 + s * tp.mean : 0.0;
    out.sigma2 = s * s * fr.sigma2;
    out.loglik = fr.loglik - n * std::log(s);
    out.aicc = detail::aicc_from(out.loglik, k, n);
    out.predicted_state = s * fr.predicted_state;
    return out;
}

inline ArimaFit fit(const KappaSeries& series) { return fit(series, ArimaSpec{}); }

/// Conditional-mean forecasts, h steps ahead.
inline std::vector<double> forecast(const ArimaFit& fit, int h) {
    if (h < 1) throw Error("forecast: horizon must be >= 1");
    const Eigen::MatrixXd t = detail::transition_matrix(fit.ar, fit.ma);
    Eigen::VectorXd state = fit.predicted_state;
    if (state.size() != t.rows()) state = Eigen::VectorXd::Zero(t.rows());

    std::vector<double> tail = fit.series_tail;  // last d observed values
    std::vector<double> out;
    out.reserve(h);
    for (int j = 0; j < h; ++j) {
        const double w_hat = fit.drift_coef + state[0];
        state = t * state;
        double y_hat = w_hat;
        if (fit.spec.d == 1) {
            y_hat = tail[0] + w_hat;
            tail[0] = y_hat;
        } else if (fit.spec.d == 2) {
            const double diff = (tail[1] - tail[0]) + w_hat;
            y_hat = tail[1] + diff;
            tail[0] = tail[1];
            tail[1] = y_hat;
        }
        out.push_back(y_hat);
    }
    return out;
}

namespace detail {

/// Successive variance-reduction test: difference while it shrinks the
/// sample variance, up to twice.
inline int choose_differencing(const std::vector<double>& y) {
    auto variance = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        m /= v.size();
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return s / v.size();
    };
    int d = 0;
    std::vector<double> cur = y;
    double var = variance(cur);
    for (int cand = 1; cand <= 2; ++cand) {
        if (cur.size() < 12) break;
        std::vector<double> nxt = difference(cur, 1);
        const double v = variance(nxt);
        if (v < var) {
            d = cand;
            var = v;
            cur = nxt;
        } else {
            break;
        }
    }
    return d;
}

/// Tie-break: lower AICc, then fewer parameters, then lower d, then lower p.
inline bool fit_better(const ArimaFit& a, const ArimaFit& b) {
    if (a.aicc < b.aicc - 1e-6) return true;
    if (a.aicc > b.aicc + 1e-6) return false;
    const int ka = a.spec.p + a.spec.q + (a.spec.drift ? 1 : 0);
    const int kb = b.spec.p + b.spec.q + (b.spec.drift ? 1 : 0);
    if (ka != kb) return ka < kb;
    if (a.spec.d != b.spec.d) return a.spec.d < b.spec.d;
    return a.spec.p < b.spec.p;
}

}  // namespace detail

namespace detail {

/// Neighborhood search over (p, q, constant) at a fixed differencing
/// order, from a fixed fan of starting models. Deterministic.
inline ArimaFit stepwise_at_d(const KappaSeries& series, int d) {
    const int nobs = static_cast<int>(series.values.size());
    std::map<std::tuple<int, int, bool>, ArimaFit> seen;
    auto try_fit = [&](int p, int q, bool drift) -> const ArimaFit* {
        if (p < 0 || q < 0 || p + q > 5) return nullptr;
        if (drift && d > 1) return nullptr;
        if (nobs <= p + q + d + 2) return nullptr;
        auto key = std::make_tuple(p, q, drift);
        auto it = seen.find(key);
        if (it == seen.end()) {
            ArimaSpec spec{p, d, q, drift};
            ArimaFit f = fit(series, spec);
            it = seen.emplace(key, std::move(f)).first;
        }
        return &it->second;
    };

    const bool drift0 = d <= 1;
    const ArimaFit* best = nullptr;
    const std::pair<int, int> starts[] = {{2, 2}, {0, 0}, {1, 0}, {0, 1},
                                          {1, 1}, {3, 1}, {1, 3}, {2, 3},
                                          {3, 2}};
    for (auto [p, q] : starts) {
        if (const ArimaFit* f = try_fit(p, q, drift0))
            if (!best || fit_better(*f, *best)) best = f;
    }
    if (const ArimaFit* f = try_fit(0, 0, false))
        if (!best || fit_better(*f, *best)) best = f;
    if (!best) throw SeriesTooShort("auto_fit: no admissible model");

    for (bool improved = true; improved;) {
        improved = false;
        const int p = best->spec.p, q = best->spec.q;
        const bool dr = best->spec.drift;
        const std::tuple<int, int, bool> moves[] = {
            {p - 1, q, dr}, {p + 1, q, dr}, {p, q - 1, dr}, {p, q + 1, dr},
            {p - 1, q - 1, dr}, {p + 1, q + 1, dr},
            {p - 1, q + 1, dr}, {p + 1, q - 1, dr},
            {p, q, !dr},
        };
        for (const auto& [np, nq, ndr] : moves) {
            if (const ArimaFit* f = try_fit(np, nq, ndr)) {
                if (fit_better(*f, *best)) {
                    best = f;
                    improved = true;
                }
            }
        }
    }
    return *best;
}

}  // namespace detail

/**
 * @brief Stepwise automatic order selection, Hyndman-Khandakar style.
 *
 * The variance-reduction test anchors the differencing order; the (p, q,
 * constant) neighborhood search then runs at that order and at the
 * adjacent ones, and the AICc winner is returned. Probing the neighboring
 * d values keeps the stepwise result within reach of an exhaustive
 * (p, d, q) search, which a pure unit-root heuristic cannot guarantee.
 * The search order is fixed, so the result is deterministic.
 */
inline ArimaFit auto_fit(const KappaSeries& series) {
    const int nobs = static_cast<int>(series.values.size());
    if (nobs < 10)
        throw SeriesTooShort("auto_fit: series has " + std::to_string(nobs) +
                             " points, need at least 10");
    const int d0 = detail::choose_differencing(series.values);

    ArimaFit best = detail::stepwise_at_d(series, d0);
    for (int d : {d0 - 1, d0 + 1}) {
        if (d < 0 || d > 2) continue;
        ArimaFit cand = detail::stepwise_at_d(series, d);
        if (detail::fit_better(cand, best)) best = std::move(cand);
    }
    return best;
}

inline std::string ArimaFit::serialize() const {
    char buf[512];
    std::string ar_s, ma_s;
    for (int i = 0; i < ar.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", ar[i]);
        ar_s += (i ? "," : "") + std::string(buf);
    }
    for (int i = 0; i < ma.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", ma[i]);
        ma_s += (i ? "," : "") + std::string(buf);
    }
    std::string s = "codamort-arima/v1 " + spec.name();
    std::snprintf(buf, sizeof buf,
                  " ar=[%s] ma=[%s] drift=%.17g sigma2=%.17g loglik=%.17g "
                  "aicc=%.17g n=%d",
                  ar_s.c_str(), ma_s.c_str(), drift_coef, sigma2, loglik, aicc, n);
    return s + buf;
}

}  // namespace codamort
