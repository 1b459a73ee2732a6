#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "codamort/errors.hpp"

namespace codamort {

/**
 * @brief A point on the open unit simplex.
 *
 * Parts are strictly positive and sum to one. Construction validates both
 * invariants; use closure() to project an arbitrary positive vector onto
 * the simplex. Values are immutable after construction and safe to share
 * across threads.
 */
class Composition {
public:
    /// Absolute tolerance on the unit-sum invariant.
    static constexpr double sum_tolerance = 1e-10;
    /// Parts below this floor are rejected: logs of denormals destroy
    /// CLR accuracy.
    static constexpr double min_part = 1e-300;

    explicit Composition(Eigen::VectorXd parts) : parts_(std::move(parts)) {
        if (parts_.size() < 2)
            throw TooShort("composition needs at least 2 parts, got " +
                           std::to_string(parts_.size()));
        for (Eigen::Index i = 0; i < parts_.size(); ++i) {
            const double p = parts_[i];
            if (!(p >= min_part))
                throw NonPositiveEntry("composition part " + std::to_string(i) +
                                       " = " + std::to_string(p) +
                                       " is not strictly positive");
        }
        if (std::abs(parts_.sum() - 1.0) > sum_tolerance)
            throw Error("composition parts sum to " +
                        std::to_string(parts_.sum()) + ", expected 1");
    }

    /// The neutral element of perturbation: all parts equal to 1/D.
    static Composition uniform(int d) {
        return Composition(Eigen::VectorXd::Constant(d, 1.0 / d));
    }

    const Eigen::VectorXd& parts() const { return parts_; }
    int dim() const { return static_cast<int>(parts_.size()); }
    double operator[](Eigen::Index i) const { return parts_[i]; }

private:
    Eigen::VectorXd parts_;
};

/// Closure operator: normalize a strictly positive vector to unit sum.
inline Composition closure(const Eigen::VectorXd& v) {
    if (v.size() < 2)
        throw TooShort("closure needs at least 2 entries, got " +
                       std::to_string(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0))
            throw NonPositiveEntry("closure input entry " + std::to_string(i) +
                                   " = " + std::to_string(v[i]) +
                                   " is not strictly positive");
    return Composition(v / v.sum());
}

namespace detail {
inline void require_same_dim(const Composition& x, const Composition& y,
                             const char* op) {
    if (x.dim() != y.dim())
        throw DimensionMismatch(std::string(op) + ": dimensions " +
                                std::to_string(x.dim()) + " and " +
                                std::to_string(y.dim()) + " differ");
}
}  // namespace detail

/// Perturbation, the simplex analogue of vector addition.
inline Composition perturb(const Composition& x, const Composition& y) {
    detail::require_same_dim(x, y, "perturb");
    return closure(x.parts().cwiseProduct(y.parts()));
}

/// Power transformation, the simplex analogue of scalar multiplication.
inline Composition power(const Composition& x, double a) {
    return closure(x.parts().array().pow(a).matrix());
}

/// Negative perturbation: perturb(x, power(y, -1)).
inline Composition perturb_sub(const Composition& x, const Composition& y) {
    detail::require_same_dim(x, y, "perturb_sub");
    return closure(x.parts().cwiseQuotient(y.parts()));
}

/// Aitchison inner product, computed by the defining double log-ratio sum.
inline double aitchison_inner(const Composition& x, const Composition& y) {
    detail::require_same_dim(x, y, "aitchison_inner");
    const int d = x.dim();
    const Eigen::ArrayXd lx = x.parts().array().log();
    const Eigen::ArrayXd ly = y.parts().array().log();
    double acc = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            acc += (lx[i] - lx[j]) * (ly[i] - ly[j]);
    return acc / (2.0 * d);
}

inline double aitchison_norm(const Composition& x) {
    return std::sqrt(std::max(0.0, aitchison_inner(x, x)));
}

inline double aitchison_distance(const Composition& x, const Composition& y) {
    detail::require_same_dim(x, y, "aitchison_distance");
    return aitchison_norm(perturb_sub(x, y));
}

/**
 * @brief Multiplicative replacement of zeros in a nonnegative vector.
 *
 * Zeros become @p delta while positive entries are scaled by
 * (1 - z*delta/sum), where z is the number of zeros. The vector total is
 * conserved exactly and ratios between originally positive parts are
 * untouched.
 */
inline Eigen::VectorXd multiplicative_replace(const Eigen::VectorXd& x,
                                              double delta) {
    if (!(delta > 0.0))
        throw NonPositiveEntry("multiplicative_replace: delta must be > 0");
    int zeros = 0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0)
            throw NonPositiveEntry("multiplicative_replace: entry " +
                                   std::to_string(i) + " is negative");
        if (x[i] == 0.0)
            ++zeros;
        total += x[i];
    }
    if (total <= 0.0)
        throw AllZeroRow("multiplicative_replace: no positive entry");
    if (zeros == 0) return x;
    if (zeros * delta >= total)
        throw DeltaTooLarge("multiplicative_replace: " + std::to_string(zeros) +
                            " zeros at delta " + std::to_string(delta) +
                            " exceed the vector total " + std::to_string(total));
    const double scale = 1.0 - zeros * delta / total;
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out[i] = (x[i] == 0.0) ? delta : scale * x[i];
    return out;
}

}  // namespace codamort
