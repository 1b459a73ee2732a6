#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>

#include "codamort/composition.hpp"
#include "codamort/errors.hpp"

namespace codamort {

/// Centred log-ratio transform: ln(x_i / g(x)). Output sums to zero.
inline Eigen::VectorXd clr(const Composition& x) {
    Eigen::VectorXd w = x.parts().array().log().matrix();
    w.array() -= w.mean();
    return w;
}

/// Inverse CLR: closure of the componentwise exponential. Accepts any
/// finite vector; shifts by the max before exponentiating so that large
/// coordinates cannot overflow.
inline Composition clr_inv(const Eigen::VectorXd& w) {
    const double shift = w.maxCoeff();
    return closure((w.array() - shift).exp().matrix());
}

/**
 * @brief The (D-1) x D Helmert sub-matrix.
 *
 * Row k (1-indexed) carries k entries 1/sqrt(k(k+1)) followed by one entry
 * -k/sqrt(k(k+1)), then zeros. Rows are orthonormal and sum to zero, so the
 * matrix maps the CLR hyperplane isometrically onto R^{D-1}. The row-sign
 * convention is fixed to keep outputs byte-comparable across runs.
 */
struct HelmertSubMatrix {
    Eigen::MatrixXd rows;  // (D-1) x D

    int parts() const { return static_cast<int>(rows.cols()); }
};

inline HelmertSubMatrix helmert_sub(int d) {
    if (d < 2)
        throw TooShort("helmert_sub: need D >= 2, got " + std::to_string(d));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d - 1, d);
    for (int k = 1; k < d; ++k) {
        const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
        for (int j = 0; j < k; ++j) h(k - 1, j) = s;
        h(k - 1, k) = -k * s;
    }
    return HelmertSubMatrix{std::move(h)};
}

/// Isometric log-ratio transform: H_D * clr(x).
inline Eigen::VectorXd ilr(const Composition& x, const HelmertSubMatrix& h) {
    if (h.parts() != x.dim())
        throw DimensionMismatch("ilr: Helmert matrix is for " +
                                std::to_string(h.parts()) + " parts, composition has " +
                                std::to_string(x.dim()));
    return h.rows * clr(x);
}

inline Eigen::VectorXd ilr(const Composition& x) {
    return ilr(x, helmert_sub(x.dim()));
}

/// Inverse ILR: clr_inv(H_D' * z).
inline Composition ilr_inv(const Eigen::VectorXd& z, const HelmertSubMatrix& h) {
    if (z.size() != h.rows.rows())
        throw DimensionMismatch("ilr_inv: coordinate length " +
                                std::to_string(z.size()) + " does not match Helmert rows " +
                                std::to_string(h.rows.rows()));
    return clr_inv(h.rows.transpose() * z);
}

inline Composition ilr_inv(const Eigen::VectorXd& z) {
    return ilr_inv(z, helmert_sub(static_cast<int>(z.size()) + 1));
}

/// The Box-Cox style power parameter of the alpha-transformation.
struct AlphaParam {
    double value;

    explicit AlphaParam(double v) : value(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw NonPositiveEntry("alpha must lie in [0, 1], got " +
                                   std::to_string(v));
    }
};

/**
 * @brief The alpha-transformation A_alpha(x) = (1/a) H_D (D u_a(x) - 1).
 *
 * u_a(x) is the closed componentwise a-th power of x. At a = 0 the map is
 * singular and the implementation dispatches to ILR, its a -> 0 limit.
 * Output lives in R^{D-1}.
 */
inline Eigen::VectorXd alpha_transform(const Composition& x, AlphaParam a,
                                       const HelmertSubMatrix& h) {
    if (a.value == 0.0) return ilr(x, h);
    if (h.parts() != x.dim())
        throw DimensionMismatch("alpha_transform: Helmert matrix is for " +
                                std::to_string(h.parts()) + " parts, composition has " +
                                std::to_string(x.dim()));
    const int d = x.dim();
    Eigen::VectorXd u = x.parts().array().pow(a.value).matrix();
    u /= u.sum();
    return (1.0 / a.value) * (h.rows * (d * u - Eigen::VectorXd::Ones(d)));
}

inline Eigen::VectorXd alpha_transform(const Composition& x, AlphaParam a) {
    return alpha_transform(x, a, helmert_sub(x.dim()));
}

/// How alpha_inverse treats coordinates outside the image of the forward map.
enum class InversePolicy {
    strict,  ///< throw NegativeDetectionLimit
    clamp,   ///< floor offending components at 1e-15 and re-close
};

/// Floor applied to negative pre-power components under InversePolicy::clamp.
inline constexpr double inverse_clamp_floor = 1e-15;

/**
 * @brief Inverse alpha-transformation, closure((a H' z + 1)^{1/a}).
 *
 * At a = 0 this is the ILR inverse. For a > 0 the map is only defined on the
 * image of the forward transform: a component of (a H' z + 1) below zero
 * raises NegativeDetectionLimit under the strict policy, or is floored at
 * inverse_clamp_floor (counted in @p clamped) under the clamp policy.
 */
inline Composition alpha_inverse(const Eigen::VectorXd& z, AlphaParam a, int d,
                                 const HelmertSubMatrix& h,
                                 InversePolicy policy = InversePolicy::strict,
                                 std::size_t* clamped = nullptr) {
    if (h.parts() != d)
        throw DimensionMismatch("alpha_inverse: Helmert matrix is for " +
                                std::to_string(h.parts()) + " parts, expected " +
                                std::to_string(d));
    if (z.size() != d - 1)
        throw DimensionMismatch("alpha_inverse: coordinate length " +
                                std::to_string(z.size()) + ", expected " +
                                std::to_string(d - 1));
    if (a.value == 0.0) return ilr_inv(z, h);

    Eigen::VectorXd base =
        a.value * (h.rows.transpose() * z) + Eigen::VectorXd::Ones(d);
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        if (base[i] < inverse_clamp_floor) {
            if (policy == InversePolicy::strict && base[i] < 0.0)
                throw NegativeDetectionLimit(
                    "alpha_inverse: component " + std::to_string(i) + " of aH'z+1 is " +
                    std::to_string(base[i]));
            base[i] = inverse_clamp_floor;
            if (clamped) ++*clamped;
        }
    }
    return closure(base.array().pow(1.0 / a.value).matrix());
}

inline Composition alpha_inverse(const Eigen::VectorXd& z, AlphaParam a, int d,
                                 InversePolicy policy = InversePolicy::strict,
                                 std::size_t* clamped = nullptr) {
    return alpha_inverse(z, a, d, helmert_sub(d), policy, clamped);
}

}  // namespace codamort
