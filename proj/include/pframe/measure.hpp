#pragma once

// Finitely supported probability measures on R^n. Atom lists keep multiset
// semantics: duplicate points are never merged, so index-aligned structures
// (couplings, paired measures) stay valid.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pframe/errors.hpp"
#include "pframe/linalg.hpp"

namespace pframe {

inline constexpr double kMassSumTol = 1e-12;      // |sum m - 1| after construction
inline constexpr double kNormalizeRejectTol = 1e-6;  // inputs further off are rejected

struct DiscreteMeasure {
    std::size_t dim = 0;
    std::vector<Vec> points;
    std::vector<double> masses;

    std::size_t size() const { return points.size(); }
};

enum class Normalize {
    strict,  // reject mass sums further than 1e-6 from 1
    force,   // rescale whatever positive masses were given
};

inline DiscreteMeasure make_measure(std::vector<Vec> points, std::vector<double> masses,
                                    Normalize mode = Normalize::strict) {
    if (points.empty()) throw EmptySupport("measure needs at least one atom");
    if (masses.size() != points.size())
        throw DimensionMismatch("points/masses length mismatch (" + std::to_string(points.size()) +
                                " vs " + std::to_string(masses.size()) + ")");
    const std::size_t dim = points.front().size();
    if (dim == 0) throw DimensionMismatch("points must have positive dimension");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim)
            throw DimensionMismatch("point " + std::to_string(i) + " has length " +
                                    std::to_string(points[i].size()) + ", expected " +
                                    std::to_string(dim));
        for (double v : points[i])
            if (!std::isfinite(v)) throw Error("point " + std::to_string(i) + " is not finite");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (!std::isfinite(masses[i])) throw Error("mass " + std::to_string(i) + " is not finite");
        if (masses[i] <= 0.0)
            throw NonpositiveMass("mass " + std::to_string(i) + " is " +
                                  std::to_string(masses[i]) + "; masses must be > 0");
        sum += masses[i];
    }
    if (mode == Normalize::strict && std::abs(sum - 1.0) > kNormalizeRejectTol)
        throw NotNormalized("masses sum to " + std::to_string(sum) +
                            "; more than 1e-6 from 1 (use force normalization to rescale)");
    // already-normalized inputs are left bit-for-bit intact so that file
    // round trips preserve every mass exactly
    if (std::abs(sum - 1.0) > kMassSumTol)
        for (double& m : masses) m /= sum;
    return DiscreteMeasure{dim, std::move(points), std::move(masses)};
}

inline DiscreteMeasure uniform_measure(std::vector<Vec> points) {
    if (points.empty()) throw EmptySupport("measure needs at least one atom");
    std::vector<double> masses(points.size(), 1.0 / static_cast<double>(points.size()));
    return make_measure(std::move(points), std::move(masses), Normalize::force);
}

/// M_2(mu) = sum_i m_i ||x_i||^2.
inline double second_moment(const DiscreteMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += mu.masses[i] * dot(mu.points[i], mu.points[i]);
    return s;
}

struct LinearMap {
    Matrix matrix;

    std::size_t dim_in() const { return matrix.cols(); }
    std::size_t dim_out() const { return matrix.rows(); }
};

inline LinearMap make_linear_map(Matrix m) {
    if (!m.is_finite()) throw Error("linear map requires finite entries");
    return LinearMap{std::move(m)};
}

inline LinearMap scalar_map(std::size_t dim, double c) {
    Matrix m(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = c;
    return LinearMap{std::move(m)};
}

/// Image measure T_# mu: atoms (T x_i, m_i). Duplicate images are kept.
inline DiscreteMeasure pushforward(const DiscreteMeasure& mu, const LinearMap& t) {
    if (t.dim_in() != mu.dim)
        throw DimensionMismatch("pushforward: map expects dimension " + std::to_string(t.dim_in()) +
                                ", measure has " + std::to_string(mu.dim));
    DiscreteMeasure out;
    out.dim = t.dim_out();
    out.points.reserve(mu.size());
    for (const Vec& x : mu.points) out.points.push_back(t.matrix.apply(x));
    out.masses = mu.masses;
    return out;
}

/// Numerical rank of the matrix whose columns are the support points:
/// singular values strictly above tol * sigma_max are counted.
inline std::size_t support_span_dim(const DiscreteMeasure& mu, double tol) {
    if (!(tol > 0.0)) throw Error("support_span_dim requires tol > 0");
    const std::size_t n = mu.dim, k = mu.size();
    // Gram matrix of the smaller side carries the same singular values.
    const bool use_rows = n <= k;
    const std::size_t g = use_rows ? n : k;
    Matrix gram(g, g);
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = i; j < g; ++j) {
            double s = 0.0;
            if (use_rows) {
                for (std::size_t c = 0; c < k; ++c) s += mu.points[c][i] * mu.points[c][j];
            } else {
                s = dot(mu.points[i], mu.points[j]);
            }
            gram(i, j) = s;
            gram(j, i) = s;
        }
    const EigenDecomposition d = eigh(SymMatrix(std::move(gram)));
    const double smax = std::sqrt(std::max(0.0, d.values.back()));
    if (smax == 0.0) return 0;
    std::size_t rank = 0;
    for (double l : d.values)
        if (std::sqrt(std::max(0.0, l)) > tol * smax) ++rank;
    return rank;
}

inline bool atomwise_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
    if (a.dim != b.dim || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.masses[i] - b.masses[i]) > tol) return false;
        for (std::size_t c = 0; c < a.dim; ++c)
            if (std::abs(a.points[i][c] - b.points[i][c]) > tol) return false;
    }
    return true;
}

}  // namespace pframe
