#pragma once

#include <cmath>
#include <vector>

#include "pframe/frame.hpp"
#include "pframe/measure.hpp"
#include "pframe/rng.hpp"

namespace test {

using pframe::DiscreteMeasure;
using pframe::Vec;

// Mercedes measure: uniform on three unit vectors at 120 degrees.
inline DiscreteMeasure mb() {
    const double r3 = std::sqrt(3.0) / 2.0;
    return pframe::uniform_measure({{1.0, 0.0}, {-0.5, r3}, {-0.5, -r3}});
}

inline DiscreteMeasure uniform_basis(std::size_t n) {
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        pts.push_back(e);
    }
    return pframe::uniform_measure(std::move(pts));
}

// test-side oracle: frame operator by plain summation loops
inline std::vector<std::vector<double>> frame_operator_oracle(const DiscreteMeasure& mu) {
    std::vector<std::vector<double>> s(mu.dim, std::vector<double>(mu.dim, 0.0));
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t a = 0; a < mu.dim; ++a)
            for (std::size_t b = 0; b < mu.dim; ++b)
                s[a][b] += mu.masses[i] * mu.points[i][a] * mu.points[i][b];
    return s;
}

// test-side oracle: eigenvalues of a symmetric 2x2 by the quadratic formula
inline std::pair<double, double> eig2_oracle(double a, double b, double c) {
    const double mean = 0.5 * (a + c);
    const double d = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return {mean - d, mean + d};
}

inline DiscreteMeasure random_measure(pframe::Rng& rng, std::size_t dim, std::size_t atoms) {
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < atoms; ++i) pts.push_back(rng.gaussian_vec(dim));
    return pframe::make_measure(std::move(pts), rng.dirichlet(atoms), pframe::Normalize::force);
}

// random frame with a conditioning floor, for properties stated at 1e-9
inline DiscreteMeasure random_conditioned_frame(pframe::Rng& rng, std::size_t dim,
                                                std::size_t atoms, double min_rel = 1e-4) {
    for (;;) {
        DiscreteMeasure mu = random_measure(rng, dim, atoms);
        const auto d = pframe::eigh(pframe::frame_operator(mu));
        if (d.values.front() > min_rel * d.values.back()) return mu;
    }
}

}  // namespace test
