#pragma once

// Frame operator, optimal frame bounds and classification, canonical dual
// and Parseval constructions, reconstruction-identity residuals, and the
// synthesis/analysis operators on paired (coupling-aligned) measures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "pframe/errors.hpp"
#include "pframe/linalg.hpp"
#include "pframe/measure.hpp"
#include "pframe/transport.hpp"

namespace pframe {

/// Relative singularity tolerance: lambda_min <= tol * lambda_max means NotFrame.
inline constexpr double kSingularRelTol = 1e-10;
inline constexpr double kTightRelTol = 1e-9;

enum class FrameClass { not_frame, frame, tight, parseval };

inline const char* frame_class_name(FrameClass c) {
    switch (c) {
        case FrameClass::not_frame: return "not-frame";
        case FrameClass::frame: return "frame";
        case FrameClass::tight: return "tight";
        case FrameClass::parseval: return "parseval";
    }
    return "?";
}

inline FrameClass frame_class_from_name(const std::string& s) {
    if (s == "not-frame") return FrameClass::not_frame;
    if (s == "frame") return FrameClass::frame;
    if (s == "tight") return FrameClass::tight;
    if (s == "parseval") return FrameClass::parseval;
    throw ParseError("unknown frame class '" + s + "'");
}

/// S_mu = sum_i m_i x_i x_i^t.
inline SymMatrix frame_operator(const DiscreteMeasure& mu) {
    Matrix s(mu.dim, mu.dim);
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t a = 0; a < mu.dim; ++a)
            for (std::size_t b = a; b < mu.dim; ++b) {
                const double v = mu.masses[i] * mu.points[i][a] * mu.points[i][b];
                s(a, b) += v;
                if (a != b) s(b, a) += v;
            }
    return SymMatrix(std::move(s));
}

struct FrameCertificate {
    SymMatrix frame_operator;
    double lower = 0.0;  // A = lambda_min
    double upper = 0.0;  // B = lambda_max
    double m2 = 0.0;     // trace(S)
    FrameClass classification = FrameClass::not_frame;

    bool is_frame() const { return classification != FrameClass::not_frame; }
};

/// Optimal frame bounds: the extreme eigenvalues of S_mu. NotFrame is a
/// classification, never an exception, so borderline measures are safe.
inline FrameCertificate frame_bounds(const DiscreteMeasure& mu,
                                     double singular_rel_tol = kSingularRelTol) {
    FrameCertificate cert;
    cert.frame_operator = frame_operator(mu);
    const EigenDecomposition d = eigh(cert.frame_operator);
    cert.lower = d.values.front();
    cert.upper = d.values.back();
    cert.m2 = cert.frame_operator.trace();
    const double tol_singular = singular_rel_tol * cert.upper;
    if (cert.lower <= tol_singular) {
        cert.classification = FrameClass::not_frame;
    } else if (cert.upper - cert.lower <= kTightRelTol * cert.upper) {
        cert.classification =
            std::abs(cert.upper - 1.0) <= kTightRelTol ? FrameClass::parseval : FrameClass::tight;
    } else {
        cert.classification = FrameClass::frame;
    }
    return cert;
}

namespace detail {

inline EigenDecomposition frame_eigh_checked(const DiscreteMeasure& mu, double rel_tol) {
    const EigenDecomposition d = eigh(frame_operator(mu));
    if (d.values.front() <= rel_tol * d.values.back())
        throw NotAFrame("measure is not a probabilistic frame (lambda_min " +
                            std::to_string(d.values.front()) + ")",
                        d.values.front());
    return d;
}

}  // namespace detail

struct CanonicalDual {
    DiscreteMeasure dual;  // (S^{-1})_# mu, frame bounds (1/B, 1/A)
    Coupling coupling;     // the map-graph witness (Id x S^{-1})_# mu
};

inline CanonicalDual canonical_dual(const DiscreteMeasure& mu,
                                    double singular_rel_tol = kSingularRelTol) {
    const EigenDecomposition d = detail::frame_eigh_checked(mu, singular_rel_tol);
    const LinearMap inv{spectral_map(d, [](double l) { return 1.0 / l; }).mat()};
    Coupling coupling = map_coupling(mu, inv);
    return CanonicalDual{coupling.nu, std::move(coupling)};
}

inline DiscreteMeasure canonical_parseval(const DiscreteMeasure& mu,
                                          double singular_rel_tol = kSingularRelTol) {
    const EigenDecomposition d = detail::frame_eigh_checked(mu, singular_rel_tol);
    const LinearMap half{spectral_map(d, [](double l) { return 1.0 / std::sqrt(l); }).mat()};
    return pushforward(mu, half);
}

enum class ReconstructionMode { dual, parseval };

/// Residual of the exact reconstruction identities, evaluated atom by atom.
inline double reconstruction_residual(const DiscreteMeasure& mu, const Vec& f,
                                      ReconstructionMode mode,
                                      double singular_rel_tol = kSingularRelTol) {
    if (f.size() != mu.dim) throw DimensionMismatch("f has wrong length");
    const EigenDecomposition d = detail::frame_eigh_checked(mu, singular_rel_tol);
    Vec recon(mu.dim, 0.0);
    if (mode == ReconstructionMode::dual) {
        const Vec g = spectral_map(d, [](double l) { return 1.0 / l; }).mat().apply(f);
        for (std::size_t i = 0; i < mu.size(); ++i)
            axpy(mu.masses[i] * dot(g, mu.points[i]), mu.points[i], recon);
    } else {
        const Matrix half = spectral_map(d, [](double l) { return 1.0 / std::sqrt(l); }).mat();
        const Vec h = half.apply(f);
        for (std::size_t i = 0; i < mu.size(); ++i)
            axpy(mu.masses[i] * dot(h, mu.points[i]), half.apply(mu.points[i]), recon);
    }
    return norm2(sub(f, recon));
}

/// Index-aligned atoms (x_i, y_i, m_i): a coupling together with the
/// L^2(mu)-coefficient space the synthesis operators U and T act on.
struct PairedMeasure {
    std::size_t dim = 0;
    std::vector<Vec> x;
    std::vector<Vec> y;
    std::vector<double> masses;

    std::size_t size() const { return masses.size(); }
};

inline PairedMeasure make_paired(std::vector<Vec> xs, std::vector<Vec> ys,
                                 std::vector<double> masses,
                                 Normalize mode = Normalize::strict) {
    DiscreteMeasure mx = make_measure(std::move(xs), masses, mode);
    if (ys.size() != mx.size())
        throw LengthMismatch("paired measure needs equally many x and y atoms");
    for (const Vec& v : ys)
        if (v.size() != mx.dim) throw DimensionMismatch("y atom has wrong length");
    return PairedMeasure{mx.dim, std::move(mx.points), std::move(ys), std::move(mx.masses)};
}

/// Pair two measures atom-by-atom; masses must agree index-wise.
inline PairedMeasure pair_diagonal(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != nu.dim) throw DimensionMismatch("paired measures need a common dimension");
    if (mu.size() != nu.size()) throw LengthMismatch("diagonal pairing needs equal atom counts");
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (std::abs(mu.masses[i] - nu.masses[i]) > kMarginalTol)
            throw MarginalMismatch("diagonal pairing needs matching masses at atom " +
                                   std::to_string(i));
    return PairedMeasure{mu.dim, mu.points, nu.points, mu.masses};
}

inline DiscreteMeasure x_marginal(const PairedMeasure& p) {
    return DiscreteMeasure{p.dim, p.x, p.masses};
}

inline DiscreteMeasure y_marginal(const PairedMeasure& p) {
    return DiscreteMeasure{p.dim, p.y, p.masses};
}

inline Coupling as_coupling(const PairedMeasure& p) {
    return diagonal_coupling(x_marginal(p), y_marginal(p));
}

/// U(w) = sum_i w_i m_i x_i.
inline Vec synthesis_u(const PairedMeasure& p, const Vec& coeff) {
    if (coeff.size() != p.size()) throw LengthMismatch("coefficient vector has wrong length");
    Vec out(p.dim, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) axpy(coeff[i] * p.masses[i], p.x[i], out);
    return out;
}

/// T(w) = sum_i w_i m_i y_i.
inline Vec synthesis_t(const PairedMeasure& p, const Vec& coeff) {
    if (coeff.size() != p.size()) throw LengthMismatch("coefficient vector has wrong length");
    Vec out(p.dim, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) axpy(coeff[i] * p.masses[i], p.y[i], out);
    return out;
}

/// Pseudo-inverse analysis map: (U^+ f)_i = <S^{-1} f, x_i>, so that
/// U(U^+ f) = f whenever the x-marginal is a frame.
inline Vec analysis_uplus(const PairedMeasure& p, const Vec& f,
                          double singular_rel_tol = kSingularRelTol) {
    if (f.size() != p.dim) throw DimensionMismatch("f has wrong length");
    const EigenDecomposition d = detail::frame_eigh_checked(x_marginal(p), singular_rel_tol);
    const Vec g = spectral_map(d, [](double l) { return 1.0 / l; }).mat().apply(f);
    Vec coeff(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) coeff[i] = dot(g, p.x[i]);
    return coeff;
}

/// ||w||_{L^2(mu)} = sqrt(sum_i m_i w_i^2).
inline double l2mu_norm(const PairedMeasure& p, const Vec& coeff) {
    if (coeff.size() != p.size()) throw LengthMismatch("coefficient vector has wrong length");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p.masses[i] * coeff[i] * coeff[i];
    return std::sqrt(s);
}

/// Smallest delta with ||Uw - Tw|| <= delta ||w||_{L^2(mu)} for all w:
/// the top singular value of the columns sqrt(m_i) (x_i - y_i).
inline double pw_delta_exact(const PairedMeasure& p) {
    Matrix d(p.dim, p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double w = std::sqrt(p.masses[i]);
        for (std::size_t a = 0; a < p.dim; ++a) d(a, i) = w * (p.x[i][a] - p.y[i][a]);
    }
    return spectral_norm(d);
}

/// Coefficient vector attaining pw_delta_exact (the top right singular
/// vector mapped back out of the sqrt(m)-weighted metric).
inline Vec pw_extremal_coefficients(const PairedMeasure& p) {
    const std::size_t k = p.size();
    Matrix g(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) {
            const Vec di = sub(p.x[i], p.y[i]);
            const Vec dj = sub(p.x[j], p.y[j]);
            const double v = std::sqrt(p.masses[i] * p.masses[j]) * dot(di, dj);
            g(i, j) = v;
            g(j, i) = v;
        }
    const EigenDecomposition d = eigh(SymMatrix(std::move(g)));
    const Vec v = d.vector(k - 1);
    Vec w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = v[i] / std::sqrt(p.masses[i]);
    return w;
}

/// Singularity tolerance used by the CLI layer; PFRAME_TOL overrides the
/// relative default.
inline double singular_rel_tol_from_env() {
    if (const char* env = std::getenv("PFRAME_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && v > 0.0) return v;
    }
    return kSingularRelTol;
}

}  // namespace pframe
