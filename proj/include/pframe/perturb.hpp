#pragma once

// One certificate calculator per perturbation theorem: premise quantity,
// strict premise verdict, and the guaranteed frame bounds for the perturbed
// measure, plus an empirical validator comparing guarantees against the true
// spectral bounds. Premises use strict floating-point inequalities with no
// epsilon slack; boundary instances classify as failing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pframe/digest.hpp"
#include "pframe/errors.hpp"
#include "pframe/frame.hpp"
#include "pframe/linalg.hpp"
#include "pframe/measure.hpp"
#include "pframe/rng.hpp"
#include "pframe/transport.hpp"

namespace pframe {

inline constexpr double kValidateSlackTol = 1e-9;
inline constexpr double kDualWitnessTol = 1e-8;

enum class Theorem {
    quad_close,
    w2_openness,
    sweetie,
    sweetie_coupling,
    paley_wiener,
    dual_stability,
    canonical_dual_sigma,
    canonical_dual_eps_hat,
    coupling_dual_eps,
    coupling_dual_chi,
    parseval_tau,
};

inline constexpr std::size_t kTheoremCount = 11;

inline const char* theorem_name(Theorem t) {
    switch (t) {
        case Theorem::quad_close: return "QuadClose";
        case Theorem::w2_openness: return "W2Openness";
        case Theorem::sweetie: return "Sweetie";
        case Theorem::sweetie_coupling: return "SweetieCoupling";
        case Theorem::paley_wiener: return "PaleyWiener";
        case Theorem::dual_stability: return "DualStability";
        case Theorem::canonical_dual_sigma: return "CanonicalDualSigma";
        case Theorem::canonical_dual_eps_hat: return "CanonicalDualEpsHat";
        case Theorem::coupling_dual_eps: return "CouplingDualEps";
        case Theorem::coupling_dual_chi: return "CouplingDualChi";
        case Theorem::parseval_tau: return "ParsevalTau";
    }
    return "?";
}

inline Theorem theorem_from_name(const std::string& s) {
    for (std::size_t i = 0; i < kTheoremCount; ++i) {
        const Theorem t = static_cast<Theorem>(i);
        if (s == theorem_name(t)) return t;
    }
    throw UnknownTheorem("unknown theorem '" + s + "'");
}

struct PerturbationCertificate {
    Theorem theorem = Theorem::quad_close;
    double premise_value = 0.0;
    double premise_threshold = 0.0;
    bool premise_ok = false;
    std::optional<double> guaranteed_lower;  // present iff premise_ok
    std::optional<double> guaranteed_upper;  // present iff premise_ok
    std::vector<std::pair<std::string, double>> aux;  // theorem-specific extras
    std::string hypothesis;       // PaleyWiener: "certified" | "assumed"
    std::string coupling_source;  // set by the CLI when it picked a default
    std::vector<std::pair<std::string, std::string>> inputs_digest;  // role -> hash

    const std::string* digest_of(const std::string& role) const {
        for (const auto& [r, d] : inputs_digest)
            if (r == role) return &d;
        return nullptr;
    }
};

struct ValidationReport {
    PerturbationCertificate certificate;
    double actual_lower = 0.0;
    double actual_upper = 0.0;
    double lower_slack = 0.0;  // actual_lower - guaranteed_lower
    double upper_slack = 0.0;  // guaranteed_upper - actual_upper
    bool verdict = false;
};

namespace detail {

inline PerturbationCertificate base_cert(Theorem t, double value, double threshold,
                                         double lower, double upper) {
    PerturbationCertificate c;
    c.theorem = t;
    c.premise_value = value;
    c.premise_threshold = threshold;
    c.premise_ok = value < threshold;  // strict, no epsilon
    if (c.premise_ok) {
        c.guaranteed_lower = lower;
        c.guaranteed_upper = upper;
    }
    return c;
}

inline void require_marginals(const Coupling& g, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const char* what) {
    if (!atomwise_equal(g.mu, mu, kMarginalTol) || !atomwise_equal(g.nu, nu, kMarginalTol))
        throw MarginalMismatch(std::string(what) + ": coupling marginals do not match the measures");
}

inline double sym_spectral_norm(const SymMatrix& a, const SymMatrix& b) {
    const EigenDecomposition d = eigh(SymMatrix(a.mat() - b.mat()));
    return std::max(std::abs(d.values.front()), std::abs(d.values.back()));
}

struct FrameData {
    double lower, upper, m2;
    EigenDecomposition eig;
};

inline FrameData checked_frame(const DiscreteMeasure& mu, double rel_tol) {
    const SymMatrix s = frame_operator(mu);
    EigenDecomposition d = eigh(s);
    if (d.values.front() <= rel_tol * d.values.back())
        throw NotAFrame("measure is not a probabilistic frame (lambda_min " +
                            std::to_string(d.values.front()) + ")",
                        d.values.front());
    return FrameData{d.values.front(), d.values.back(), s.trace(), std::move(d)};
}

}  // namespace detail

/// Quadratic closeness (lambda = transport cost of a supplied coupling).
inline PerturbationCertificate certify_quadclose(const DiscreteMeasure& mu,
                                                 const DiscreteMeasure& nu, const Coupling& gamma,
                                                 double rel_tol = kSingularRelTol) {
    const auto fd = detail::checked_frame(mu, rel_tol);
    detail::require_marginals(gamma, mu, nu, "quadclose");
    const double lambda = quadratic_cost(gamma);
    const double root = std::sqrt(fd.lower) - std::sqrt(std::max(0.0, lambda));
    PerturbationCertificate c = detail::base_cert(Theorem::quad_close, lambda, fd.lower,
                                                  root * root, second_moment(nu));
    c.inputs_digest = {{"mu", digest_measure(mu)},
                       {"perturbed", digest_measure(nu)},
                       {"gamma", digest_coupling(gamma)}};
    return c;
}

/// Wasserstein openness: the quadclose formula at the optimal coupling.
inline PerturbationCertificate certify_w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                          double rel_tol = kSingularRelTol) {
    const auto fd = detail::checked_frame(mu, rel_tol);
    const W2Result ot = w2(mu, nu);
    const double root_a = std::sqrt(fd.lower);
    const double gap = root_a - ot.distance;
    PerturbationCertificate c = detail::base_cert(Theorem::w2_openness, ot.distance, root_a,
                                                  gap * gap, second_moment(nu));
    c.aux = {{"w2_cost", ot.distance * ot.distance}};
    c.inputs_digest = {{"mu", digest_measure(mu)}, {"perturbed", digest_measure(nu)}};
    return c;
}

/// Spectral-distance perturbation. R defaults to the optimal constant
/// ||S_mu - S_nu||_2; a user-supplied override must dominate it.
inline PerturbationCertificate certify_sweetie(const DiscreteMeasure& mu,
                                               const DiscreteMeasure& nu,
                                               std::optional<double> user_r = std::nullopt,
                                               double rel_tol = kSingularRelTol) {
    const auto fd = detail::checked_frame(mu, rel_tol);
    const double r_opt = detail::sym_spectral_norm(frame_operator(mu), frame_operator(nu));
    double r = r_opt;
    if (user_r) {
        if (*user_r < r_opt)
            throw Error("user-supplied R " + std::to_string(*user_r) +
                        " is below the optimal constant " + std::to_string(r_opt));
        r = *user_r;
    }
    PerturbationCertificate c =
        detail::base_cert(Theorem::sweetie, r, fd.lower, fd.lower - r, fd.upper + r);
    c.aux = {{"R_opt", r_opt}};
    c.inputs_digest = {{"mu", digest_measure(mu)}, {"perturbed", digest_measure(nu)}};
    return c;
}

/// Coupling form of the spectral-distance lemma. The premise quantity is the
/// same R: the coupling's marginals already determine both frame operators.
inline PerturbationCertificate certify_sweetie_coupling(const DiscreteMeasure& mu,
                                                        const DiscreteMeasure& nu,
                                                        const Coupling& gamma,
                                                        double rel_tol = kSingularRelTol) {
    detail::require_marginals(gamma, mu, nu, "sweetie");
    PerturbationCertificate c = certify_sweetie(mu, nu, std::nullopt, rel_tol);
    c.theorem = Theorem::sweetie_coupling;
    c.inputs_digest.push_back({"gamma", digest_coupling(gamma)});
    return c;
}

/// Paley-Wiener certificate. delta = nullopt selects AUTO mode: requires
/// lambda1 = lambda2 = 0 and uses the exact operator constant, certifying
/// the hypothesis for every coefficient vector. With user-supplied
/// constants, the hypothesis is assumed (spot-check with falsify_paley).
inline PerturbationCertificate certify_paley(const PairedMeasure& p, double lambda1,
                                             double lambda2,
                                             std::optional<double> delta = std::nullopt,
                                             double rel_tol = kSingularRelTol) {
    if (lambda1 < 0.0 || lambda2 < 0.0 || (delta && *delta < 0.0))
        throw Error("paley constants must be nonnegative");
    const auto fd = detail::checked_frame(x_marginal(p), rel_tol);
    std::string hypothesis;
    double d = 0.0;
    if (!delta) {
        if (lambda1 != 0.0 || lambda2 != 0.0)
            throw AutoRequiresZeroLambdas(
                "AUTO delta certifies the hypothesis exactly only for lambda1 = lambda2 = 0");
        d = pw_delta_exact(p);
        hypothesis = "certified";
    } else {
        d = *delta;
        hypothesis = "assumed";
    }
    const double m2_nu = second_moment(y_marginal(p));
    const double drive = lambda1 + d / std::sqrt(fd.lower);
    const double value = std::max(drive, lambda2);
    const double one_minus = 1.0 - drive;
    const double shrink = one_minus * one_minus / ((1.0 + lambda2) * (1.0 + lambda2));
    // The hypothesis certified here quantifies over index-aligned
    // coefficients, under which Cauchy-Schwarz over the shared atom index
    // gives the lower bound A * shrink directly; the Bessel route gives
    // A^2 * shrink / M2(nu). The weaker of the two is emitted (the Bessel
    // form can exceed the sharp one when M2(nu) < A, e.g. in dimension 1).
    const double lower_m2 = fd.lower * fd.lower * shrink / m2_nu;
    const double lower_sharp = fd.lower * shrink;
    PerturbationCertificate c = detail::base_cert(Theorem::paley_wiener, value, 1.0,
                                                  std::min(lower_m2, lower_sharp), m2_nu);
    c.hypothesis = hypothesis;
    c.aux = {{"lambda1", lambda1},
             {"lambda2", lambda2},
             {"delta", d},
             {"lower_m2", lower_m2},
             {"lower_sharp", lower_sharp}};
    c.inputs_digest = {{"pair", digest_paired(p)},
                       {"mu", digest_measure(x_marginal(p))},
                       {"perturbed", digest_measure(y_marginal(p))}};
    return c;
}

struct PaleyFalsification {
    bool falsified = false;
    Vec counterexample;   // coefficient vector, empty if not falsified
    double violation = 0.0;
};

/// Sampled refutation of the Paley-Wiener hypothesis: random coefficient
/// vectors (unit Gaussian in the sqrt(m)-weighted metric) plus the extremal
/// singular vector. NotFalsified is explicitly not a proof.
inline PaleyFalsification falsify_paley(const PairedMeasure& p, double lambda1, double lambda2,
                                        double delta, int trials, std::uint64_t seed) {
    if (trials < 1) throw Error("falsify_paley needs trials >= 1");
    Rng rng(seed);
    auto violation_of = [&](const Vec& w) {
        const Vec uw = synthesis_u(p, w);
        const Vec tw = synthesis_t(p, w);
        const double lhs = norm2(sub(uw, tw));
        const double rhs =
            lambda1 * norm2(uw) + lambda2 * norm2(tw) + delta * l2mu_norm(p, w);
        return lhs - rhs;
    };
    PaleyFalsification out;
    // the extremal direction first: it witnesses any delta below the exact constant
    Vec best = pw_extremal_coefficients(p);
    double v = violation_of(best);
    if (v > 1e-12) return PaleyFalsification{true, std::move(best), v};
    for (int t = 0; t < trials; ++t) {
        Vec w(p.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = rng.gaussian() / std::sqrt(p.masses[i]);
        v = violation_of(w);
        if (v > 1e-12) return PaleyFalsification{true, std::move(w), v};
    }
    return out;
}

/// Dual-frame stability along a glued three-marginal plan. gamma12 must
/// witness nu as a transport dual of mu (moment within 1e-8 of Id).
inline PerturbationCertificate certify_dual_stability(const DiscreteMeasure& mu,
                                                      const DiscreteMeasure& nu,
                                                      const Coupling& gamma12,
                                                      const DiscreteMeasure& eta,
                                                      const Coupling& gamma23,
                                                      double rel_tol = kSingularRelTol) {
    detail::checked_frame(mu, rel_tol);
    detail::require_marginals(gamma12, mu, nu, "dual_stability gamma12");
    detail::require_marginals(gamma23, nu, eta, "dual_stability gamma23");
    const Matrix moment = coupling_moment(gamma12);
    const Matrix id = Matrix::identity(mu.dim);
    const double witness_residual = (moment - id).frobenius_norm();
    if (witness_residual > kDualWitnessTol)
        throw NotADualWitness("gamma12 moment is " + std::to_string(witness_residual) +
                                  " from the identity; nu is not witnessed as a transport dual",
                              witness_residual);
    const TriplePlan plan = glue(gamma12, gamma23);
    double sigma = 0.0;
    for (const TripleEntry& e : plan.entries)
        sigma += e.mass * norm2(sub(plan.mu.points[e.i], plan.eta.points[e.k])) *
                 norm2(plan.nu.points[e.j]);
    const EigenDecomposition dn = eigh(frame_operator(nu));
    const double dual_upper = dn.values.back();  // optimal D = lambda_max(S_nu)
    const double m2_nu = second_moment(nu);
    const double gap = 1.0 - sigma;
    PerturbationCertificate c = detail::base_cert(Theorem::dual_stability, sigma, 1.0,
                                                  gap * gap / dual_upper, second_moment(eta));
    c.aux = {{"lower_D", gap * gap / dual_upper},
             {"lower_M2", gap * gap / m2_nu},
             {"D", dual_upper},
             {"witness_residual", witness_residual}};
    if (!c.premise_ok) c.aux.erase(c.aux.begin(), c.aux.begin() + 2);
    c.inputs_digest = {{"mu", digest_measure(mu)},
                       {"nu", digest_measure(nu)},
                       {"gamma12", digest_coupling(gamma12)},
                       {"gamma23", digest_coupling(gamma23)},
                       {"perturbed", digest_measure(eta)}};
    return c;
}

struct CanonicalDualCertificates {
    PerturbationCertificate sigma;    // sigma_hat < 1
    PerturbationCertificate eps_hat;  // eps_hat < A (implies sigma_hat <= eps_hat/A < 1)
};

/// Canonical-dual perturbation over the product mu (x) eta: both the
/// sigma-hat corollary and the eps-hat remark. Both emit the bound
/// A (1 - sigma_hat)^2.
inline CanonicalDualCertificates certify_canonical_dual(const DiscreteMeasure& mu,
                                                        const DiscreteMeasure& eta,
                                                        double rel_tol = kSingularRelTol) {
    if (mu.dim != eta.dim) throw DimensionMismatch("measures live in different dimensions");
    const auto fd = detail::checked_frame(mu, rel_tol);
    const Matrix inv = spectral_map(fd.eig, [](double l) { return 1.0 / l; }).mat();
    double sigma_hat = 0.0, eps_hat = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double norm_inv_x = norm2(inv.apply(mu.points[i]));
        const double norm_x = norm2(mu.points[i]);
        double dist_sum = 0.0;
        for (std::size_t j = 0; j < eta.size(); ++j)
            dist_sum += eta.masses[j] * norm2(sub(mu.points[i], eta.points[j]));
        sigma_hat += mu.masses[i] * norm_inv_x * dist_sum;
        eps_hat += mu.masses[i] * norm_x * dist_sum;
    }
    const double m2_eta = second_moment(eta);
    const double gap = 1.0 - sigma_hat;
    const double lower = fd.lower * gap * gap;

    CanonicalDualCertificates out;
    out.sigma = detail::base_cert(Theorem::canonical_dual_sigma, sigma_hat, 1.0, lower, m2_eta);
    out.sigma.aux = {{"eps_hat", eps_hat}};
    out.eps_hat =
        detail::base_cert(Theorem::canonical_dual_eps_hat, eps_hat, fd.lower, lower, m2_eta);
    out.eps_hat.aux = {{"sigma_hat", sigma_hat}};
    const std::vector<std::pair<std::string, std::string>> digests = {
        {"mu", digest_measure(mu)}, {"perturbed", digest_measure(eta)}};
    out.sigma.inputs_digest = digests;
    out.eps_hat.inputs_digest = digests;
    return out;
}

struct CouplingDualCertificates {
    PerturbationCertificate eps;  // eps < A, bound (A - eps)^2 / B
    PerturbationCertificate chi;  // chi < 1, bound A^2 (1 - chi)^2 / B
    /// strongest applicable lower bound, when at least one premise holds
    std::optional<double> combined_lower() const {
        if (eps.premise_ok && chi.premise_ok)
            return std::max(*eps.guaranteed_lower, *chi.guaranteed_lower);
        if (eps.premise_ok) return eps.guaranteed_lower;
        if (chi.premise_ok) return chi.guaranteed_lower;
        return std::nullopt;
    }
};

/// Coupling-dual perturbation along an arbitrary gamma in Gamma(mu, eta).
inline CouplingDualCertificates certify_coupling_dual(const DiscreteMeasure& mu,
                                                      const DiscreteMeasure& eta,
                                                      const Coupling& gamma,
                                                      double rel_tol = kSingularRelTol) {
    const auto fd = detail::checked_frame(mu, rel_tol);
    detail::require_marginals(gamma, mu, eta, "coupling_dual");
    const Matrix inv = spectral_map(fd.eig, [](double l) { return 1.0 / l; }).mat();
    double eps = 0.0, chi = 0.0;
    for (const CouplingEntry& e : gamma.entries) {
        const double dist = norm2(sub(mu.points[e.i], eta.points[e.j]));
        eps += e.mass * norm2(mu.points[e.i]) * dist;
        chi += e.mass * norm2(inv.apply(mu.points[e.i])) * dist;
    }
    const double m2_eta = second_moment(eta);
    const double a = fd.lower, b = fd.upper;

    CouplingDualCertificates out;
    out.eps = detail::base_cert(Theorem::coupling_dual_eps, eps, a, (a - eps) * (a - eps) / b,
                                m2_eta);
    out.eps.aux = {{"chi", chi}};
    out.chi = detail::base_cert(Theorem::coupling_dual_chi, chi, 1.0,
                                a * a * (1.0 - chi) * (1.0 - chi) / b, m2_eta);
    out.chi.aux = {{"eps", eps}};
    const std::vector<std::pair<std::string, std::string>> digests = {
        {"mu", digest_measure(mu)},
        {"perturbed", digest_measure(eta)},
        {"gamma", digest_coupling(gamma)}};
    out.eps.inputs_digest = digests;
    out.chi.inputs_digest = digests;
    return out;
}

/// Parseval-reconstruction perturbation along gamma in Gamma(mu, eta).
inline PerturbationCertificate certify_parseval_tau(const DiscreteMeasure& mu,
                                                    const DiscreteMeasure& eta,
                                                    const Coupling& gamma,
                                                    double rel_tol = kSingularRelTol) {
    const auto fd = detail::checked_frame(mu, rel_tol);
    detail::require_marginals(gamma, mu, eta, "parseval_tau");
    const Matrix half = spectral_map(fd.eig, [](double l) { return 1.0 / std::sqrt(l); }).mat();
    double tau = 0.0;
    for (const CouplingEntry& e : gamma.entries)
        tau += e.mass * norm2(mu.points[e.i]) *
               norm2(sub(half.apply(mu.points[e.i]), eta.points[e.j]));
    const double root_a = std::sqrt(fd.lower);
    const double gap = root_a - tau;
    PerturbationCertificate c = detail::base_cert(Theorem::parseval_tau, tau, root_a,
                                                  gap * gap / fd.upper, second_moment(eta));
    c.inputs_digest = {{"mu", digest_measure(mu)},
                       {"perturbed", digest_measure(eta)},
                       {"gamma", digest_coupling(gamma)}};
    return c;
}

/// Compare a certificate's guaranteed bounds against the true spectral
/// bounds of the perturbed measure. A false verdict on premise-satisfying
/// inputs is a bug in the toolkit, not in the theorems.
inline ValidationReport validate(const PerturbationCertificate& cert,
                                 const DiscreteMeasure& perturbed,
                                 double rel_tol = kSingularRelTol) {
    if (!cert.premise_ok)
        throw PremiseNotSatisfied("certificate premise failed; nothing to validate");
    const std::string* expected = cert.digest_of("perturbed");
    if (expected == nullptr || *expected != digest_measure(perturbed))
        throw DigestMismatch("measure digest does not match the certificate's perturbed input");
    const FrameCertificate fc = frame_bounds(perturbed, rel_tol);
    ValidationReport report;
    report.certificate = cert;
    report.actual_lower = fc.lower;
    report.actual_upper = fc.upper;
    report.lower_slack = fc.lower - *cert.guaranteed_lower;
    report.upper_slack = *cert.guaranteed_upper - fc.upper;
    report.verdict =
        report.lower_slack >= -kValidateSlackTol && report.upper_slack >= -kValidateSlackTol;
    return report;
}

}  // namespace pframe
