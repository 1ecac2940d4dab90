#pragma once

// Randomized soundness battery: per theorem variant, generate inputs across
// a sweep of perturbation scales, compute the certificate, and validate the
// guaranteed bounds against the true spectral bounds of the perturbed
// measure. Any false verdict on a premise-satisfying trial is a toolkit bug.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pframe/frame.hpp"
#include "pframe/measure.hpp"
#include "pframe/perturb.hpp"
#include "pframe/rng.hpp"
#include "pframe/transport.hpp"

namespace pframe {

struct BatteryConfig {
    std::uint64_t seed = 0;
    int trials = 200;  // per theorem variant
    std::size_t dim_min = 2, dim_max = 6;
    std::size_t atoms_min = 3, atoms_max = 32;
    std::vector<double> scales = {1e-3, 1e-2, 1e-1, 0.3, 1.0};
    bool corrupt = false;  // self-test: skew bounds by 10% and expect detection
};

/// Random frame per the battery generator: i.i.d. standard Gaussian atoms,
/// Dirichlet(1) masses; regenerated until lambda_min > min_lambda.
inline DiscreteMeasure random_frame(Rng& rng, std::size_t dim, std::size_t atoms_min,
                                    std::size_t atoms_max, double min_lambda = 1e-8,
                                    int max_tries = 10000) {
    for (int t = 0; t < max_tries; ++t) {
        const std::size_t k = rng.uniform_int(atoms_min, atoms_max);
        std::vector<Vec> points;
        points.reserve(k);
        for (std::size_t i = 0; i < k; ++i) points.push_back(rng.gaussian_vec(dim));
        DiscreteMeasure mu = make_measure(std::move(points), rng.dirichlet(k), Normalize::force);
        const EigenDecomposition d = eigh(frame_operator(mu));
        if (d.values.front() > min_lambda) return mu;
    }
    throw Error("random frame generation failed after " + std::to_string(max_tries) +
                " tries (dim " + std::to_string(dim) + ", atoms " + std::to_string(atoms_min) +
                ".." + std::to_string(atoms_max) + ")");
}

/// Atomwise Gaussian jitter at the given scale; masses unchanged.
inline DiscreteMeasure jitter(Rng& rng, const DiscreteMeasure& mu, double scale) {
    DiscreteMeasure out = mu;
    for (Vec& p : out.points)
        for (double& v : p) v += scale * rng.gaussian();
    return out;
}

/// Random vertex of the transportation polytope: greedy filling along
/// shuffled row/column orders. Occasionally blends two vertices for an
/// interior plan.
inline Coupling random_feasible_plan(Rng& rng, const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu) {
    const std::size_t m = mu.size(), k = nu.size();
    auto vertex = [&]() {
        std::vector<std::size_t> rows(m), cols(k);
        for (std::size_t i = 0; i < m; ++i) rows[i] = i;
        for (std::size_t j = 0; j < k; ++j) cols[j] = j;
        rng.shuffle(rows);
        rng.shuffle(cols);
        std::vector<double> rp = mu.masses, rq = nu.masses;
        std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> cells;
        std::size_t a = 0, b = 0;
        while (a < m && b < k) {
            const std::size_t i = rows[a], j = cols[b];
            const double t = std::min(rp[i], rq[j]);
            if (t > 0.0) cells.push_back({{i, j}, t});
            rp[i] -= t;
            rq[j] -= t;
            if (rp[i] <= rq[j])
                ++a;
            else
                ++b;
        }
        return cells;
    };
    std::map<std::pair<std::size_t, std::size_t>, double> agg;
    if (rng.uniform() < 0.5) {
        for (const auto& [ij, mass] : vertex()) agg[ij] += mass;
    } else {
        for (const auto& [ij, mass] : vertex()) agg[ij] += 0.5 * mass;
        for (const auto& [ij, mass] : vertex()) agg[ij] += 0.5 * mass;
    }
    std::vector<CouplingEntry> entries;
    for (const auto& [ij, mass] : agg)
        if (mass > 0.0) entries.push_back({ij.first, ij.second, mass});
    return make_coupling(mu, nu, std::move(entries));
}

struct TrialRow {
    Theorem theorem;
    std::uint64_t seed = 0;
    double premise_value = 0.0;
    double threshold = 0.0;
    bool premise_ok = false;
    std::optional<double> guaranteed_lower;
    double actual_lower = 0.0;
    std::optional<double> lower_slack;
    std::optional<bool> verdict;
};

struct TheoremSummary {
    Theorem theorem;
    int trials = 0;
    int premise_ok = 0;
    int violations = 0;
};

struct BatteryResult {
    std::vector<TrialRow> rows;
    std::vector<TheoremSummary> summaries;
    int total_violations = 0;
    bool all_sound() const { return total_violations == 0; }
};

namespace detail {

struct BatteryTrial {
    PerturbationCertificate cert;
    DiscreteMeasure perturbed;
};

// Premises of the canonical-dual corollary (product coupling) are only
// attainable in dimension 1, and there only for measures concentrated away
// from the origin; the trial family reflects that.
inline DiscreteMeasure concentrated_frame_1d(Rng& rng, const BatteryConfig& cfg, double scale) {
    const std::size_t k = rng.uniform_int(cfg.atoms_min, cfg.atoms_max);
    std::vector<Vec> points;
    points.reserve(k);
    for (std::size_t i = 0; i < k; ++i) points.push_back({1.0 + scale * rng.gaussian()});
    return make_measure(std::move(points), rng.dirichlet(k), Normalize::force);
}

inline BatteryTrial battery_trial(Theorem t, Rng& rng, const BatteryConfig& cfg, double scale) {
    switch (t) {
        case Theorem::quad_close: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure nu = jitter(rng, mu, scale);
            Coupling gamma = diagonal_coupling(mu, nu);
            return {certify_quadclose(mu, nu, gamma), std::move(nu)};
        }
        case Theorem::w2_openness: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure nu = jitter(rng, mu, scale);
            return {certify_w2(mu, nu), std::move(nu)};
        }
        case Theorem::sweetie: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure nu = jitter(rng, mu, scale);
            return {certify_sweetie(mu, nu), std::move(nu)};
        }
        case Theorem::sweetie_coupling: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure nu = jitter(rng, mu, scale);
            Coupling gamma = random_feasible_plan(rng, mu, nu);
            return {certify_sweetie_coupling(mu, nu, gamma), std::move(nu)};
        }
        case Theorem::paley_wiener: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure nu = jitter(rng, mu, scale);
            PairedMeasure p = pair_diagonal(mu, nu);
            return {certify_paley(p, 0.0, 0.0), y_marginal(p)};
        }
        case Theorem::dual_stability: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            CanonicalDual cd = canonical_dual(mu);
            // eta perturbs mu; gamma23 sends each dual atom back to the
            // jittered original atom. sigma weighs the displacement by
            // ||y||, so the jitter is taken relative to the dual's scale.
            const double local = scale / (1.0 + std::sqrt(second_moment(cd.dual)));
            DiscreteMeasure eta = jitter(rng, mu, local);
            Coupling gamma23 = diagonal_coupling(cd.dual, eta);
            return {certify_dual_stability(mu, cd.dual, cd.coupling, eta, gamma23),
                    std::move(eta)};
        }
        case Theorem::canonical_dual_sigma: {
            DiscreteMeasure mu = concentrated_frame_1d(rng, cfg, scale);
            DiscreteMeasure eta = jitter(rng, mu, scale);
            return {certify_canonical_dual(mu, eta).sigma, std::move(eta)};
        }
        case Theorem::canonical_dual_eps_hat: {
            DiscreteMeasure mu = concentrated_frame_1d(rng, cfg, scale);
            DiscreteMeasure eta = jitter(rng, mu, scale);
            return {certify_canonical_dual(mu, eta).eps_hat, std::move(eta)};
        }
        case Theorem::coupling_dual_eps: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure eta = jitter(rng, mu, scale);
            Coupling gamma = diagonal_coupling(mu, eta);
            return {certify_coupling_dual(mu, eta, gamma).eps, std::move(eta)};
        }
        case Theorem::coupling_dual_chi: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure eta = jitter(rng, mu, scale);
            Coupling gamma = diagonal_coupling(mu, eta);
            return {certify_coupling_dual(mu, eta, gamma).chi, std::move(eta)};
        }
        case Theorem::parseval_tau: {
            const std::size_t dim = rng.uniform_int(cfg.dim_min, cfg.dim_max);
            DiscreteMeasure mu = random_frame(rng, dim, cfg.atoms_min, cfg.atoms_max);
            DiscreteMeasure eta = jitter(rng, canonical_parseval(mu), scale);
            Coupling gamma = diagonal_coupling(mu, eta);
            return {certify_parseval_tau(mu, eta, gamma), std::move(eta)};
        }
    }
    throw UnknownTheorem("bad theorem id");
}

}  // namespace detail

inline std::uint64_t battery_trial_seed(std::uint64_t base, std::size_t variant, int trial) {
    return splitmix64(splitmix64(base + 1000003ull * (variant + 1)) ^
                      static_cast<std::uint64_t>(trial));
}

namespace detail {

inline TrialRow run_one_trial(const BatteryConfig& cfg, std::size_t variant, int trial) {
    const Theorem theorem = static_cast<Theorem>(variant);
    const std::uint64_t seed = battery_trial_seed(cfg.seed, variant, trial);
    Rng rng(seed);
    const double scale = cfg.scales[trial % cfg.scales.size()];
    BatteryTrial tr = battery_trial(theorem, rng, cfg, scale);

    TrialRow row;
    row.theorem = theorem;
    row.seed = seed;
    row.premise_value = tr.cert.premise_value;
    row.threshold = tr.cert.premise_threshold;
    row.premise_ok = tr.cert.premise_ok;
    row.actual_lower = frame_bounds(tr.perturbed).lower;
    if (tr.cert.premise_ok) {
        PerturbationCertificate cert = tr.cert;
        if (cfg.corrupt) {
            *cert.guaranteed_lower *= 1.1;
            *cert.guaranteed_upper *= 0.9;
        }
        const ValidationReport report = validate(cert, tr.perturbed);
        row.guaranteed_lower = cert.guaranteed_lower;
        row.lower_slack = report.lower_slack;
        row.verdict = report.verdict;
    }
    return row;
}

}  // namespace detail

/// Trials run in parallel (each owns its inputs); rows are emitted sorted by
/// (theorem, trial seed), so the report does not depend on scheduling.
inline BatteryResult run_battery(const BatteryConfig& cfg) {
    const std::size_t total = kTheoremCount * static_cast<std::size_t>(cfg.trials);
    std::vector<TrialRow> rows(total);

    const unsigned hw = std::thread::hardware_concurrency();
    const std::size_t workers = std::min<std::size_t>(std::max(1u, hw), 8);
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&](std::size_t offset) {
        try {
            for (std::size_t idx = offset; idx < total; idx += workers) {
                const std::size_t variant = idx / cfg.trials;
                const int trial = static_cast<int>(idx % cfg.trials);
                rows[idx] = detail::run_one_trial(cfg, variant, trial);
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::stable_sort(rows.begin(), rows.end(), [](const TrialRow& a, const TrialRow& b) {
        if (a.theorem != b.theorem) return static_cast<int>(a.theorem) < static_cast<int>(b.theorem);
        return a.seed < b.seed;
    });

    BatteryResult result;
    result.rows = std::move(rows);
    for (std::size_t v = 0; v < kTheoremCount; ++v)
        result.summaries.push_back(TheoremSummary{static_cast<Theorem>(v), 0, 0, 0});
    for (const TrialRow& row : result.rows) {
        TheoremSummary& s = result.summaries[static_cast<std::size_t>(row.theorem)];
        ++s.trials;
        if (row.premise_ok) ++s.premise_ok;
        if (row.verdict && !*row.verdict) ++s.violations;
    }
    for (const TheoremSummary& s : result.summaries) result.total_violations += s.violations;
    return result;
}

inline std::string format_double_17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string battery_csv(const BatteryResult& result) {
    std::string out =
        "theorem,seed,premise_value,threshold,premise_ok,guaranteed_lower,actual_lower,"
        "lower_slack,verdict\n";
    for (const TrialRow& r : result.rows) {
        out += theorem_name(r.theorem);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += format_double_17(r.premise_value);
        out += ',';
        out += format_double_17(r.threshold);
        out += ',';
        out += r.premise_ok ? "true" : "false";
        out += ',';
        if (r.guaranteed_lower) out += format_double_17(*r.guaranteed_lower);
        out += ',';
        out += format_double_17(r.actual_lower);
        out += ',';
        if (r.lower_slack) out += format_double_17(*r.lower_slack);
        out += ',';
        if (r.verdict) out += *r.verdict ? "true" : "false";
        out += '\n';
    }
    return out;
}

}  // namespace pframe
