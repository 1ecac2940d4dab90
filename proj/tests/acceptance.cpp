// Acceptance suite: each criterion prints one PASS/FAIL line. The spectral
// oracle here is deliberately independent of the library's Jacobi solver:
// power iteration and shifted inverse iteration (Rayleigh-quotient refined),
// with linear solves by Gaussian elimination.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pframe/battery.hpp"
#include "pframe/frame.hpp"
#include "pframe/json_io.hpp"
#include "pframe/measure.hpp"
#include "pframe/perturb.hpp"
#include "pframe/rng.hpp"
#include "pframe/transport.hpp"

using namespace pframe;

namespace {

int failures = 0;

void criterion(int num, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", num, name.c_str(),
                detail.c_str());
    if (!pass) ++failures;
}

double wall_seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- independent spectral oracle -----------------------------------------

using Dense = std::vector<std::vector<double>>;

Dense to_dense(const SymMatrix& s) {
    Dense m(s.dim(), std::vector<double>(s.dim()));
    for (std::size_t i = 0; i < s.dim(); ++i)
        for (std::size_t j = 0; j < s.dim(); ++j) m[i][j] = s(i, j);
    return m;
}

Vec dense_apply(const Dense& m, const Vec& v) {
    const std::size_t n = m.size();
    Vec out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += m[i][j] * v[j];
    return out;
}

// Gaussian elimination with partial pivoting; returns false if singular to
// working precision (inverse iteration then retries with a nudged shift).
bool gauss_solve(Dense a, Vec b, Vec& x) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

double rayleigh(const Dense& m, const Vec& v) { return dot(v, dense_apply(m, v)); }

void normalize(Vec& v) {
    const double n = norm2(v);
    if (n > 0)
        for (double& x : v) x /= n;
}

// shifted inverse iteration with a long fixed-shift phase (to lock onto the
// extreme eigenvector before the shift starts moving) followed by
// Rayleigh-quotient refinement; returns the eigenvalue it converges to
double inverse_iterate(const Dense& m, double shift, Vec v, double scale) {
    const std::size_t n = m.size();
    const int fixed_phase = 30;
    normalize(v);
    double lambda = rayleigh(m, v);
    for (int it = 0; it < fixed_phase + 25; ++it) {
        Dense shifted = m;
        for (std::size_t i = 0; i < n; ++i) shifted[i][i] -= shift;
        Vec w;
        if (!gauss_solve(shifted, v, w)) {
            shift += 1e-12 * scale + std::abs(shift) * 1e-12;
            continue;
        }
        normalize(w);
        v = w;
        const double next = rayleigh(m, v);
        const bool settled = std::abs(next - lambda) <= 1e-14 * scale;
        lambda = next;
        if (it >= fixed_phase) {
            if (settled) break;
            shift = lambda;  // Rayleigh refinement once locked
        }
    }
    return lambda;
}

struct OracleBounds {
    double lower, upper;
};

OracleBounds oracle_bounds(const SymMatrix& s, Rng& rng) {
    const std::size_t n = s.dim();
    const Dense m = to_dense(s);
    double scale = 0.0;
    for (const auto& row : m)
        for (double v : row) scale = std::max(scale, std::abs(v));
    scale *= n;
    if (scale == 0.0) return {0.0, 0.0};

    // plain power iteration seeds lambda_max (the input is positive
    // semidefinite, so the top eigenvalue dominates in magnitude as-is)
    Vec v = rng.gaussian_vec(n);
    normalize(v);
    double top = rayleigh(m, v);
    for (int it = 0; it < 400; ++it) {
        Vec w = dense_apply(m, v);
        if (norm2(w) == 0.0) break;
        normalize(w);
        v = w;
        top = rayleigh(m, v);
    }

    // Gershgorin radius bounds the spectrum from above
    double gersh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(m[i][j]);
        gersh = std::max(gersh, row);
    }

    double upper = top, lower = top;
    for (int restart = 0; restart < 8; ++restart) {
        Vec r = rng.gaussian_vec(n);
        const double above =
            restart % 2 == 0 ? top * (1.0 + 1e-6) + 1e-9 * scale : gersh + (1e-6 + 1e-3 * restart) * scale;
        upper = std::max(upper, inverse_iterate(m, above, r, scale));
        lower = std::min(lower, inverse_iterate(m, -(1e-6 + 1e-4 * restart) * scale, r, scale));
    }
    return {lower, upper};
}

// ---- shared generators -----------------------------------------------------

DiscreteMeasure random_any_measure(Rng& rng, std::size_t dim_min, std::size_t dim_max,
                                   std::size_t atoms_min, std::size_t atoms_max) {
    const std::size_t n = rng.uniform_int(dim_min, dim_max);
    const std::size_t k = rng.uniform_int(atoms_min, atoms_max);
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < k; ++i) pts.push_back(rng.gaussian_vec(n));
    return make_measure(std::move(pts), rng.dirichlet(k), Normalize::force);
}

DiscreteMeasure conditioned_frame(Rng& rng, std::size_t dim, std::size_t atoms, double min_rel) {
    for (;;) {
        std::vector<Vec> pts;
        for (std::size_t i = 0; i < atoms; ++i) pts.push_back(rng.gaussian_vec(dim));
        DiscreteMeasure mu = make_measure(std::move(pts), rng.dirichlet(atoms), Normalize::force);
        const auto d = eigh(frame_operator(mu));
        if (d.values.front() > min_rel * d.values.back()) return mu;
    }
}

// ---- criteria ---------------------------------------------------------------

void criterion_1_frame_bounds() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(1001);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const DiscreteMeasure mu = random_any_measure(rng, 1, 8, 1, 32);
        const FrameCertificate fc = frame_bounds(mu);
        const OracleBounds ob = oracle_bounds(fc.frame_operator, rng);
        const double anchor = std::max(fc.upper, 1e-300);
        worst = std::max(worst, std::abs(fc.lower - ob.lower) / anchor);
        worst = std::max(worst, std::abs(fc.upper - ob.upper) / anchor);
    }
    const double secs = wall_seconds(start);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "max relative deviation %.3g, %.2fs", worst, secs);
    criterion(1, "frame bounds match the power/inverse-iteration oracle", worst <= 1e-8 && secs < 10.0,
              detail);
}

void criterion_2_reconstruction() {
    Rng rng(1002);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = rng.uniform_int(1, 6);
        const DiscreteMeasure mu =
            conditioned_frame(rng, n, n + 1 + rng.uniform_int(0, 8), 1e-6);
        const Vec f = rng.gaussian_vec(n);
        const double nf = norm2(f) + 1e-300;
        worst = std::max(worst,
                         reconstruction_residual(mu, f, ReconstructionMode::dual) / nf);
        worst = std::max(worst,
                         reconstruction_residual(mu, f, ReconstructionMode::parseval) / nf);
    }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "max residual %.3g of ||f||", worst);
    criterion(2, "reconstruction identities hold to 1e-9", worst <= 1e-9, detail);
}

void criterion_3_canonical_dual_bounds() {
    Rng rng(1003);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = rng.uniform_int(1, 6);
        const DiscreteMeasure mu =
            conditioned_frame(rng, n, n + 1 + rng.uniform_int(0, 8), 1e-4);
        const FrameCertificate fc = frame_bounds(mu);
        const FrameCertificate dual_fc = frame_bounds(canonical_dual(mu).dual);
        worst = std::max(worst,
                         std::abs(dual_fc.lower - 1.0 / fc.upper) / (1.0 / fc.upper));
        worst = std::max(worst,
                         std::abs(dual_fc.upper - 1.0 / fc.lower) / (1.0 / fc.lower));
    }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "max relative deviation %.3g", worst);
    criterion(3, "canonical dual bounds equal (1/B, 1/A)", worst <= 1e-9, detail);
}

void criterion_4_w2_exactness() {
    Rng rng(1004);
    double worst_cost = 0.0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t k = rng.uniform_int(2, 6);
        const std::size_t n = rng.uniform_int(1, 4);
        std::vector<Vec> a, b;
        for (std::size_t i = 0; i < k; ++i) {
            a.push_back(rng.gaussian_vec(n));
            b.push_back(rng.gaussian_vec(n));
        }
        const DiscreteMeasure mu = uniform_measure(a), nu = uniform_measure(b);
        // brute force over all k! permutation plans
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const Vec d = sub(mu.points[i], nu.points[perm[i]]);
                cost += dot(d, d) / static_cast<double>(k);
            }
            best = std::min(best, cost);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const W2Result r = w2(mu, nu);
        worst_cost = std::max(worst_cost, std::abs(r.distance * r.distance - best));
    }
    double worst_metric = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = rng.uniform_int(1, 3);
        const DiscreteMeasure a = random_any_measure(rng, n, n, 1, 7);
        const DiscreteMeasure b = random_any_measure(rng, n, n, 1, 7);
        const DiscreteMeasure c = random_any_measure(rng, n, n, 1, 7);
        const double ab = w2(a, b).distance;
        worst_metric = std::max(worst_metric, std::abs(ab - w2(b, a).distance));
        worst_metric =
            std::max(worst_metric, ab - (w2(a, c).distance + w2(c, b).distance));
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "max cost deviation %.3g, metric slack %.3g",
                  worst_cost, worst_metric);
    criterion(4, "w2 matches the permutation brute force and is a metric",
              worst_cost <= 1e-9 && worst_metric <= 1e-9, detail);
}

void criterion_5_soundness_battery() {
    const auto start = std::chrono::steady_clock::now();
    BatteryConfig cfg;
    cfg.seed = 1005;
    cfg.trials = 200;
    const BatteryResult result = run_battery(cfg);
    int min_premise_ok = cfg.trials;
    for (const TheoremSummary& s : result.summaries)
        min_premise_ok = std::min(min_premise_ok, s.premise_ok);
    const double secs = wall_seconds(start);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "11 variants x 200 trials, min premise-ok %d, violations %d, %.2fs",
                  min_premise_ok, result.total_violations, secs);
    criterion(5, "theorem soundness battery",
              result.total_violations == 0 && min_premise_ok >= 50 && secs < 60.0, detail);
}

void criterion_6_openness() {
    Rng rng(1006);
    bool all_positive = true;
    double worst_slack = 1e300;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = rng.uniform_int(1, 5);
        const DiscreteMeasure mu =
            conditioned_frame(rng, n, n + 1 + rng.uniform_int(0, 8), 1e-4);
        const double root_a = std::sqrt(frame_bounds(mu).lower);
        DiscreteMeasure nu = mu;
        double dist = 0.0;
        for (;;) {  // perturbations conditioned on the openness premise
            Rng jr(rng.raw());
            nu = jitter(jr, mu, 0.2 * root_a / std::sqrt(static_cast<double>(n)));
            dist = w2(mu, nu).distance;
            if (dist < root_a) break;
        }
        const double guarantee = (root_a - dist) * (root_a - dist);
        const double actual = frame_bounds(nu).lower;
        all_positive = all_positive && guarantee - 1e-9 > 0.0;
        worst_slack = std::min(worst_slack, actual - (guarantee - 1e-9));
    }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "min slack over the guarantee %.3g", worst_slack);
    criterion(6, "W2 openness keeps perturbed measures frames", all_positive && worst_slack >= 0.0,
              detail);
}

void criterion_7_sweetie_optimality() {
    Rng rng(1007);
    bool ok = true;
    for (int t = 0; t < 10 && ok; ++t) {
        const std::size_t n = rng.uniform_int(1, 4);
        const DiscreteMeasure mu = conditioned_frame(rng, n, n + rng.uniform_int(1, 6), 1e-4);
        Rng jr(rng.raw());
        const DiscreteMeasure nu = jitter(jr, mu, 0.05);
        const PerturbationCertificate cert = certify_sweetie(mu, nu);
        const double r = cert.premise_value;

        // the extremal eigenvector attains |x^t (S_mu - S_nu) x| = R
        const SymMatrix diff(frame_operator(mu).mat() - frame_operator(nu).mat());
        const EigenDecomposition d = eigh(diff);
        const Vec x = std::abs(d.values.front()) > std::abs(d.values.back()) ? d.vector(0)
                                                                             : d.vector(n - 1);
        const double attained = std::abs(dot(x, diff.mat().apply(x)));
        ok = ok && attained >= (1.0 - 1e-9) * r;

        // the coupling variant reports the identical R for any coupling
        for (int c = 0; c < 50 && ok; ++c) {
            const Coupling gamma = random_feasible_plan(rng, mu, nu);
            const PerturbationCertificate cc = certify_sweetie_coupling(mu, nu, gamma);
            ok = ok && std::abs(cc.premise_value - r) <= 1e-10;
        }
    }
    criterion(7, "sweetie R is optimal and coupling-independent", ok,
              ok ? "10 pairs x 50 couplings" : "violation found");
}

void criterion_8_dual_membership() {
    Rng rng(1008);
    bool ok = true;
    double worst_residual = 0.0;
    for (int t = 0; t < 100 && ok; ++t) {
        const std::size_t n = rng.uniform_int(1, 6);
        const DiscreteMeasure mu =
            conditioned_frame(rng, n, n + 1 + rng.uniform_int(0, 6), 1e-4);
        const DualMembership r = dual_membership(mu, canonical_dual(mu).dual);
        ok = ok && r.is_member && r.moment_residual <= 1e-8;
        worst_residual = std::max(worst_residual, r.moment_residual);
    }
    for (std::size_t n = 1; n <= 6 && ok; ++n) {
        Rng local(2000 + n);
        const DiscreteMeasure mu = conditioned_frame(local, n, n + 2, 1e-4);
        const DiscreteMeasure zero = uniform_measure({Vec(n, 0.0)});
        ok = ok && !dual_membership(mu, zero).is_member;
    }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "max witness residual %.3g", worst_residual);
    criterion(8, "dual membership accepts canonical duals and rejects delta_0", ok, detail);
}

void criterion_9_paley_sharpness() {
    Rng rng(1009);
    bool ok = true;
    for (int t = 0; t < 100 && ok; ++t) {
        const std::size_t n = rng.uniform_int(1, 4);
        const DiscreteMeasure mu = conditioned_frame(rng, n, n + rng.uniform_int(1, 8), 1e-4);
        const double root_a = std::sqrt(frame_bounds(mu).lower);
        Rng jr(rng.raw());
        const DiscreteMeasure nu =
            jitter(jr, mu, 0.1 * root_a / std::sqrt(static_cast<double>(n)));
        const PairedMeasure p = pair_diagonal(mu, nu);
        const PerturbationCertificate cert = certify_paley(p, 0.0, 0.0);
        double delta = 0.0;
        for (const auto& [k, v] : cert.aux)
            if (k == "delta") delta = v;
        if (!(delta > 0.0)) continue;  // zero displacement: nothing to falsify
        ok = ok && cert.premise_ok && validate(cert, y_marginal(p)).verdict;
        ok = ok && !falsify_paley(p, 0.0, 0.0, delta, 20, rng.raw()).falsified;
        ok = ok && falsify_paley(p, 0.0, 0.0, 0.99 * delta, 20, rng.raw()).falsified;
    }
    criterion(9, "AUTO delta validates and 0.99 delta is falsified", ok,
              ok ? "100 paired measures" : "violation found");
}

void criterion_10_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "pframe_acceptance";
    fs::create_directories(dir);
    const fs::path a = dir / "battery_a.csv", b = dir / "battery_b.csv";
    const std::string base = std::string(PFRAME_CLI_PATH) +
                             " validate --seed 97 --trials 12 --out ";
    const int ra = std::system((base + a.string() + " 2>/dev/null").c_str());
    const int rb = std::system((base + b.string() + " 2>/dev/null").c_str());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    const std::string ta = slurp(a), tb = slurp(b);
    const bool ok = ra == 0 && rb == 0 && !ta.empty() && ta == tb;
    char detail[96];
    std::snprintf(detail, sizeof(detail), "%zu identical bytes", ta.size());
    criterion(10, "validate --seed S twice produces byte-identical CSV", ok, detail);
}

}  // namespace

void guarded(int num, const char* name, void (*fn)()) {
    try {
        fn();
    } catch (const std::exception& e) {
        criterion(num, name, false, std::string("exception: ") + e.what());
    }
}

int main() {
    guarded(1, "frame bounds", criterion_1_frame_bounds);
    guarded(2, "reconstruction", criterion_2_reconstruction);
    guarded(3, "canonical dual bounds", criterion_3_canonical_dual_bounds);
    guarded(4, "w2 exactness", criterion_4_w2_exactness);
    guarded(5, "soundness battery", criterion_5_soundness_battery);
    guarded(6, "openness", criterion_6_openness);
    guarded(7, "sweetie optimality", criterion_7_sweetie_optimality);
    guarded(8, "dual membership", criterion_8_dual_membership);
    guarded(9, "paley sharpness", criterion_9_paley_sharpness);
    guarded(10, "determinism", criterion_10_determinism);
    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", failures);
    return 1;
}
