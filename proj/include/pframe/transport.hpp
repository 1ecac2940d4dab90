#pragma once

// Couplings between discrete measures, conditional-independence gluing,
// exact discrete 2-Wasserstein distance (transportation simplex, northwest
// corner start, Bland's rule), and transport-dual membership via a phase-1
// simplex feasibility solve. Exact methods on purpose: the certificates
// downstream compare against strict inequalities, so approximation error in
// the transport layer would corrupt premise verdicts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pframe/errors.hpp"
#include "pframe/linalg.hpp"
#include "pframe/measure.hpp"

namespace pframe {

inline constexpr double kMarginalTol = 1e-10;
inline constexpr double kDualFeasTol = 1e-8;  // phase-1 objective threshold

struct CouplingEntry {
    std::size_t i = 0;  // index into mu atoms
    std::size_t j = 0;  // index into nu atoms
    double mass = 0.0;
};

struct Coupling {
    DiscreteMeasure mu;
    DiscreteMeasure nu;
    std::vector<CouplingEntry> entries;
};

inline Coupling make_coupling(DiscreteMeasure mu, DiscreteMeasure nu,
                              std::vector<CouplingEntry> entries) {
    std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
    for (const CouplingEntry& e : entries) {
        if (e.i >= mu.size() || e.j >= nu.size())
            throw Error("coupling entry index out of range");
        if (!(e.mass > 0.0)) throw NonpositiveMass("coupling entries must have positive mass");
        row[e.i] += e.mass;
        col[e.j] += e.mass;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (std::abs(row[i] - mu.masses[i]) > kMarginalTol)
            throw MarginalMismatch("row " + std::to_string(i) + " sums to " +
                                   std::to_string(row[i]) + ", mu mass is " +
                                   std::to_string(mu.masses[i]));
        total += row[i];
    }
    for (std::size_t j = 0; j < col.size(); ++j)
        if (std::abs(col[j] - nu.masses[j]) > kMarginalTol)
            throw MarginalMismatch("column " + std::to_string(j) + " sums to " +
                                   std::to_string(col[j]) + ", nu mass is " +
                                   std::to_string(nu.masses[j]));
    if (std::abs(total - 1.0) > kMassSumTol)
        throw MarginalMismatch("coupling total mass " + std::to_string(total));
    return Coupling{std::move(mu), std::move(nu), std::move(entries)};
}

/// mu (x) nu: entries (i, j, p_i q_j) for all pairs.
inline Coupling product_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<CouplingEntry> entries;
    entries.reserve(mu.size() * nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            entries.push_back({i, j, mu.masses[i] * nu.masses[j]});
    return make_coupling(mu, nu, std::move(entries));
}

/// Graph coupling (Id x T)_# mu: atom i paired with T x_i.
inline Coupling map_coupling(const DiscreteMeasure& mu, const LinearMap& t) {
    DiscreteMeasure nu = pushforward(mu, t);
    std::vector<CouplingEntry> entries;
    entries.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) entries.push_back({i, i, mu.masses[i]});
    return make_coupling(mu, std::move(nu), std::move(entries));
}

/// Diagonal coupling of two index-aligned measures with matching masses.
inline Coupling diagonal_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.size() != nu.size())
        throw MarginalMismatch("diagonal coupling needs equal atom counts");
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (std::abs(mu.masses[i] - nu.masses[i]) > kMarginalTol)
            throw MarginalMismatch("diagonal coupling needs matching masses at atom " +
                                   std::to_string(i));
    std::vector<CouplingEntry> entries;
    entries.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) entries.push_back({i, i, mu.masses[i]});
    return make_coupling(mu, nu, std::move(entries));
}

inline double quadratic_cost(const Coupling& g) {
    double s = 0.0;
    for (const CouplingEntry& e : g.entries) {
        const Vec d = sub(g.mu.points[e.i], g.nu.points[e.j]);
        s += e.mass * dot(d, d);
    }
    return s;
}

/// sum mass * x_i y_j^t — the coupling moment used for dual-witness checks.
inline Matrix coupling_moment(const Coupling& g) {
    Matrix m(g.mu.dim, g.nu.dim);
    for (const CouplingEntry& e : g.entries)
        for (std::size_t a = 0; a < g.mu.dim; ++a)
            for (std::size_t b = 0; b < g.nu.dim; ++b)
                m(a, b) += e.mass * g.mu.points[e.i][a] * g.nu.points[e.j][b];
    return m;
}

struct TripleEntry {
    std::size_t i = 0, j = 0, k = 0;
    double mass = 0.0;
};

struct TriplePlan {
    DiscreteMeasure mu, nu, eta;
    std::vector<TripleEntry> entries;
};

/// Conditional-independence gluing of gamma12 in Gamma(mu,nu) and gamma23 in
/// Gamma(nu,eta): mass(i,j,k) = gamma12(i,j) * gamma23(j,k) / nu(j).
inline TriplePlan glue(const Coupling& g12, const Coupling& g23) {
    if (!atomwise_equal(g12.nu, g23.mu, kMarginalTol))
        throw MarginalMismatch("middle marginals of the two couplings differ");
    const std::size_t mid = g12.nu.size();
    std::vector<std::vector<const CouplingEntry*>> left(mid), right(mid);
    for (const CouplingEntry& e : g12.entries) left[e.j].push_back(&e);
    for (const CouplingEntry& e : g23.entries) right[e.i].push_back(&e);
    TriplePlan plan{g12.mu, g12.nu, g23.nu, {}};
    for (std::size_t j = 0; j < mid; ++j) {
        const double nj = g12.nu.masses[j];
        if (!(nj > 0.0)) continue;
        for (const CouplingEntry* a : left[j])
            for (const CouplingEntry* b : right[j])
                plan.entries.push_back({a->i, j, b->j, a->mass * b->mass / nj});
    }
    return plan;
}

inline Coupling project_xy(const TriplePlan& p) {
    std::map<std::pair<std::size_t, std::size_t>, double> agg;
    for (const TripleEntry& e : p.entries) agg[{e.i, e.j}] += e.mass;
    std::vector<CouplingEntry> entries;
    for (const auto& [key, mass] : agg) entries.push_back({key.first, key.second, mass});
    return make_coupling(p.mu, p.nu, std::move(entries));
}

inline Coupling project_yz(const TriplePlan& p) {
    std::map<std::pair<std::size_t, std::size_t>, double> agg;
    for (const TripleEntry& e : p.entries) agg[{e.j, e.k}] += e.mass;
    std::vector<CouplingEntry> entries;
    for (const auto& [key, mass] : agg) entries.push_back({key.first, key.second, mass});
    return make_coupling(p.nu, p.eta, std::move(entries));
}

namespace detail {

// Transportation simplex on the dense m x k quadratic-cost problem.
// Basis = spanning tree of the bipartite row/column graph, northwest-corner
// start, Bland's rule for both the entering and the leaving variable.
class TransportSimplex {
  public:
    TransportSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                     const std::vector<double>& cost)
        : m_(supply.size()), k_(demand.size()), cost_(cost) {
        northwest_start(supply, demand);
    }

    // returns optimal cost; cells() afterwards holds the optimal basic flows
    double solve() {
        const double cmax = *std::max_element(cost_.begin(), cost_.end());
        const double enter_tol = 1e-12 * (1.0 + cmax);
        const std::size_t max_pivots = 1000000;
        std::vector<double> u(m_), v(k_);
        // Dantzig's rule (most negative reduced cost) for speed; a run of
        // degenerate pivots hands control to Bland's rule, whose smallest-
        // index choice cannot cycle. Both rules are deterministic.
        std::size_t degenerate_run = 0;
        for (std::size_t pivot = 0;; ++pivot) {
            if (pivot >= max_pivots)
                throw NoConvergence("transportation simplex hit the pivot cap", residual());
            potentials(u, v);
            const bool bland = degenerate_run > m_ + k_;
            std::size_t ei = m_, ej = k_;
            bool found = false;
            double best = -enter_tol;
            for (std::size_t i = 0; i < m_ && !(found && bland); ++i)
                for (std::size_t j = 0; j < k_; ++j) {
                    if (basic_[i * k_ + j]) continue;
                    const double reduced = cost_[i * k_ + j] - u[i] - v[j];
                    if (reduced < best) {
                        ei = i;
                        ej = j;
                        found = true;
                        if (bland) break;
                        best = reduced;
                    }
                }
            if (!found) break;
            const double theta = pivot_on(ei, ej);
            degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
        }
        double total = 0.0;
        for (const Cell& c : cells_) total += c.flow * cost_[c.r * k_ + c.c];
        return total;
    }

    struct Cell {
        std::size_t r, c;
        double flow;
    };
    const std::vector<Cell>& cells() const { return cells_; }

  private:
    void northwest_start(const std::vector<double>& supply, const std::vector<double>& demand) {
        std::vector<double> rp = supply, rq = demand;
        basic_.assign(m_ * k_, false);
        std::size_t i = 0, j = 0;
        while (true) {
            const double t = std::min(rp[i], rq[j]);
            cells_.push_back({i, j, t});
            basic_[i * k_ + j] = true;
            rp[i] -= t;
            rq[j] -= t;
            if (cells_.size() == m_ + k_ - 1) break;
            const bool can_down = i + 1 < m_, can_right = j + 1 < k_;
            if (!can_right)
                ++i;
            else if (!can_down)
                ++j;
            else if (rp[i] <= rq[j])
                ++i;
            else
                ++j;
        }
    }

    // adjacency of the basis tree: node = row index, or m_ + column index
    std::vector<std::vector<std::size_t>> adjacency() const {
        std::vector<std::vector<std::size_t>> adj(m_ + k_);
        for (std::size_t e = 0; e < cells_.size(); ++e) {
            adj[cells_[e].r].push_back(e);
            adj[m_ + cells_[e].c].push_back(e);
        }
        return adj;
    }

    void potentials(std::vector<double>& u, std::vector<double>& v) const {
        const auto adj = adjacency();
        std::vector<char> seen(m_ + k_, 0);
        std::vector<std::size_t> stack{0};
        u[0] = 0.0;
        seen[0] = 1;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            for (std::size_t e : adj[node]) {
                const Cell& c = cells_[e];
                const std::size_t other = (node < m_) ? m_ + c.c : c.r;
                if (seen[other]) continue;
                seen[other] = 1;
                if (other < m_)
                    u[other] = cost_[c.r * k_ + c.c] - v[c.c];
                else
                    v[other - m_] = cost_[c.r * k_ + c.c] - u[c.r];
                stack.push_back(other);
            }
        }
    }

    // executes the pivot and returns the amount of flow moved
    double pivot_on(std::size_t ei, std::size_t ej) {
        // unique tree path from row node ei to column node m_+ej
        const auto adj = adjacency();
        std::vector<std::ptrdiff_t> parent_edge(m_ + k_, -1);
        std::vector<std::ptrdiff_t> parent_node(m_ + k_, -1);
        std::vector<char> seen(m_ + k_, 0);
        std::vector<std::size_t> stack{ei};
        seen[ei] = 1;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            if (node == m_ + ej) break;
            for (std::size_t e : adj[node]) {
                const Cell& c = cells_[e];
                const std::size_t other = (node < m_) ? m_ + c.c : c.r;
                if (seen[other]) continue;
                seen[other] = 1;
                parent_edge[other] = static_cast<std::ptrdiff_t>(e);
                parent_node[other] = static_cast<std::ptrdiff_t>(node);
                stack.push_back(other);
            }
        }
        // walk back from the column node; signs alternate -, +, -, ...
        std::vector<std::size_t> minus, plus;
        std::size_t node = m_ + ej;
        bool negative = true;
        while (node != ei) {
            const std::size_t e = static_cast<std::size_t>(parent_edge[node]);
            (negative ? minus : plus).push_back(e);
            negative = !negative;
            node = static_cast<std::size_t>(parent_node[node]);
        }
        // ratio test over the minus cells; Bland tie-break on flat cell index
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = cells_.size();
        std::size_t leave_key = 0;
        for (std::size_t e : minus) {
            const std::size_t key = cells_[e].r * k_ + cells_[e].c;
            if (cells_[e].flow < theta - 1e-18 ||
                (std::abs(cells_[e].flow - theta) <= 1e-18 && (leave == cells_.size() || key < leave_key))) {
                theta = cells_[e].flow;
                leave = e;
                leave_key = key;
            }
        }
        for (std::size_t e : plus) cells_[e].flow += theta;
        for (std::size_t e : minus) cells_[e].flow = std::max(0.0, cells_[e].flow - theta);
        basic_[cells_[leave].r * k_ + cells_[leave].c] = false;
        cells_[leave] = {ei, ej, theta};
        basic_[ei * k_ + ej] = true;
        return theta;
    }

    double residual() const {
        double s = 0.0;
        for (const Cell& c : cells_) s += c.flow;
        return s;
    }

    std::size_t m_, k_;
    std::vector<double> cost_;
    std::vector<Cell> cells_;
    std::vector<char> basic_;
};

}  // namespace detail

struct W2Result {
    double distance = 0.0;
    Coupling plan;
};

/// Exact discrete 2-Wasserstein distance and an optimal plan.
inline W2Result w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != nu.dim)
        throw DimensionMismatch("w2: measures live in different dimensions (" +
                                std::to_string(mu.dim) + " vs " + std::to_string(nu.dim) + ")");
    const std::size_t m = mu.size(), k = nu.size();
    std::vector<double> cost(m * k);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            const Vec d = sub(mu.points[i], nu.points[j]);
            cost[i * k + j] = dot(d, d);
        }
    detail::TransportSimplex simplex(mu.masses, nu.masses, cost);
    const double total = simplex.solve();
    std::vector<CouplingEntry> entries;
    for (const auto& c : simplex.cells())
        if (c.flow > 0.0) entries.push_back({c.r, c.c, c.flow});
    return W2Result{std::sqrt(std::max(0.0, total)), make_coupling(mu, nu, std::move(entries))};
}

struct DualMembership {
    bool is_member = false;
    std::optional<Coupling> witness;  // present iff member
    double infeasibility = 0.0;       // phase-1 objective
    double moment_residual = 0.0;     // Frobenius residual of the witness moment
};

/// Is nu a transport dual of mu? Feasibility of the LP over gamma_ij >= 0
/// with both marginal constraints and the n^2 moment equalities
/// sum gamma_ij x_i y_j^t = Id, decided by a phase-1 simplex.
inline DualMembership dual_membership(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != nu.dim)
        throw DimensionMismatch("dual_membership: measures live in different dimensions");
    const std::size_t n = mu.dim, m = mu.size(), k = nu.size();
    const std::size_t nvars = m * k;
    const std::size_t nrows = m + k + n * n;

    // rows: [0,m) row sums, [m,m+k) column sums, then moment equalities
    std::vector<double> tab(nrows * (nvars + 1), 0.0);
    auto at = [&](std::size_t r, std::size_t c) -> double& { return tab[r * (nvars + 1) + c]; };
    const std::size_t rhs = nvars;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) at(i, i * k + j) = 1.0;
        at(i, rhs) = mu.masses[i];
    }
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < m; ++i) at(m + j, i * k + j) = 1.0;
        at(m + j, rhs) = nu.masses[j];
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t r = m + k + a * n + b;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < k; ++j)
                    at(r, i * k + j) = mu.points[i][a] * nu.points[j][b];
            at(r, rhs) = (a == b) ? 1.0 : 0.0;
        }
    // rhs entries are masses or 0/1, so every artificial start is valid;
    // equilibrate rows so pivot tolerances mean the same thing everywhere
    for (std::size_t r = 0; r < nrows; ++r) {
        double rmax = std::abs(at(r, rhs));
        for (std::size_t j = 0; j < nvars; ++j) rmax = std::max(rmax, std::abs(at(r, j)));
        const double s = std::max(rmax, 1e-3);
        for (std::size_t j = 0; j <= nvars; ++j) at(r, j) /= s;
    }

    // phase-1: minimize the sum of one artificial per row. The artificial
    // columns are implicit (identity); once one leaves the basis it never
    // re-enters, so only gamma columns are entering candidates. The working
    // tableau is refactorized from the original data at a fixed cadence and
    // whenever the walk stalls, so Gauss-Jordan drift never accumulates.
    const std::vector<double> orig = tab;
    auto orig_at = [&](std::size_t r, std::size_t c) -> double {
        return orig[r * (nvars + 1) + c];
    };
    std::vector<std::size_t> basis(nrows);  // nvars + r encodes artificial r
    for (std::size_t r = 0; r < nrows; ++r) basis[r] = nvars + r;

    // tableau <- B^{-1} [A | b] by Gaussian elimination on [B | A | b]
    auto refactorize = [&]() {
        const std::size_t width = nrows + nvars + 1;
        std::vector<double> aug(nrows * width, 0.0);
        for (std::size_t r = 0; r < nrows; ++r) {
            for (std::size_t c = 0; c < nrows; ++c) {
                const std::size_t var = basis[c];
                aug[r * width + c] =
                    var < nvars ? orig_at(r, var) : (var - nvars == r ? 1.0 : 0.0);
            }
            for (std::size_t j = 0; j <= nvars; ++j)
                aug[r * width + nrows + j] = orig_at(r, j);
        }
        for (std::size_t col = 0; col < nrows; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < nrows; ++r)
                if (std::abs(aug[r * width + col]) > std::abs(aug[piv * width + col])) piv = r;
            if (piv != col)
                for (std::size_t j = 0; j < width; ++j)
                    std::swap(aug[piv * width + j], aug[col * width + j]);
            const double p = aug[col * width + col];
            if (std::abs(p) < 1e-300) continue;  // defect surfaces in the residuals later
            for (std::size_t r = 0; r < nrows; ++r) {
                if (r == col) continue;
                const double f = aug[r * width + col] / p;
                if (f == 0.0) continue;
                for (std::size_t j = col; j < width; ++j)
                    aug[r * width + j] -= f * aug[col * width + j];
            }
            const double inv = 1.0 / p;
            for (std::size_t j = col; j < width; ++j) aug[col * width + j] *= inv;
        }
        for (std::size_t r = 0; r < nrows; ++r)
            for (std::size_t j = 0; j <= nvars; ++j) at(r, j) = aug[r * width + nrows + j];
    };

    const double enter_tol = 1e-9;
    const double pivot_tol = 1e-7;  // rows are equilibrated; smaller pivots
                                    // drag near-dependent columns into the basis
    const std::size_t max_pivots = 50000;
    const std::size_t refactor_every = 40;
    std::vector<double> wrow(nvars);
    std::vector<char> blocked(nvars, 0);   // columns with no admissible pivot row
    std::vector<char> in_basis(nvars, 0);  // gamma columns currently basic

    double objective = 0.0;
    bool fresh = true;
    for (std::size_t pivot = 0;; ++pivot) {
        if (pivot >= max_pivots)
            throw NoConvergence("phase-1 simplex hit the pivot cap", objective);
        if (pivot > 0 && pivot % refactor_every == 0 && !fresh) {
            refactorize();
            fresh = true;
        }
        std::fill(wrow.begin(), wrow.end(), 0.0);
        std::fill(blocked.begin(), blocked.end(), 0);
        objective = 0.0;
        for (std::size_t r = 0; r < nrows; ++r) {
            if (basis[r] < nvars) continue;
            for (std::size_t j = 0; j < nvars; ++j) wrow[j] += at(r, j);
            objective += at(r, rhs);
        }
        // Bland: smallest-index gamma column that still reduces w
        std::size_t col = nvars, row = nrows;
        for (std::size_t j = 0; j < nvars && row == nrows; ++j) {
            if (in_basis[j] || blocked[j] || wrow[j] <= enter_tol) continue;
            col = j;
            // ratio test; Bland tie-break on the basic variable index
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < nrows; ++r) {
                const double a = at(r, col);
                if (a <= pivot_tol) continue;
                const double ratio = std::max(0.0, at(r, rhs)) / a;
                if (ratio < best - 1e-12 * (1.0 + best) ||
                    (ratio <= best + 1e-12 * (1.0 + best) &&
                     (row == nrows || basis[r] < basis[row]))) {
                    best = ratio;
                    row = r;
                }
            }
            if (row == nrows) blocked[col] = 1;  // numerically unusable column
        }
        if (row == nrows) {
            if (!fresh) {
                // a stall on a drifted tableau is not conclusive
                refactorize();
                fresh = true;
                continue;
            }
            break;  // no descent direction left
        }
        const double piv = at(row, col);
        for (std::size_t j = 0; j <= nvars; ++j) at(row, j) /= piv;
        at(row, col) = 1.0;
        for (std::size_t r = 0; r < nrows; ++r) {
            if (r == row) continue;
            const double f = at(r, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= nvars; ++j) at(r, j) -= f * at(row, j);
            at(r, col) = 0.0;
        }
        if (basis[row] < nvars) in_basis[basis[row]] = 0;
        basis[row] = col;
        in_basis[col] = 1;
        fresh = false;
    }

    // settle the final basis freshly, then read the artificial mass off it
    refactorize();
    objective = 0.0;
    for (std::size_t r = 0; r < nrows; ++r)
        if (basis[r] >= nvars) objective += std::max(0.0, at(r, rhs));

    DualMembership result;
    result.infeasibility = objective;
    if (objective > kDualFeasTol) {
        result.is_member = false;
        return result;
    }

    std::vector<double> gamma(nvars, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < nrows; ++r)
        if (basis[r] < nvars) {
            gamma[basis[r]] = std::max(0.0, at(r, rhs));
            total += gamma[basis[r]];
        }
    // rescale away the simplex's rounding drift so the witness carries unit mass
    if (total > 0.0)
        for (double& g : gamma) g /= total;
    std::vector<CouplingEntry> entries;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (gamma[i * k + j] > 0.0) entries.push_back({i, j, gamma[i * k + j]});
    try {
        Coupling witness = make_coupling(mu, nu, std::move(entries));
        const Matrix moment = coupling_moment(witness);
        double res = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const double d = moment(a, b) - (a == b ? 1.0 : 0.0);
                res += d * d;
            }
        res = std::sqrt(res);
        if (res > kDualFeasTol)
            throw NumericalInstability(
                "phase-1 objective is " + std::to_string(objective) +
                " but the extracted plan has moment residual " + std::to_string(res));
        result.is_member = true;
        result.moment_residual = res;
        result.witness = std::move(witness);
        return result;
    } catch (const MarginalMismatch& e) {
        throw NumericalInstability(std::string("phase-1 objective is near zero but no basic "
                                               "feasible plan could be extracted: ") +
                                   e.what());
    }
}

}  // namespace pframe
