#pragma once

// Deterministic random sources. The distributions are hand-rolled on top of
// mt19937_64 so output bytes do not depend on the standard library's
// implementation-defined distribution algorithms.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pframe/linalg.hpp"

namespace pframe {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    /// uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// uniform in (0, 1]
    double uniform_pos() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

    /// inclusive integer range
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t r;
        do {
            r = gen_();
        } while (r >= limit);
        return lo + r % span;
    }

    /// standard normal via Box-Muller (second value discarded)
    double gaussian() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    Vec gaussian_vec(std::size_t n) {
        Vec v(n);
        for (double& x : v) x = gaussian();
        return v;
    }

    /// symmetric Dirichlet(1): normalized i.i.d. exponentials
    std::vector<double> dirichlet(std::size_t k) {
        std::vector<double> w(k);
        double sum = 0.0;
        for (double& x : w) {
            x = -std::log(uniform_pos());
            sum += x;
        }
        for (double& x : w) x /= sum;
        return w;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(0, i - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace pframe
