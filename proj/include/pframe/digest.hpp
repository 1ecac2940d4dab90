#pragma once

// Content hashes used to tie certificates to the exact inputs they were
// computed for. FNV-1a over the raw IEEE bits, so byte-stable across runs.

#include <bit>
#include <cstdint>
#include <string>

#include "pframe/frame.hpp"
#include "pframe/measure.hpp"
#include "pframe/transport.hpp"

namespace pframe {

namespace detail {

inline void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
    }
}

inline void fnv_mix(std::uint64_t& h, double v) {
    fnv_mix(h, std::bit_cast<std::uint64_t>(v));
}

inline std::string fnv_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

}  // namespace detail

inline std::string digest_measure(const DiscreteMeasure& mu) {
    std::uint64_t h = detail::kFnvOffset;
    detail::fnv_mix(h, static_cast<std::uint64_t>(mu.dim));
    detail::fnv_mix(h, static_cast<std::uint64_t>(mu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double v : mu.points[i]) detail::fnv_mix(h, v);
        detail::fnv_mix(h, mu.masses[i]);
    }
    return detail::fnv_hex(h);
}

inline std::string digest_coupling(const Coupling& g) {
    std::uint64_t h = detail::kFnvOffset;
    detail::fnv_mix(h, static_cast<std::uint64_t>(0xC0));
    for (char c : digest_measure(g.mu)) detail::fnv_mix(h, static_cast<std::uint64_t>(c));
    for (char c : digest_measure(g.nu)) detail::fnv_mix(h, static_cast<std::uint64_t>(c));
    for (const CouplingEntry& e : g.entries) {
        detail::fnv_mix(h, static_cast<std::uint64_t>(e.i));
        detail::fnv_mix(h, static_cast<std::uint64_t>(e.j));
        detail::fnv_mix(h, e.mass);
    }
    return detail::fnv_hex(h);
}

inline std::string digest_paired(const PairedMeasure& p) {
    std::uint64_t h = detail::kFnvOffset;
    detail::fnv_mix(h, static_cast<std::uint64_t>(0xBA));
    detail::fnv_mix(h, static_cast<std::uint64_t>(p.dim));
    detail::fnv_mix(h, static_cast<std::uint64_t>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (double v : p.x[i]) detail::fnv_mix(h, v);
        for (double v : p.y[i]) detail::fnv_mix(h, v);
        detail::fnv_mix(h, p.masses[i]);
    }
    return detail::fnv_hex(h);
}

}  // namespace pframe
