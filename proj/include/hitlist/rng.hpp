#ifndef HITLIST_RNG_HPP
#define HITLIST_RNG_HPP

#include <cstdint>
#include <string_view>

#include "hitlist/addr.hpp"

namespace hitlist {

/// Counter-based keyed generator (SplitMix64 core). A stream is fully
/// determined by the words mixed into its key, so independent workers
/// derive identical draws from identical keys without shared state.
class CounterRng {
public:
    CounterRng() = default;

    CounterRng& mix(std::uint64_t word) {
        key_ = mix64(key_ ^ (word + kGamma));
        return *this;
    }
    CounterRng& mix(Addr128 a) {
        mix(a.hi());
        return mix(a.lo());
    }
    CounterRng& mix(const Prefix& p) {
        mix(p.base());
        return mix(static_cast<std::uint64_t>(p.length()));
    }
    CounterRng& mix(std::string_view tag) {
        std::uint64_t acc = 0xcbf29ce484222325ULL;  // FNV-1a folded into the key
        for (unsigned char c : tag) acc = (acc ^ c) * 0x100000001b3ULL;
        return mix(acc);
    }

    std::uint64_t next() { return mix64(key_ + (++counter_) * kGamma); }

    /// uniform draw in [0, 1)
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// low `nbits` random bits (0 <= nbits <= 128)
    uint128 next_bits(int nbits) {
        if (nbits <= 0) return 0;
        uint128 v = make_u128(next(), next());
        if (nbits >= 128) return v;
        return v >> (128 - nbits);
    }

    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0x6a09e667f3bcc909ULL;
    std::uint64_t counter_ = 0;
};

}  // namespace hitlist

#endif  // HITLIST_RNG_HPP
