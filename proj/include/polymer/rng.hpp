#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace polymer {

// 64-bit finalizer (splitmix64). Used as the building block for all
// counter-based stream derivations below.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Value of stream `key` at position `ctr`. Stateless: the same (key, ctr)
// always yields the same word, independent of evaluation order.
inline std::uint64_t counter_word(std::uint64_t key, std::uint64_t ctr) {
    return mix64(mix64(key + 0x9e3779b97f4a7c15ULL * (ctr + 1)) ^
                 0x5851f42d4c957f2dULL);
}

// Child stream derivation. Children with distinct indices are
// statistically independent streams.
inline std::uint64_t derive_stream(std::uint64_t key, std::uint64_t index) {
    return mix64(key ^ mix64(index + 0xa24baed4963ee407ULL));
}

inline double word_to_unit(std::uint64_t w) {
    // uniform on (0,1), never exactly 0 or 1
    return (static_cast<double>(w >> 11) + 0.5) * 0x1p-53;
}

// standard normal from two counter positions (Box-Muller)
inline double counter_normal(std::uint64_t key, std::uint64_t pair_index) {
    const double u1 = word_to_unit(counter_word(key, 2 * pair_index));
    const double u2 = word_to_unit(counter_word(key, 2 * pair_index + 1));
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

// Stream key for a lattice site, derived from a master seed. Distinct
// sites get disjoint streams regardless of visit order.
inline std::uint64_t site_stream_key(std::uint64_t master_seed,
                                     const std::vector<int>& site) {
    std::uint64_t h = mix64(master_seed ^ 0x243f6a8885a308d3ULL);
    for (int c : site)
        h = mix64(h ^ mix64(static_cast<std::uint64_t>(static_cast<std::int64_t>(c))));
    return h;
}

// Sequential generator over one counter-based stream.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static Rng from_seed(std::uint64_t seed) { return Rng(mix64(seed)); }

    Rng derive(std::uint64_t index) const { return Rng(derive_stream(key_, index)); }

    std::uint64_t next_word() { return counter_word(key_, ctr_++); }

    double u01() { return word_to_unit(next_word()); }

    double normal() {
        const double u1 = u01();
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double exponential(double rate) { return -std::log(u01()) / rate; }

    // uniform over {0, ..., n-1}
    int uniform_int(int n) {
        return static_cast<int>(static_cast<double>(n) * u01());
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return ctr_; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

} // namespace polymer
