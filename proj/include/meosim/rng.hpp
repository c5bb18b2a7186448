#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace meosim {

// splitmix64, used only to derive well-separated stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG stream. Sub-streams are derived from a master seed and a
// path of indices (trial, call, round, ...), so results are independent of
// thread scheduling and stable across platforms. Variates are extracted by
// hand instead of through std::uniform_*_distribution, whose output is
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
        std::uint64_t s = master ^ 0xd1b54a32d192ed03ULL;
        for (std::uint64_t p : path) {
            s ^= splitmix64(s) + p;
            s = splitmix64(s);
        }
        return Rng(splitmix64(s));
    }

    std::uint64_t next_u64() { return engine_(); }

    // uniform double in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, bound), bound >= 1, by rejection
    std::uint64_t uniform_int(std::uint64_t bound) {
        if (bound <= 1) return 0;
        std::uint64_t mask = ~0ULL >> __builtin_clzll((bound - 1) | 1);
        std::uint64_t v;
        do {
            v = engine_() & mask;
        } while (v >= bound);
        return v;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace meosim
