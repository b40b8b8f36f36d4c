#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advlab {

/// Deterministic random stream derived from a structured key.
///
/// Every stochastic draw in the project is a function of a
/// (seed, index, iteration, tag) key, never of call order or scheduling.
/// Replaying a key replays the draw sequence bit-exactly. Draw helpers
/// are hand-rolled on top of mt19937_64 raw output because the stdlib
/// distributions are not bit-stable across implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static RngStream keyed(std::uint64_t seed, std::uint64_t index, std::uint64_t iteration,
                           std::string_view tag) {
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a over the key material
        auto mix = [&h](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) {
                h ^= (v >> (8 * i)) & 0xffULL;
                h *= 0x100000001b3ULL;
            }
        };
        mix(seed);
        mix(index);
        mix(iteration);
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return RngStream(h);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        if (hi <= lo) return lo;
        auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(span));
        if (v >= span) v = span - 1;
        return lo + static_cast<int>(v);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace advlab
