#pragma once

#include <cmath>
#include <cstdint>

namespace lobsim {

// Counter-based generator in the SplitMix64 family. A stream is keyed by
// (seed, stream id) and every output is a pure function of (key, counter),
// so per-path streams are reproducible no matter how paths are scheduled
// across worker threads.
class counter_rng {
  public:
    counter_rng() = default;

    counter_rng(std::uint64_t seed, std::uint64_t stream) {
        // derive a well-mixed stream key; two mixing rounds keep nearby
        // (seed, stream) pairs statistically unrelated
        key_ = mix(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
        key_ = mix(key_ ^ (stream * 0xbf58476d1ce4e5b9ull));
        ctr_ = 0;
    }

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (++ctr_) * 0x9e3779b97f4a7c15ull;
        return mix(z);
    }

    // uniform on [0, n), unbiased via rejection of the overhang
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = n * ((~0ull) / n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // uniform on [0, 1) with 53-bit resolution
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // geometric with the given mean, support {0, 1, 2, ...}
    std::int64_t next_geometric(double mean) {
        if (mean <= 0.0) return 0;
        const double p = 1.0 / (mean + 1.0);
        const double u = 1.0 - next_double();
        return static_cast<std::int64_t>(std::floor(std::log(u) / std::log(1.0 - p)));
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    // uniform integer on [lo, hi] inclusive
    std::int64_t next_range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

}  // namespace lobsim
