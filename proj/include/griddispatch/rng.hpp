#pragma once

#include <cstdint>

namespace griddispatch {

// Self-contained xoshiro256++ generator. The standard <random> engines are
// portable but the distributions are not, so uniform/normal draws are done
// by hand to keep seeded runs byte-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // uniform in [0, 1)
    double uniform();
    double uniform(double lo, double hi);

    // inclusive integer range
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // standard normal via Box-Muller (no cached spare, one value per call)
    double normal();
    double normal(double mean, double stddev);

    // Independent child stream; children with distinct ids never collide
    // with the parent or each other.
    Rng fork(std::uint64_t stream_id) const;

private:
    std::uint64_t s_[4];
};

// splitmix64 step, exposed for seed hashing elsewhere
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a over a byte string, used for config hashes
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

} // namespace griddispatch
