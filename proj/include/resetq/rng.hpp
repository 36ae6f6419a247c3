#pragma once

#include <cstdint>
#include <random>

namespace resetq {

// splitmix64 step; the standard way to stretch one 64-bit seed into many
// well-mixed words
inline std::uint64_t splitmix64(std::uint64_t &state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// One reproducible random stream out of a (master seed, stream index)
// family. Distinct indices get statistically unrelated seeds via splitmix64
// mixing; identical pairs reproduce the sequence bit-exactly. Not shareable
// between concurrent users: give each replication its own stream.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index) {
        std::uint64_t st = master_seed ^ (0x9e3779b97f4a7c15ull * (stream_index + 1));
        std::uint64_t w0 = splitmix64(st), w1 = splitmix64(st), w2 = splitmix64(st),
                      w3 = splitmix64(st);
        // seed_seq expands deterministically per the standard, so streams are
        // reproducible across platforms
        std::seed_seq seq{static_cast<std::uint32_t>(w0), static_cast<std::uint32_t>(w0 >> 32),
                          static_cast<std::uint32_t>(w1), static_cast<std::uint32_t>(w1 >> 32),
                          static_cast<std::uint32_t>(w2), static_cast<std::uint32_t>(w2 >> 32),
                          static_cast<std::uint32_t>(w3), static_cast<std::uint32_t>(w3 >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    // uniform on [0, 1) with 53 random bits
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1): midpoints of the 2^53 lattice, never exactly 0 or 1;
    // safe to pass through log()
    double u01_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

private:
    std::uint64_t master_seed_, stream_index_;
    std::mt19937_64 engine_;
};

}  // namespace resetq
