#pragma once

#include <cstdint>

namespace cca {

// Deterministic, platform-independent random streams. std:: distributions are
// implementation-defined, so everything here is spelled out explicitly:
// identical (seed, replicate, tag) gives bit-identical draws on any platform.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Substream key for (seed, replicate, tag). Tags separate the W and Y matrix
// streams and config-level streams (rotations) so they never overlap.
inline std::uint64_t substream_key(std::uint64_t seed, std::int64_t replicate, std::uint64_t tag) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s = h ^ (static_cast<std::uint64_t>(replicate) * 0xda942042e4dd58b5ULL);
    h = splitmix64(s);
    s = h ^ (tag * 0xd6e8feb86659fd93ULL);
    return splitmix64(s);
}

namespace stream_tag {
inline constexpr std::uint64_t matrix_w = 0x57;
inline constexpr std::uint64_t matrix_y = 0x59;
inline constexpr std::uint64_t rotate_left = 0x55;
inline constexpr std::uint64_t rotate_right = 0x56;
}  // namespace stream_tag

class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t key) {
        std::uint64_t s = key;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0,1): 53-bit mantissa, never exactly 0 or 1.
    double next_unit() {
        return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace cca
