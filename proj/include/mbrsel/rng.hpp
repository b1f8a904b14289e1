#pragma once

#include <cstdint>
#include <string_view>

namespace mbrsel {

/// splitmix64 (Steele, Lea & Flood). Fully specified arithmetic, so streams
/// are identical across platforms and compilers; std:: distributions are not.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, n). Plain modulo; the bias is irrelevant at pool sizes
    /// this library sees and the result stays platform-portable.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Per-instance RNG stream: hash the run seed (little-endian bytes) followed
/// by the instance id. Instances can then be processed in any order or in
/// parallel without changing any result.
inline std::uint64_t instance_stream_seed(std::uint64_t run_seed, std::string_view instance_id) {
    char bytes[8];
    for (int i = 0; i < 8; ++i)
        bytes[i] = static_cast<char>((run_seed >> (8 * i)) & 0xff);
    return fnv1a64(instance_id, fnv1a64(std::string_view(bytes, 8)));
}

}  // namespace mbrsel
