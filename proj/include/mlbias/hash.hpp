#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mlbias::hash {

inline constexpr std::uint64_t fnv_offset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t fnv_prime = 0x100000001b3ULL;

/// Incremental FNV-1a 64-bit hasher.
class Fnv1a {
public:
    constexpr Fnv1a() = default;

    constexpr Fnv1a& bytes(std::string_view s) noexcept {
        for (unsigned char c : s) {
            state_ ^= c;
            state_ *= fnv_prime;
        }
        return *this;
    }

    constexpr Fnv1a& byte(std::uint8_t b) noexcept {
        state_ ^= b;
        state_ *= fnv_prime;
        return *this;
    }

    // little-endian, fixed width, so the digest is platform independent
    constexpr Fnv1a& u64(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
        return *this;
    }

    constexpr std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = fnv_offset;
};

constexpr std::uint64_t fnv1a(std::string_view s) noexcept { return Fnv1a{}.bytes(s).digest(); }

/// One step of the splitmix64 generator; advances `state`.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Top 53 bits as a double in [0, 1).
constexpr double unit_interval(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::string to_hex(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

} // namespace mlbias::hash
