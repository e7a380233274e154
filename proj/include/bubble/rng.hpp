#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random numbers (Philox4x32-10). Every consumer owns a Stream
// keyed by (seed, substream); draws depend only on that key and the draw
// counter, never on evaluation order elsewhere. This is what makes sampling
// and Monte Carlo results independent of scheduling.

namespace bubble::rng {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

}  // namespace detail

/// One 128-bit Philox4x32-10 block for key (k0,k1) and a 128-bit counter.
inline std::array<std::uint32_t, 4> philox_block(std::uint64_t key, std::uint64_t ctr_hi,
                                                 std::uint64_t ctr_lo) {
    std::array<std::uint32_t, 4> c = {
        static_cast<std::uint32_t>(ctr_lo), static_cast<std::uint32_t>(ctr_lo >> 32),
        static_cast<std::uint32_t>(ctr_hi), static_cast<std::uint32_t>(ctr_hi >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int r = 0; r < 10; ++r) {
        detail::philox_round(c, k0, k1);
        k0 += detail::kWeyl0;
        k1 += detail::kWeyl1;
    }
    return c;
}

/// SplitMix64 finalizer; used to derive child seeds from (seed, tag) pairs.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (0x9E3779B97F4A7C15ull + (b << 6) + (b >> 2) + mix64(b)));
}

namespace detail {

// Marsaglia-Tsang ziggurat tables for the standard normal, 128 layers.
struct ZigguratTables {
    std::uint32_t kn[128];
    double wn[128];
    double fn[128];

    ZigguratTables() {
        const double m1 = 2147483648.0;
        const double vn = 9.91256303526217e-3;
        double dn = 3.442619855899;
        double tn = dn;
        double q = vn / std::exp(-0.5 * dn * dn);
        kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
        kn[1] = 0;
        wn[0] = q / m1;
        wn[127] = dn / m1;
        fn[0] = 1.0;
        fn[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
            tn = dn;
            fn[i] = std::exp(-0.5 * dn * dn);
            wn[i] = dn / m1;
        }
    }
};

inline const ZigguratTables& ziggurat() {
    static const ZigguratTables tables;
    return tables;
}

}  // namespace detail

/// A deterministic substream of uniforms/normals keyed by (seed, substream).
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t substream) : key_(seed), sub_(substream) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            buf_ = philox_block(key_, sub_, block_++);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0,1]; safe as a log() argument.
    double uniform01_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the 128-layer ziggurat.
    double normal() {
        const auto& z = detail::ziggurat();
        const double r = 3.442619855899;
        for (;;) {
            const std::int32_t hz = static_cast<std::int32_t>(next_u32());
            const std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
            const std::uint32_t habs =
                hz >= 0 ? static_cast<std::uint32_t>(hz)
                        : static_cast<std::uint32_t>(-static_cast<std::int64_t>(hz));
            if (habs < z.kn[iz]) return hz * z.wn[iz];
            if (iz == 0) {
                // Tail beyond r, Marsaglia's method.
                double x, y;
                do {
                    x = -std::log(uniform01_open()) / r;
                    y = -std::log(uniform01_open());
                } while (y + y < x * x);
                return hz > 0 ? r + x : -(r + x);
            }
            const double x = hz * z.wn[iz];
            if (z.fn[iz] + uniform01() * (z.fn[iz - 1] - z.fn[iz]) < std::exp(-0.5 * x * x))
                return x;
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t sub_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

}  // namespace bubble::rng
