#pragma once

#include <array>
#include <cstdint>

namespace polymart {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (key, counter), so any replication can be regenerated without replaying a
// stream and parallel partitions need no coordination.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t seed) noexcept
        : key0_(static_cast<std::uint32_t>(seed)), key1_(static_cast<std::uint32_t>(seed >> 32)) {}

    Block operator()(std::uint64_t hi, std::uint64_t lo) const noexcept {
        Block ctr{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
                  static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
            k0 += kW0;
            k1 += kW1;
        }
        return ctr;
    }

    // Two uniforms strictly inside (0, 1) with 53-bit resolution.
    std::array<double, 2> uniforms(std::uint64_t hi, std::uint64_t lo) const noexcept {
        const Block b = (*this)(hi, lo);
        const std::uint64_t w0 = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
        const std::uint64_t w1 = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
        return {to_open_unit(w0), to_open_unit(w1)};
    }

    static double to_open_unit(std::uint64_t w) noexcept {
        return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
    std::uint32_t key0_;
    std::uint32_t key1_;
};

}  // namespace polymart
