#pragma once

// Counter-based pseudo-random generator (Philox 4x64, 10 rounds).
//
// Properties relied on elsewhere:
//   * period: 2^256 counter values per (seed, stream) key, 4 outputs each
//   * jump-ahead: O(1), set the counter
//   * sub-streams: distinct `stream` values index statistically independent
//     sequences under the same seed, so path chunks can be assigned to
//     workers deterministically regardless of scheduling

#include <cstdint>
#include <array>

namespace gexp {

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b,
                      std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

} // namespace detail

class PhiloxRng {
public:
    using Counter = std::array<std::uint64_t, 4>;

    explicit PhiloxRng(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : key_{seed, stream}, counter_{0, 0, 0, 0}, index_(4) {}

    // Jump directly to the start of 4-output block `block`.
    void jump_to_block(std::uint64_t block) {
        counter_ = {block, 0, 0, 0};
        index_ = 4;
    }

    std::uint64_t next_u64() {
        if (index_ == 4) {
            block_ = generate(counter_, key_);
            advance_counter();
            index_ = 0;
        }
        return block_[index_++];
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in {0, ..., bound-1}; rejection keeps it exact.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % bound;
    }

    // One keyed block, exposed for known-answer tests.
    static std::array<std::uint64_t, 4> generate(
        Counter ctr, std::array<std::uint64_t, 2> key) {
        constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ULL;
        constexpr std::uint64_t M1 = 0xCA5A826395121157ULL;
        constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ULL;
        constexpr std::uint64_t W1 = 0xBB67AE8584CAA73BULL;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += W0;
                key[1] += W1;
            }
            std::uint64_t hi0, lo0, hi1, lo1;
            detail::mulhilo64(M0, ctr[0], hi0, lo0);
            detail::mulhilo64(M1, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return {ctr[0], ctr[1], ctr[2], ctr[3]};
    }

private:
    void advance_counter() {
        for (int i = 0; i < 4; ++i) {
            if (++counter_[i] != 0) break;
        }
    }

    std::array<std::uint64_t, 2> key_;
    Counter counter_;
    std::array<std::uint64_t, 4> block_{};
    int index_;
};

} // namespace gexp
