#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace pplglm {

/// Independent random streams within one replicate.
enum class Stream : std::uint32_t { Covariates = 1, Response = 2, Split = 3 };

/**
 * Philox4x32-10 counter-based generator. The key is the user seed; the
 * counter carries (replicate, stream, position), so every (seed, replicate,
 * stream) triple is an independent, reproducible sequence regardless of the
 * order in which replicates are processed.
 */
class Philox4x32 {
public:
    using result_type = std::uint32_t;

    Philox4x32(std::uint64_t seed, std::uint64_t replicate, Stream stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(replicate) ^ (static_cast<std::uint32_t>(stream) << 24),
                   static_cast<std::uint32_t>(replicate >> 32) ^ 0x5eed0000u ^ static_cast<std::uint32_t>(stream)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (index_ == 4) {
            block_ = generate(counter_);
            if (++counter_[0] == 0) ++counter_[1];
            index_ = 0;
        }
        return block_[index_++];
    }

private:
    using Block = std::array<std::uint32_t, 4>;

    Block generate(Block ctr) const {
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return ctr;
    }

    std::array<std::uint32_t, 2> key_;
    Block counter_;
    Block block_{};
    int index_ = 4;
};

/// Uniform on (0, 1) with 53 random bits.
template <typename Engine>
double uniform01(Engine& eng) {
    std::uint64_t hi = eng(), lo = eng();
    std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Seeded random permutation of 0..n-1 (Fisher-Yates).
inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t replicate) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Philox4x32 eng(seed, replicate, Stream::Split);
    for (std::size_t i = n; i > 1; --i) {
        auto k = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(i));
        std::swap(perm[i - 1], perm[std::min(k, i - 1)]);
    }
    return perm;
}

}  // namespace pplglm
