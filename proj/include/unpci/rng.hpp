#pragma once

#include <cstdint>
#include <random>

namespace unpci {

namespace detail {

/// SplitMix64 finalizer. Bijective on 64-bit words with good avalanche,
/// so derived keys behave like independent seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}

/// Hierarchical deterministic random stream.
///
/// A stream is identified by a 64-bit key derived from the master seed and
/// the chain of derive() indices that produced it. Replicate b, feature j
/// therefore always sees the same draws for a fixed master seed, no matter
/// how work is scheduled across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(detail::mix64(seed + detail::kGolden)) {}

    /// Child stream for index `idx` within this stream's namespace.
    RngStream derive(std::uint64_t idx) const {
        RngStream child(*this);
        child.key_ = detail::mix64(key_ ^ ((idx + 1) * detail::kGolden));
        return child;
    }

    /// Fresh engine positioned at the start of this stream.
    std::mt19937_64 engine() const { return std::mt19937_64(key_); }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

/// Top-level stream namespaces. Every consumer of randomness derives
/// through exactly one of these, so streams never collide across uses.
namespace stream_domain {
inline constexpr std::uint64_t kDataClustering = 1;
inline constexpr std::uint64_t kNullReplicate = 2;
inline constexpr std::uint64_t kFeatureSample = 3;
inline constexpr std::uint64_t kReplicateClustering = 4;
inline constexpr std::uint64_t kScenario = 5;
}

}
