#pragma once

// Counter-based random substreams.
//
// Every random draw in the library comes from a SplitMix64 stream whose
// starting state is a keyed hash of (seed, tag, a, b). Results therefore
// depend only on the key, never on execution order or worker count.

#include <cstdint>
#include <limits>

namespace elforensics {

// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    constexpr explicit SplitMix64(std::uint64_t state = 0) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

private:
    std::uint64_t state_;
};

// Stream domains. Distinct tags keep e.g. histogram jitter and Monte Carlo
// draws independent even when they share a seed.
enum class StreamTag : std::uint64_t {
    histogram_jitter = 1,
    observed_jitter = 2,
    monte_carlo = 3,
    synth_station = 4,
    fraud_selection = 5,
    fraud_target = 6,
};

constexpr SplitMix64 substream(std::uint64_t seed, StreamTag tag, std::uint64_t a,
                               std::uint64_t b) noexcept {
    std::uint64_t h = mix64(seed + SplitMix64::kGolden);
    h = mix64(h ^ (static_cast<std::uint64_t>(tag) * 0xD1B54A32D192ED03ULL));
    h = mix64(h + a * SplitMix64::kGolden);
    h = mix64(h ^ (b * 0xAEF17502108EF2D9ULL + 0x632BE59BD9B4E019ULL));
    return SplitMix64{h};
}

// Jitter value in [-0.5, 0.5).
inline double draw_jitter(SplitMix64& rng) noexcept { return rng.uniform() - 0.5; }

}  // namespace elforensics
