#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace graspsynth {

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Per-scene seed. Depends only on its three inputs, never on pool order or scheduling.
constexpr std::uint64_t scene_seed(std::uint64_t master_seed, std::string_view object_id,
                                   std::uint32_t scene_index) noexcept {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ fnv1a64(object_id));
    return mix64(h ^ (0xa5a5a5a5ULL + scene_index));
}

/// Independent stream of a seed, keyed by a short tag ("pose", "scale", ...).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag) noexcept {
    return mix64(seed ^ mix64(fnv1a64(tag)));
}

/// Thin wrapper over mt19937_64. The std distributions are implementation-defined,
/// so the helpers here derive values from raw engine output to keep datasets
/// byte-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace graspsynth
