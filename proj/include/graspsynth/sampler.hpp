#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "graspsynth/grasp.hpp"
#include "graspsynth/grid.hpp"
#include "graspsynth/rng.hpp"
#include "graspsynth/scene.hpp"

namespace graspsynth {

struct SamplerConfig {
    int candidates = 5000;
    double heuristic_weight = 0.95;  // remainder is spread uniformly over the image
    int orientation_bins = 18;
    double theta_jitter = 15.0;      // degrees, uniform +/- around the edge normal
    double edge_threshold = 0.001;   // m of height change per pixel (central difference)

    void validate() const;
    friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

/// Per-pixel heightmap gradient of a scene.
struct EdgeMap {
    Grid<double> magnitude;          // m per pixel
    Grid<double> direction;          // uphill gradient direction, degrees, counterclockwise on screen
    Grid<std::uint8_t> orientation;  // bin of the edge line orientation in [0, 180)
    int bins = 18;

    double bin_center(std::uint8_t bin) const { return (bin + 0.5) * 180.0 / bins; }
};

EdgeMap edge_map(const Scene& scene, int orientation_bins = 18);

/// Sampling distribution over image cells, with the dominant antipodal edge
/// orientation of each cell (NaN where no edge pair straddles the cell).
struct ProbabilityMap {
    Grid<double> weights;
    Grid<double> orientation;  // degrees in [0, 180), edge line orientation
};

/// Aligned-antipodal-edge density: every pair of edge pixels with the same
/// orientation bin (+/- one), opposite gradients, and at most `max_opening_px`
/// apart adds one unit to each cell on the segment between them. The result is
/// blended with a uniform floor and normalized to sum to one.
ProbabilityMap probability_map(const EdgeMap& edges, double max_opening_px, const SamplerConfig& cfg = {});

/// Uniform map without orientation hints (baseline for efficiency comparisons).
ProbabilityMap uniform_map(std::size_t rows, std::size_t cols);

/// Ranges of the generated rectangles, in pixels.
struct CandidateRanges {
    double max_opening = 0.0;
    double jaw_size = 0.0;
    double theta_jitter = 15.0;

    static CandidateRanges for_scene(const Scene& scene, double max_opening_m, double jaw_size_m,
                                     double theta_jitter);
};

/// Draws grasp candidates from a probability map, which must outlive the
/// sampler. Every draw consumes exactly five engine outputs, so the i-th
/// candidate depends only on the seed and i.
class CandidateSampler {
public:
    CandidateSampler(const ProbabilityMap& map, CandidateRanges ranges);

    Grasp draw(Rng& rng) const;

private:
    const ProbabilityMap& map_;
    CandidateRanges ranges_;
    std::vector<double> cdf_;
};

std::vector<Grasp> sample_candidates(const ProbabilityMap& map, int n, Rng& rng, const CandidateRanges& ranges);

/// Writes the map as an 8-bit graymap scaled to its maximum weight.
void write_probability_map(const ProbabilityMap& map, const std::filesystem::path& path);

}  // namespace graspsynth
