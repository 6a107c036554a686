#include "graspsynth/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/core.h>

#include "graspsynth/error.hpp"
#include "graspsynth/io.hpp"

namespace graspsynth {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kMarchStep = 0.5;  // pixels

int bin_distance(int a, int b, int bins) {
    const int d = std::abs(a - b) % bins;
    return std::min(d, bins - d);
}

}  // namespace

void SamplerConfig::validate() const {
    if (candidates < 1) throw ValidationError("candidate count must be >= 1");
    if (!(heuristic_weight >= 0.0 && heuristic_weight < 1.0)) {
        throw ValidationError("heuristic weight must be in [0, 1) so every cell keeps a nonzero probability");
    }
    if (orientation_bins < 2 || orientation_bins > 180) throw ValidationError("orientation bins must be in [2, 180]");
    if (!(theta_jitter >= 0.0 && theta_jitter <= 90.0)) throw ValidationError("theta jitter must be in [0, 90]");
    if (!(edge_threshold > 0.0)) throw ValidationError("edge threshold must be positive");
}

EdgeMap edge_map(const Scene& scene, int orientation_bins) {
    const auto& h = scene.heights;
    EdgeMap e;
    e.bins = orientation_bins;
    e.magnitude = Grid<double>(h.rows(), h.cols(), 0.0);
    e.direction = Grid<double>(h.rows(), h.cols(), 0.0);
    e.orientation = Grid<std::uint8_t>(h.rows(), h.cols(), 0);
    for (std::size_t r = 0; r < h.rows(); ++r) {
        for (std::size_t c = 0; c < h.cols(); ++c) {
            const double x = static_cast<double>(c) + 0.5;
            const double y = static_cast<double>(r) + 0.5;
            const double gx = (scene.height_at(x + 1, y) - scene.height_at(x - 1, y)) / 2.0;
            const double gy = (scene.height_at(x, y + 1) - scene.height_at(x, y - 1)) / 2.0;
            const double mag = std::hypot(gx, gy);
            e.magnitude(r, c) = mag;
            if (mag == 0.0) continue;
            const double dir = std::atan2(-gy, gx) * kRadToDeg;  // screen counterclockwise
            e.direction(r, c) = dir;
            double orient = std::fmod(dir + 90.0 + 360.0, 180.0);
            auto bin = static_cast<int>(orient / (180.0 / orientation_bins));
            e.orientation(r, c) = static_cast<std::uint8_t>(std::clamp(bin, 0, orientation_bins - 1));
        }
    }
    return e;
}

ProbabilityMap probability_map(const EdgeMap& edges, double max_opening_px, const SamplerConfig& cfg) {
    cfg.validate();
    const std::size_t rows = edges.magnitude.rows();
    const std::size_t cols = edges.magnitude.cols();
    const auto bins = static_cast<std::size_t>(edges.bins);
    Grid<double> density(rows, cols, 0.0);
    // orientation votes, each pair weighted by the inverse of its width so that a
    // cell inside a long narrow part takes the narrow direction
    std::vector<double> hist(rows * cols * bins, 0.0);

    auto is_edge = [&](long r, long c) {
        return edges.magnitude.contains(r, c) &&
               edges.magnitude(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) >= cfg.edge_threshold;
    };

    std::vector<std::pair<long, long>> segment;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (!is_edge(static_cast<long>(r), static_cast<long>(c))) continue;
            const double dir = edges.direction(r, c) / kRadToDeg;
            const double ux = std::cos(dir);
            const double uy = -std::sin(dir);
            const int bin = edges.orientation(r, c);
            const double x0 = static_cast<double>(c) + 0.5;
            const double y0 = static_cast<double>(r) + 0.5;
            segment.clear();
            segment.emplace_back(static_cast<long>(r), static_cast<long>(c));
            bool paired = false;
            for (double t = kMarchStep; t <= max_opening_px; t += kMarchStep) {
                const auto qc = static_cast<long>(std::floor(x0 + t * ux));
                const auto qr = static_cast<long>(std::floor(y0 + t * uy));
                if (!edges.magnitude.contains(qr, qc)) break;
                if (segment.back() == std::pair{qr, qc}) continue;
                segment.emplace_back(qr, qc);
                if (!is_edge(qr, qc)) continue;
                const auto sr = static_cast<std::size_t>(qr);
                const auto sc = static_cast<std::size_t>(qc);
                const double qdir = edges.direction(sr, sc) / kRadToDeg;
                const double dot = ux * std::cos(qdir) + uy * -std::sin(qdir);
                if (dot < 0.0 && bin_distance(bin, edges.orientation(sr, sc), edges.bins) <= 1) {
                    paired = true;
                    break;
                }
            }
            if (!paired) continue;
            const double vote = 1.0 / static_cast<double>(segment.size());
            for (auto [sr, sc] : segment) {
                const auto i = static_cast<std::size_t>(sr) * cols + static_cast<std::size_t>(sc);
                density.data()[i] += 1.0;
                hist[i * bins + static_cast<std::size_t>(bin)] += vote;
            }
        }
    }

    ProbabilityMap map{Grid<double>(rows, cols, 0.0),
                       Grid<double>(rows, cols, std::numeric_limits<double>::quiet_NaN())};
    double total = 0.0;
    for (double d : density.data()) total += d;
    const double n = static_cast<double>(rows * cols);
    if (total <= 0.0) {
        std::fill(map.weights.data().begin(), map.weights.data().end(), 1.0 / n);
        return map;
    }
    const double w = cfg.heuristic_weight;
    for (std::size_t i = 0; i < map.weights.size(); ++i) {
        map.weights.data()[i] = w * density.data()[i] / total + (1.0 - w) / n;
        if (density.data()[i] <= 0.0) continue;
        const auto* h = &hist[i * bins];
        const auto best = std::max_element(h, h + bins) - h;
        map.orientation.data()[i] = edges.bin_center(static_cast<std::uint8_t>(best));
    }
    // Renormalize against accumulated rounding.
    double sum = 0.0;
    for (double v : map.weights.data()) sum += v;
    for (double& v : map.weights.data()) v /= sum;
    return map;
}

ProbabilityMap uniform_map(std::size_t rows, std::size_t cols) {
    const double n = static_cast<double>(rows * cols);
    return {Grid<double>(rows, cols, 1.0 / n), Grid<double>(rows, cols, std::numeric_limits<double>::quiet_NaN())};
}

CandidateRanges CandidateRanges::for_scene(const Scene& scene, double max_opening_m, double jaw_size_m,
                                           double theta_jitter) {
    return {max_opening_m / scene.camera.resolution, jaw_size_m / scene.camera.resolution, theta_jitter};
}

CandidateSampler::CandidateSampler(const ProbabilityMap& map, CandidateRanges ranges)
    : map_(map), ranges_(ranges) {
    if (map.weights.empty()) throw ValidationError("empty probability map");
    if (!(ranges.max_opening > 0.0) || !(ranges.jaw_size > 0.0)) {
        throw ValidationError("candidate opening and jaw size ranges must be positive");
    }
    cdf_.reserve(map.weights.size());
    double acc = 0.0;
    for (double w : map.weights.data()) {
        acc += w;
        cdf_.push_back(acc);
    }
}

Grasp CandidateSampler::draw(Rng& rng) const {
    const double u_cell = rng.uniform() * cdf_.back();
    const double u_x = rng.uniform();
    const double u_y = rng.uniform();
    const double u_theta = rng.uniform();
    const double u_open = rng.uniform();

    auto idx = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u_cell) - cdf_.begin());
    idx = std::min(idx, cdf_.size() - 1);
    const std::size_t cols = map_.weights.cols();
    const double x = static_cast<double>(idx % cols) + u_x;
    const double y = static_cast<double>(idx / cols) + u_y;

    const double orient = map_.orientation.data()[idx];
    const double theta = std::isnan(orient) ? 90.0 - 180.0 * u_theta
                                            : orient + 90.0 + ranges_.theta_jitter * (2.0 * u_theta - 1.0);
    const double opening = ranges_.max_opening * (1.0 - u_open);
    return Grasp(x, y, opening, ranges_.jaw_size, theta);
}

std::vector<Grasp> sample_candidates(const ProbabilityMap& map, int n, Rng& rng, const CandidateRanges& ranges) {
    if (n < 1) throw ValidationError("candidate count must be >= 1");
    CandidateSampler sampler(map, ranges);
    std::vector<Grasp> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(sampler.draw(rng));
    return out;
}

void write_probability_map(const ProbabilityMap& map, const std::filesystem::path& path) {
    const double peak = *std::max_element(map.weights.data().begin(), map.weights.data().end());
    Grid<std::uint16_t> img(map.weights.rows(), map.weights.cols());
    for (std::size_t i = 0; i < img.size(); ++i) {
        img.data()[i] = static_cast<std::uint16_t>(std::lround(255.0 * map.weights.data()[i] / peak));
    }
    write_pgm(path, img, 255);
}

}  // namespace graspsynth
