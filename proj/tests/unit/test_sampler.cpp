#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "graspsynth/error.hpp"
#include "graspsynth/fixtures.hpp"
#include "graspsynth/io.hpp"
#include "graspsynth/sampler.hpp"
#include "support.hpp"

using namespace graspsynth;

namespace {

// Upper tail probability of Pearson's statistic for observed counts against expected probabilities.
double chi_square_p(const std::vector<long>& observed, const std::vector<double>& prob) {
    const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), 0L));
    double stat = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = n * prob[i];
        stat += (observed[i] - e) * (observed[i] - e) / e;
    }
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

ProbabilityMap bar_map() {
    // 150 x 16 mm bar: only the 16 mm sides are within the 100 mm opening
    const auto bar = fixtures::box("bar", 0.150, 0.016, 0.020, 0.001);
    const Scene s = make_scene(bar, Pose{}, test::small_camera(200, 0.001), "bar_0");
    return probability_map(edge_map(s), 100.0);
}

}  // namespace

TEST(SamplerConfig, Validation) {
    EXPECT_NO_THROW(SamplerConfig{}.validate());
    SamplerConfig c;
    c.candidates = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.heuristic_weight = 1.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.orientation_bins = 1;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(EdgeMap, BoxBoundary) {
    const Scene s = test::box_scene();  // x in [70, 130), y in [85, 115)
    const auto e = edge_map(s);
    EXPECT_EQ(e.magnitude(100, 100), 0.0);
    EXPECT_EQ(e.magnitude(10, 10), 0.0);
    // left face: height rises to the right
    EXPECT_NEAR(e.magnitude(100, 70), 0.02, 1e-4);
    EXPECT_NEAR(e.direction(100, 70), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(e.direction(100, 129)), 180.0, 1e-9);
    // a vertical edge line has orientation 90 degrees
    EXPECT_EQ(e.orientation(100, 70), 9);
    EXPECT_EQ(e.orientation(100, 129), 9);
    // top face (low row numbers): height rises downwards on screen, gradient points to -90
    EXPECT_NEAR(e.direction(85, 100), -90.0, 1e-9);
    EXPECT_EQ(e.orientation(85, 100), 0);
    EXPECT_DOUBLE_EQ(e.bin_center(9), 95.0);
}

TEST(ProbabilityMap, NormalizedAndPositive) {
    const auto m = bar_map();
    double sum = 0, lo = 1;
    for (double w : m.weights.data()) {
        sum += w;
        lo = std::min(lo, w);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GT(lo, 0.0);
    // uniform floor: 5 % spread over 40000 cells
    EXPECT_NEAR(lo, 0.05 / 40000, 1e-12);
}

TEST(ProbabilityMap, ConcentratesBetweenAntipodalEdges) {
    const auto m = bar_map();
    double inside = 0;
    // bar cells plus the one-cell ring where the central difference also sees the edge
    for (std::size_t r = 91; r < 109; ++r)
        for (std::size_t c = 24; c < 176; ++c) inside += m.weights(r, c);
    // the heuristic share lands there (the floor adds its own 2736 / 40000 * 5 %)
    EXPECT_GT(inside, 0.95);
    EXPECT_GT(m.weights(100, 100), 100 * m.weights(20, 20));
    // dominant orientation is the long edges' (bin 0, center 5 degrees)
    EXPECT_DOUBLE_EQ(m.orientation(100, 100), 5.0);
    EXPECT_TRUE(std::isnan(m.orientation(20, 20)));
}

TEST(ProbabilityMap, FlatSceneFallsBackToUniform) {
    const auto m = probability_map(edge_map(test::empty_scene(50)), 100);
    for (double w : m.weights.data()) EXPECT_DOUBLE_EQ(w, 1.0 / 2500);
}

TEST(ProbabilityMap, WiderThanOpeningHasNoPairs) {
    const auto wide = fixtures::box("wide", 0.150, 0.150, 0.020, 0.001);
    const Scene s = make_scene(wide, Pose{}, test::small_camera(200, 0.001), "wide_0");
    const auto m = probability_map(edge_map(s), 100);
    for (double w : m.weights.data()) EXPECT_DOUBLE_EQ(w, 1.0 / 40000);
}

TEST(CandidateSampler, RangesAndDeterminism) {
    const auto m = bar_map();
    const CandidateRanges ranges{100, 20, 15};
    Rng a(42), b(42);
    const auto x = sample_candidates(m, 2000, a, ranges);
    const auto y = sample_candidates(m, 2000, b, ranges);
    ASSERT_EQ(x, y);
    int oriented = 0;
    for (const auto& g : x) {
        EXPECT_GT(g.opening(), 0);
        EXPECT_LE(g.opening(), 100);
        EXPECT_EQ(g.jaw_size(), 20);
        EXPECT_GE(g.x(), 0);
        EXPECT_LT(g.x(), 200);
        const double o = m.orientation(static_cast<std::size_t>(g.y()), static_cast<std::size_t>(g.x()));
        if (!std::isnan(o)) {
            ++oriented;
            EXPECT_LE(angle_diff(g.theta(), o + 90), 15 + 1e-9);
        }
    }
    EXPECT_GT(oriented, 1800);
}

TEST(CandidateSampler, FiveUniformsPerDraw) {
    const auto m = bar_map();
    const CandidateRanges ranges{100, 20, 15};
    CandidateSampler s(m, ranges);
    Rng a(7), b(7);
    for (int i = 0; i < 10; ++i) s.draw(a);
    for (int i = 0; i < 50; ++i) b.next();
    EXPECT_EQ(a.next(), b.next());
}

TEST(CandidateSampler, UniformMapChiSquare) {
    const auto m = uniform_map(8, 8);
    CandidateSampler s(m, {10, 2, 15});
    Rng rng(2025);
    std::vector<long> counts(64, 0);
    for (int i = 0; i < 64000; ++i) {
        const Grasp g = s.draw(rng);
        ++counts[static_cast<std::size_t>(g.y()) * 8 + static_cast<std::size_t>(g.x())];
    }
    EXPECT_GT(chi_square_p(counts, std::vector<double>(64, 1.0 / 64)), 1e-3);
}

TEST(CandidateSampler, WeightedMapChiSquare) {
    ProbabilityMap m = uniform_map(6, 6);
    Rng wr(3);
    double total = 0;
    for (double& w : m.weights.data()) {
        w = 0.1 + wr.uniform();
        total += w;
    }
    for (double& w : m.weights.data()) w /= total;
    CandidateSampler s(m, {10, 2, 15});
    Rng rng(99);
    std::vector<long> counts(36, 0);
    for (int i = 0; i < 72000; ++i) {
        const Grasp g = s.draw(rng);
        ++counts[static_cast<std::size_t>(g.y()) * 6 + static_cast<std::size_t>(g.x())];
    }
    EXPECT_GT(chi_square_p(counts, m.weights.data()), 1e-3);
}

TEST(CandidateSampler, UnorientedThetaCoversRange) {
    const auto m = uniform_map(4, 4);
    CandidateSampler s(m, {10, 2, 15});
    Rng rng(1);
    std::vector<long> bins(6, 0);
    for (int i = 0; i < 6000; ++i) {
        const double t = s.draw(rng).theta();
        ++bins[std::min<std::size_t>(5, static_cast<std::size_t>((t + 90) / 30))];
    }
    EXPECT_GT(chi_square_p(bins, std::vector<double>(6, 1.0 / 6)), 1e-3);
}

TEST(ProbabilityMap, WritesGraymap) {
    test::TempDir dir("map");
    const auto m = bar_map();
    write_probability_map(m, dir / "m.pgm");
    const auto img = read_pgm(dir / "m.pgm");
    EXPECT_EQ(img.maxval, 255);
    EXPECT_EQ(*std::max_element(img.pixels.data().begin(), img.pixels.data().end()), 255);
}
