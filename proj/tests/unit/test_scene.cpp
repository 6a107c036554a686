#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "graspsynth/error.hpp"
#include "graspsynth/fixtures.hpp"
#include "graspsynth/io.hpp"
#include "graspsynth/scene.hpp"
#include "support.hpp"

using namespace graspsynth;

namespace {

constexpr double kLevel = 1.5 / 65535.0;  // height quantum of a 16-bit depth image at 1.5 m

std::size_t count_object_pixels(const Scene& s) {
    std::size_t n = 0;
    for (double h : s.heights.data()) n += h > 0.0;
    return n;
}

}  // namespace

TEST(ObjectModel, BoxExtent) {
    const auto box = fixtures::box("b", 0.060, 0.030, 0.040, 0.001);
    const auto e = box.extent();
    EXPECT_NEAR(e.size_x(), 0.060, 1e-12);
    EXPECT_NEAR(e.size_y(), 0.030, 1e-12);
    EXPECT_NEAR(e.height, 0.040, 1e-12);
    EXPECT_NEAR(box.longest_side(), 0.060, 1e-12);
    EXPECT_NEAR(fixtures::box("t", 0.02, 0.03, 0.10, 0.001).longest_side(), 0.10, 1e-12);
}

TEST(ObjectModel, MassRule) {
    EXPECT_NEAR(mass_for_longest_side(0.08), 0.080, 1e-12);
    EXPECT_NEAR(mass_for_longest_side(0.90), 0.900, 1e-12);
    EXPECT_NEAR(mass_for_longest_side(0.45), 0.450, 1e-12);
    const auto box = fixtures::box("b", 0.060, 0.030, 0.040, 0.001);
    EXPECT_NEAR(box.mass, 0.060, 1e-12);
}

TEST(ObjectModel, Validation) {
    Grid<double> g(3, 3, 0.0);
    EXPECT_THROW(make_object("empty", g, 0.01), ValidationError);
    g(1, 1) = 0.01;
    EXPECT_NO_THROW(make_object("ok", g, 0.01));
    EXPECT_THROW(make_object("bad id", g, 0.01), ValidationError);
    EXPECT_THROW(make_object(".hidden", g, 0.01), ValidationError);
    EXPECT_THROW(make_object("ok", g, 0.0), ValidationError);
    g(0, 0) = -1;
    EXPECT_THROW(make_object("neg", g, 0.01), ValidationError);
}

TEST(Rescale, ExactLongestSideAndShape) {
    const auto l = fixtures::l_shape("l", 0.10, 0.06, 0.02, 0.03, 0.002);
    const auto e0 = l.extent();
    for (double target : {0.08, 0.45, 0.90}) {
        const auto s = rescale_to(l, target);
        const auto e = s.extent();
        EXPECT_NEAR(s.longest_side(), target, 1e-12);
        EXPECT_NEAR(s.mass, target, 1e-12);
        EXPECT_NEAR(e.size_y() / e.size_x(), e0.size_y() / e0.size_x(), 1e-9);
        EXPECT_NEAR(e.height / e.size_x(), e0.height / e0.size_x(), 1e-9);
    }
}

TEST(Rescale, RandomWithinConfiguredRange) {
    const auto c = fixtures::cylinder_upright("c", 0.02, 0.05, 0.002);
    double lo = 1, hi = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        Rng rng(seed);
        const double ls = rescale_object(c, rng).longest_side();
        EXPECT_GE(ls, kMinLongestSide - 1e-12);
        EXPECT_LE(ls, kMaxLongestSide + 1e-12);
        lo = std::min(lo, ls);
        hi = std::max(hi, ls);
    }
    // uniform over [0.08, 0.90]: 400 draws reach both ends of the range
    EXPECT_LT(lo, 0.12);
    EXPECT_GT(hi, 0.86);
}

TEST(Heightmap, ParseValid) {
    const auto m = parse_heightmap("id = tiny\nresolution = 0.01\nrows = 2\ncols = 3\n", "0 0.02 0\n0 0.03 0\n");
    EXPECT_EQ(m.id, "tiny");
    EXPECT_EQ(m.heights.rows(), 2u);
    EXPECT_DOUBLE_EQ(m.heights(1, 1), 0.03);
    EXPECT_NEAR(m.longest_side(), 0.03, 1e-12);
}

TEST(Heightmap, ParseErrorsCarryLine) {
    const std::string meta = "id = tiny\nresolution = 0.01\nrows = 2\ncols = 3\n";
    try {
        parse_heightmap(meta, "0 0.02 0\n0 0.03\n", "tiny");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_heightmap(meta, "0 -0.02 0\n0 0.03 0\n", "tiny"), ParseError);
    EXPECT_THROW(parse_heightmap(meta, "0 0 0\n0 0 0\n", "tiny"), ValidationError);
    EXPECT_THROW(parse_heightmap(meta, "0 0.02 0\n", "tiny"), ParseError);
    EXPECT_THROW(parse_heightmap(meta, "0 x 0\n0 0.03 0\n", "tiny"), ParseError);
    EXPECT_THROW(parse_heightmap("id = tiny\nrows = 2\ncols = 3\n", "0 0.02 0\n0 0.03 0\n", "tiny"), ParseError);
}

TEST(Heightmap, WriteIngestRoundTrip) {
    test::TempDir dir("hgt");
    const auto ring = fixtures::ring("ring", 0.03, 0.02, 0.01, 0.002);
    write_heightmap(ring, dir.path());
    const auto back = ingest_heightmap(dir / "ring.meta");
    EXPECT_EQ(back.id, ring.id);
    EXPECT_EQ(back.heights, ring.heights);
    EXPECT_DOUBLE_EQ(back.resolution, ring.resolution);
    EXPECT_THROW(ingest_heightmap(dir / "absent.meta"), NotFoundError);
}

TEST(Mesh, RasterizesBox) {
    test::TempDir dir("obj");
    write_text_file(dir / "box.obj",
                    "# 40 x 20 x 30 mm box\n"
                    "v 0 0 0\nv 0.04 0 0\nv 0.04 0.02 0\nv 0 0.02 0\n"
                    "v 0 0 0.03\nv 0.04 0 0.03\nv 0.04 0.02 0.03\nv 0 0.02 0.03\n"
                    "f 1 2 3 4\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n");
    const Mesh mesh = read_obj(dir / "box.obj");
    EXPECT_EQ(mesh.vertices.size(), 8u);
    EXPECT_EQ(mesh.triangles.size(), 12u);
    const auto g = rasterize_mesh(mesh, 0.002);
    const auto m = make_object("box", g, 0.002);
    EXPECT_NEAR(m.extent().size_x(), 0.04, 0.002 + 1e-9);
    EXPECT_NEAR(m.extent().size_y(), 0.02, 0.002 + 1e-9);
    EXPECT_NEAR(m.extent().height, 0.03, 1e-12);
    EXPECT_THROW(rasterize_mesh(Mesh{}, 0.002), ValidationError);
    write_text_file(dir / "bad.obj", "v 0 0 0\nf 1 2 3\n");
    EXPECT_THROW(read_obj(dir / "bad.obj"), ParseError);
}

TEST(MakeScene, BoxAtOrigin) {
    const Scene s = test::box_scene();
    EXPECT_EQ(count_object_pixels(s), 60u * 30u);
    EXPECT_NEAR(s.height_at(100.5, 100.5), 0.040, kLevel);
    EXPECT_NEAR(s.height_at(70.5, 100.5), 0.040, kLevel);   // x in [70, 130)
    EXPECT_DOUBLE_EQ(s.height_at(69.5, 100.5), 0.0);
    EXPECT_NEAR(s.height_at(100.5, 85.5), 0.040, kLevel);   // y in [85, 115)
    EXPECT_DOUBLE_EQ(s.height_at(100.5, 84.5), 0.0);
    EXPECT_DOUBLE_EQ(s.height_at(-5, -5), 0.0);
    EXPECT_NEAR(s.mass, 0.060, 1e-12);
}

TEST(MakeScene, YawQuarterTurnSwapsAxes) {
    const auto box = fixtures::box("box", 0.060, 0.030, 0.040, 0.001);
    const Scene s = make_scene(box, Pose{0, 0, 90}, test::small_camera(200, 0.001), "box_r");
    EXPECT_EQ(count_object_pixels(s), 60u * 30u);
    EXPECT_GT(s.height_at(100.5, 71.5), 0.0);
    EXPECT_DOUBLE_EQ(s.height_at(71.5, 100.5), 0.0);
}

TEST(MakeScene, TranslationMovesFootprint) {
    const auto box = fixtures::box("box", 0.020, 0.020, 0.010, 0.001);
    const Scene s = make_scene(box, Pose{0.030, 0.020, 0}, test::small_camera(200, 0.001), "b");
    // +x is image right, +y world is image up
    EXPECT_GT(s.height_at(130.5, 80.5), 0.0);
    EXPECT_DOUBLE_EQ(s.height_at(100.5, 100.5), 0.0);
    const auto px = s.world_to_pixel(0.030, 0.020);
    EXPECT_DOUBLE_EQ(px[0], 130);
    EXPECT_DOUBLE_EQ(px[1], 80);
    const auto w = s.pixel_to_world(px[0], px[1]);
    EXPECT_NEAR(w[0], 0.030, 1e-15);
    EXPECT_NEAR(w[1], 0.020, 1e-15);
}

TEST(MakeScene, RejectsOutOfFrame) {
    const auto box = fixtures::box("box", 0.060, 0.030, 0.040, 0.001);
    EXPECT_THROW(make_scene(box, Pose{0.09, 0, 0}, test::small_camera(200, 0.001), "x"), ValidationError);
    EXPECT_THROW(make_scene(box, Pose{}, test::small_camera(50, 0.001), "x"), ValidationError);
}

TEST(Settle, InFrameDeterministicAndVaried) {
    const auto t = fixtures::t_shape("t", 0.08, 0.06, 0.02, 0.03, 0.002);
    const Camera cam = test::small_camera(128, 0.0025);
    double min_yaw = 360, max_yaw = -360;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng a(seed), b(seed);
        const Scene s1 = settle(t, a, cam, "t_0");
        const Scene s2 = settle(t, b, cam, "t_0");
        EXPECT_EQ(s1.heights, s2.heights);
        EXPECT_EQ(s1.pose, s2.pose);
        EXPECT_TRUE(footprint_in_frame(t, s1.pose, cam));
        EXPECT_GT(s1.pose.yaw, -180.0);
        EXPECT_LE(s1.pose.yaw, 180.0);
        min_yaw = std::min(min_yaw, s1.pose.yaw);
        max_yaw = std::max(max_yaw, s1.pose.yaw);
        // the whole object is imaged: no object cell is cut at the border
        for (std::size_t i = 0; i < s1.heights.cols(); ++i) {
            EXPECT_EQ(s1.heights(0, i), 0.0);
            EXPECT_EQ(s1.heights(s1.heights.rows() - 1, i), 0.0);
        }
    }
    EXPECT_LT(min_yaw, -90);
    EXPECT_GT(max_yaw, 90);
}

TEST(Settle, TooLargeObjectFails) {
    const auto big = fixtures::box("big", 0.5, 0.5, 0.1, 0.01);
    Rng rng(1);
    EXPECT_THROW(settle(big, rng, test::small_camera(100, 0.0025), "big_0"), ValidationError);
}

TEST(DepthLevels, QuantizationRoundTrip) {
    for (double h : {0.0, 0.001, 0.04, 0.3, 0.9}) {
        const double q = height_from_level(depth_level(1.5 - h, 1.5), 1.5);
        EXPECT_NEAR(q, h, kLevel / 2 + 1e-15);
        EXPECT_EQ(height_from_level(depth_level(1.5 - q, 1.5), 1.5), q);
    }
    EXPECT_EQ(depth_level(1.5, 1.5), 65535);
    EXPECT_EQ(depth_level(0.0, 1.5), 0);
}

TEST(SceneFiles, RoundTripIsExact) {
    test::TempDir dir("scene");
    const auto l = fixtures::l_shape("l", 0.10, 0.06, 0.02, 0.03, 0.002);
    Rng rng(9);
    const Scene s = settle(rescale_to(l, 0.2), rng, test::small_camera(128, 0.0025), "l_3", 1234);
    write_scene(s, dir / "l/3");
    const Scene back = read_scene(dir / "l/3");
    EXPECT_EQ(back.scene_id, s.scene_id);
    EXPECT_EQ(back.object_id, s.object_id);
    EXPECT_EQ(back.seed, s.seed);
    EXPECT_EQ(back.pose, s.pose);
    EXPECT_EQ(back.camera, s.camera);
    EXPECT_EQ(back.mass, s.mass);
    EXPECT_EQ(back.longest_side, s.longest_side);
    EXPECT_EQ(back.heights, s.heights);

    const auto depth = read_pgm(dir / "l/3/depth.pgm");
    EXPECT_EQ(depth.maxval, 65535);
    EXPECT_EQ(depth.pixels.rows(), 128u);
    const auto mask = read_pgm(dir / "l/3/mask.pgm");
    EXPECT_EQ(mask.maxval, 1);
    std::size_t on = 0;
    for (auto v : mask.pixels.data()) on += v;
    EXPECT_EQ(on, count_object_pixels(s));
}

TEST(SceneFiles, RenderDepthIsCameraDistance) {
    const Scene s = test::box_scene();
    const auto d = render_depth(s);
    EXPECT_NEAR(d(100, 100), 1.5 - 0.04, kLevel);
    EXPECT_DOUBLE_EQ(d(0, 0), 1.5);
    const auto m = render_mask(s);
    EXPECT_EQ(m(100, 100), 1);
    EXPECT_EQ(m(0, 0), 0);
}

TEST(SceneFiles, MissingOrCorrupt) {
    test::TempDir dir("scene_bad");
    EXPECT_THROW(read_scene(dir / "nothing"), NotFoundError);
    write_scene(test::box_scene(), dir / "s");
    write_text_file(dir / "s/scene.txt", "scene_id = x\n");
    EXPECT_THROW(read_scene(dir / "s"), ParseError);
}

TEST(Fixtures, StandardPoolIsLargeAndValid) {
    const auto pool = fixtures::standard_pool();
    EXPECT_GE(pool.size(), 20u);
    std::set<std::string> ids;
    for (const auto& m : pool) {
        EXPECT_NO_THROW(m.validate());
        ids.insert(m.id);
    }
    EXPECT_EQ(ids.size(), pool.size());
}
