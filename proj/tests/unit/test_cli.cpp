#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "graspsynth/cli.hpp"
#include "graspsynth/fixtures.hpp"
#include "graspsynth/io.hpp"
#include "graspsynth/pipeline.hpp"
#include "support.hpp"

using namespace graspsynth;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "grasp-synth");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new test::TempDir("cli");
        fs::create_directories(*dir_ / "objects");
        write_heightmap(fixtures::box("box_thin", 0.12, 0.016, 0.05, 0.002), *dir_ / "objects");
        write_heightmap(fixtures::l_shape("l_thin", 0.10, 0.10, 0.012, 0.02, 0.002), *dir_ / "objects");
        gen_ = new CliRun(run({"generate", "--objects", (*dir_ / "objects").string(), "--out", ds().string(), "--seed",
                            "11", "--scenes-per-object", "2", "--candidates", "800", "--workers", "2"}));
    }
    static void TearDownTestSuite() {
        delete gen_;
        delete dir_;
    }
    static fs::path ds() { return *dir_ / "ds"; }

    // Every annotated scene's first rectangle as a prediction.
    static std::vector<Prediction> perfect_predictions(const Dataset& d) {
        std::vector<Prediction> p;
        for (const auto& s : d.scenes)
            if (!s.annotations.entries.empty()) p.push_back({s.record.scene_id, s.annotations.entries[0].grasp, 0});
        return p;
    }

    static test::TempDir* dir_;
    static CliRun* gen_;
};

test::TempDir* CliTest::dir_ = nullptr;
CliRun* CliTest::gen_ = nullptr;

}  // namespace

TEST_F(CliTest, GenerateReportsSummary) {
    ASSERT_EQ(gen_->code, kExitOk) << gen_->err;
    EXPECT_NE(gen_->out.find("scenes: 4"), std::string::npos) << gen_->out;
    EXPECT_NE(gen_->out.find("digest: " + dataset_digest(ds())), std::string::npos);
    EXPECT_TRUE(fs::exists(ds() / "manifest.txt"));
    EXPECT_TRUE(fs::exists(ds() / "box_thin" / "1" / "grasps.txt"));
}

TEST_F(CliTest, GenerateDumpMapsAndSameDigest) {
    test::TempDir out("cli_maps");
    const auto r = run({"generate", "--objects", (*dir_ / "objects").string(), "--out", (out / "ds").string(),
                        "--seed", "11", "--scenes-per-object", "2", "--candidates", "800", "--workers", "1",
                        "--dump-maps"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(dataset_digest(out / "ds"), dataset_digest(ds()));
    EXPECT_TRUE(fs::exists(out / "ds" / "maps" / "box_thin_0.pgm"));
}

TEST_F(CliTest, GenerateRejectsBadInput) {
    test::TempDir empty("cli_empty");
    auto r = run({"generate", "--objects", empty.path().string(), "--out", (empty / "ds").string()});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    r = run({"generate", "--objects", (*dir_ / "objects").string(), "--out", (empty / "ds").string(),
             "--scenes-per-object", "9"});
    EXPECT_EQ(r.code, kExitValidation);
    r = run({"generate", "--out", (empty / "ds").string()});
    EXPECT_EQ(r.code, kExitValidation);
    // a broken object is reported and the rest still generate
    fs::copy(*dir_ / "objects", empty / "objs", fs::copy_options::recursive);
    write_text_file(empty / "objs" / "zz_bad.meta", "id = zz_bad\nrows = x\n");
    r = run({"generate", "--objects", (empty / "objs").string(), "--out", (empty / "ds2").string(), "--candidates",
             "50", "--scenes-per-object", "1"});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("zz_bad"), std::string::npos);
    EXPECT_TRUE(fs::exists(empty / "ds2" / "box_thin" / "0" / "depth.pgm"));
}

TEST_F(CliTest, EvalRectFullAndHalf) {
    const Dataset d = read_dataset(ds());
    auto preds = perfect_predictions(d);
    ASSERT_FALSE(preds.empty());
    test::TempDir tmp("cli_rect");
    write_predictions(tmp / "p.txt", preds);
    auto r = run({"eval-rect", "--pred", (tmp / "p.txt").string(), "--dataset", ds().string(), "--report",
                  (tmp / "r.json").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("accuracy: 100.00%"), std::string::npos) << r.out;
    const auto rep = nlohmann::json::parse(read_text_file(tmp / "r.json"));
    EXPECT_EQ(rep.at("matched").get<std::size_t>(), preds.size());

    // add a perpendicular copy of each prediction: only the original should match
    auto doubled = preds;
    for (const auto& p : preds) {
        const Grasp& g = p.grasp;
        doubled.push_back({p.scene_id, Grasp(g.x(), g.y(), g.opening(), g.jaw_size(), g.theta() + 90), 0});
    }
    // guard: the perpendicular copy must not match some other annotation of the scene
    std::size_t expected = preds.size();
    for (std::size_t i = preds.size(); i < doubled.size(); ++i) {
        const auto& s = *d.find(doubled[i].scene_id);
        if (rect_match(doubled[i].grasp, s.annotations.rectangles(s.scene.camera.resolution)).matched) ++expected;
    }
    write_predictions(tmp / "h.txt", doubled);
    r = run({"eval-rect", "--pred", (tmp / "h.txt").string(), "--dataset", ds().string()});
    ASSERT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find(fmt::format("({}/{})", expected, doubled.size())), std::string::npos) << r.out;

    r = run({"eval-rect", "--pred", (tmp / "p.txt").string(), "--dataset", ds().string(), "--angle-thresh", "0"});
    EXPECT_EQ(r.code, kExitValidation);
}

TEST_F(CliTest, EvalSgtFullAndZero) {
    const Dataset d = read_dataset(ds());
    auto preds = perfect_predictions(d);
    ASSERT_FALSE(preds.empty());
    test::TempDir tmp("cli_sgt");
    write_predictions(tmp / "p.txt", preds);
    auto r = run({"eval-sgt", "--pred", (tmp / "p.txt").string(), "--dataset", ds().string(), "--report",
                  (tmp / "r.json").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("accuracy: 100.00%"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(tmp / "r.json"));

    std::vector<Prediction> miss;
    for (const auto& p : preds) miss.push_back({p.scene_id, Grasp(2, 2, 10, p.grasp.jaw_size(), 0), 0});
    write_predictions(tmp / "m.txt", miss);
    r = run({"eval-sgt", "--pred", (tmp / "m.txt").string(), "--dataset", ds().string()});
    ASSERT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("accuracy: 0.00%"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("no-contact"), std::string::npos);
}

TEST_F(CliTest, MalformedPredictionsNameTheLine) {
    test::TempDir tmp("cli_bad");
    const Dataset d = read_dataset(ds());
    const std::string id = d.scenes[0].record.scene_id;
    const std::string jaw =
        format_double(d.manifest.config.gripper.screening_jaw_size / d.scenes[0].scene.camera.resolution);
    write_text_file(tmp / "p.txt", id + ";10;10;0;10;" + jaw + "\n" + id + ";10;ten;0;10;" + jaw + "\n");
    auto r = run({"eval-sgt", "--pred", (tmp / "p.txt").string(), "--dataset", ds().string()});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("p.txt:2:"), std::string::npos) << r.err;

    // jaw size that the gripper does not have
    write_text_file(tmp / "j.txt", id + ";10;10;0;10;" + jaw + "\n" + id + ";10;10;0;10;1.5\n");
    r = run({"eval-sgt", "--pred", (tmp / "j.txt").string(), "--dataset", ds().string()});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("j.txt:2:"), std::string::npos) << r.err;

    write_text_file(tmp / "u.txt", "ghost_0;10;10;0;10;" + jaw + "\n");
    r = run({"eval-rect", "--pred", (tmp / "u.txt").string(), "--dataset", ds().string()});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("ghost_0"), std::string::npos);

    r = run({"eval-rect", "--pred", (tmp / "missing.txt").string(), "--dataset", ds().string()});
    EXPECT_EQ(r.code, kExitValidation);
}

TEST_F(CliTest, DatasetFromEnvironment) {
    const Dataset d = read_dataset(ds());
    test::TempDir tmp("cli_env");
    write_predictions(tmp / "p.txt", perfect_predictions(d));
    ::setenv("GRASPSYNTH_DATASET", ds().c_str(), 1);
    auto r = run({"eval-rect", "--pred", (tmp / "p.txt").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    // the flag wins over the environment
    ::setenv("GRASPSYNTH_DATASET", (tmp / "nowhere").c_str(), 1);
    r = run({"eval-rect", "--pred", (tmp / "p.txt").string(), "--dataset", ds().string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    r = run({"eval-rect", "--pred", (tmp / "p.txt").string()});
    EXPECT_NE(r.code, kExitOk);
    ::unsetenv("GRASPSYNTH_DATASET");
}

TEST_F(CliTest, RenderOverlay) {
    test::TempDir tmp("cli_ov");
    const Dataset d = read_dataset(ds());
    write_predictions(tmp / "p.txt", perfect_predictions(d));
    const auto scene_dir = ds() / d.scenes[0].record.dir;
    const auto r = run({"render-overlay", "--scene", scene_dir.string(), "--out", (tmp / "o.ppm").string(), "--pred",
                        (tmp / "p.txt").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const std::string img = read_text_file(tmp / "o.ppm");
    EXPECT_EQ(img.substr(0, 2), "P6");
    const auto& cam = d.scenes[0].scene.camera;
    const std::string header = fmt::format("P6\n{} {}\n255\n", cam.cols, cam.rows);
    EXPECT_EQ(img.size(), header.size() + static_cast<std::size_t>(cam.cols * cam.rows * 3));
}

TEST_F(CliTest, ServeRejectsBadAddress) {
    test::TempDir tmp("cli_srv");
    auto r = run({"serve", "--dataset", ds().string(), "--addr", "localhost", "--log", (tmp / "l").string()});
    EXPECT_EQ(r.code, kExitValidation);
    r = run({"serve", "--dataset", ds().string(), "--addr", "127.0.0.1:99999", "--log", (tmp / "l").string()});
    EXPECT_EQ(r.code, kExitValidation);
    r = run({"serve", "--dataset", (tmp / "nowhere").string(), "--addr", "127.0.0.1:0"});
    EXPECT_NE(r.code, kExitOk);
}

TEST(Cli, FixturesAndHelp) {
    test::TempDir tmp("cli_fx");
    auto r = run({"fixtures", "--out", tmp.path().string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    std::vector<ObjectFailure> failures;
    EXPECT_GE(load_object_pool(tmp.path(), failures).size(), 20u);
    EXPECT_TRUE(failures.empty());

    r = run({"generate", "--help"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("--workers"), std::string::npos);
    EXPECT_NE(r.out.find("--candidates"), std::string::npos);
    r = run({"eval-rect", "--help"});
    EXPECT_NE(r.out.find("30"), std::string::npos);
    EXPECT_NE(r.out.find("0.25"), std::string::npos);
    EXPECT_NE(r.out.find("GRASPSYNTH_DATASET"), std::string::npos);
    r = run({});
    EXPECT_EQ(r.code, kExitValidation);
    r = run({"frobnicate"});
    EXPECT_EQ(r.code, kExitValidation);
}
