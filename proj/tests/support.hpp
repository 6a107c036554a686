#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "graspsynth/fixtures.hpp"
#include "graspsynth/scene.hpp"

namespace graspsynth::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("graspsynth-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

// Square camera at `res` m/px; objects at the origin land on the image center.
inline Camera small_camera(int px, double res) { return Camera{px, px, res, 1.5}; }

// The 60 x 30 x 40 mm box at 1 mm/px, centered at pixel (100, 100), long side along image x.
inline Scene box_scene() {
    const auto box = fixtures::box("box", 0.060, 0.030, 0.040, 0.001);
    return make_scene(box, Pose{}, small_camera(200, 0.001), "box_0");
}

inline Scene empty_scene(int px = 200, double res = 0.001) {
    Scene s;
    s.scene_id = "empty_0";
    s.object_id = "empty";
    s.longest_side = 0.1;
    s.mass = 0.1;
    s.object_resolution = res;
    s.camera = small_camera(px, res);
    s.heights = Grid<double>(static_cast<std::size_t>(px), static_cast<std::size_t>(px), 0.0);
    return s;
}

}  // namespace graspsynth::test
