#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graspsynth/grid.hpp"
#include "graspsynth/rng.hpp"

namespace graspsynth {

inline constexpr double kMinLongestSide = 0.08;  // m
inline constexpr double kMaxLongestSide = 0.90;  // m
/// Linear mass rule: 80 g at 8 cm, 900 g at 90 cm.
inline constexpr double kMassPerMeter = 1.0;  // kg per m of longest side
inline constexpr int kMaxScenesPerObject = 5;

/// Axis-aligned bounding box of an object in its own frame (meters).
struct ObjectExtent {
    double min_x = 0, max_x = 0;
    double min_y = 0, max_y = 0;
    double height = 0;

    double size_x() const { return max_x - min_x; }
    double size_y() const { return max_y - min_y; }
    double longest_side() const;
};

/**
 * Heightmap solid resting on the table plane.
 *
 * Cell (r, c) is centered at X = (c + 0.5 - cols/2) * resolution,
 * Y = (rows/2 - r - 0.5) * resolution in the object frame, with Y pointing
 * away from row 0. Heights are meters above the table.
 */
struct ObjectModel {
    std::string id;
    Grid<double> heights;
    double resolution = 0.0;  // m per cell
    double mass = 0.0;        // kg

    ObjectExtent extent() const;
    double longest_side() const { return extent().longest_side(); }

    /// Throws ValidationError on empty/negative/non-finite content or a bad id.
    void validate() const;
};

double mass_for_longest_side(double longest_side_m);

/// Builds a model from a height grid; mass follows the linear rule.
ObjectModel make_object(std::string id, Grid<double> heights, double resolution);

/// Reads `<stem>.meta` (key = value: id, resolution, rows, cols) and the
/// whitespace-separated row-major grid `<stem>.hgt` next to it.
ObjectModel ingest_heightmap(const std::filesystem::path& meta_path);
ObjectModel parse_heightmap(const std::string& meta_text, const std::string& grid_text,
                            const std::string& source = "<memory>");
void write_heightmap(const ObjectModel& model, const std::filesystem::path& dir);

struct Mesh {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Minimal Wavefront OBJ reader (`v` and `f` records; polygons fan-triangulated).
Mesh read_obj(const std::filesystem::path& path);

/// Overhead z-buffer: per cell, the maximum z of triangles covering the cell
/// center (negative z clamped to the table). The grid spans the mesh's xy
/// bounding box at the given resolution.
Grid<double> rasterize_mesh(const Mesh& mesh, double resolution);

/// Isotropic rescale to an exact longest side; mass follows the linear rule.
ObjectModel rescale_to(const ObjectModel& model, double longest_side_m);
/// Rescale with the longest side drawn uniformly in [8, 90] cm.
ObjectModel rescale_object(const ObjectModel& model, Rng& rng);

/// Fixed orthographic overhead camera centered above the world origin.
struct Camera {
    int rows = 512;
    int cols = 512;
    double resolution = 0.0025;  // m per pixel
    double height = 1.5;         // m above the table

    void validate() const;
    friend bool operator==(const Camera&, const Camera&) = default;
};

struct Pose {
    double tx = 0.0;   // m
    double ty = 0.0;   // m
    double yaw = 0.0;  // degrees, counterclockwise seen from above
    friend bool operator==(const Pose&, const Pose&) = default;
};

/// An object in a planar pose under the camera, with its posed heightmap
/// resampled onto the image grid. Heights are stored already snapped to the
/// 16-bit depth levels written to disk, so a scene reloaded from its depth
/// image is bit-identical to the one it was generated from.
struct Scene {
    std::string scene_id;
    std::string object_id;
    double longest_side = 0.0;       // m, after rescale
    double mass = 0.0;               // kg
    double object_resolution = 0.0;  // m per object cell, after rescale
    Pose pose;
    Camera camera;
    std::uint64_t seed = 0;
    Grid<double> heights;  // camera.rows x camera.cols, meters

    /// Height at a continuous pixel position; zero (table) outside the image.
    double height_at(double px, double py) const;
    /// Pixel coordinates of a world point (pixel (c, r) spans [c, c+1) x [r, r+1)).
    std::array<double, 2> world_to_pixel(double wx, double wy) const;
    std::array<double, 2> pixel_to_world(double px, double py) const;
};

std::uint16_t depth_level(double depth, double camera_height);
double height_from_level(std::uint16_t level, double camera_height);

/// Renders `model` at `pose`. Throws ValidationError if the footprint leaves the frame.
Scene make_scene(const ObjectModel& model, const Pose& pose, const Camera& camera,
                 std::string scene_id, std::uint64_t seed = 0);

/// True when the footprint of `model` at `pose` lies inside the frame with a
/// one-pixel margin.
bool footprint_in_frame(const ObjectModel& model, const Pose& pose, const Camera& camera);

/// Random planar resting pose: yaw uniform in (-180, 180], translation uniform
/// over positions that keep the footprint in frame.
Scene settle(const ObjectModel& model, Rng& rng, const Camera& camera, std::string scene_id,
             std::uint64_t seed = 0);

Grid<double> render_depth(const Scene& scene);
Grid<std::uint8_t> render_mask(const Scene& scene);

/// Writes depth.pgm, mask.pgm and scene.txt into `dir` (created if needed).
void write_scene(const Scene& scene, const std::filesystem::path& dir);
Scene read_scene(const std::filesystem::path& dir);

}  // namespace graspsynth
