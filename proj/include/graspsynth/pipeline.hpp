#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "graspsynth/grasp.hpp"
#include "graspsynth/sampler.hpp"
#include "graspsynth/scene.hpp"
#include "graspsynth/sgt.hpp"

namespace graspsynth {

inline constexpr const char* kToolVersion = "0.1.0";

/// Two grasps are duplicates when all three differences fall under threshold.
struct DedupConfig {
    double center_thresh = 0.01;   // m
    double angle_thresh = 15.0;    // degrees
    double opening_thresh = 0.01;  // m

    void validate() const;
    friend bool operator==(const DedupConfig&, const DedupConfig&) = default;
};

bool is_near_duplicate(const Grasp& a, const Grasp& b, const DedupConfig& cfg, double meters_per_pixel);

/// Greedy keep-first over the grasps sorted by (x, y, theta).
std::vector<Grasp> dedup(std::vector<Grasp> grasps, const DedupConfig& cfg, double meters_per_pixel);

struct Annotation {
    Grasp grasp;                    // jaw_size holds the screening jaw in pixels
    std::vector<double> jaw_sizes;  // m, ascending, non-empty
};

struct AnnotationSet {
    std::string scene_id;
    std::vector<Annotation> entries;
    bool warning = false;  // no successful grasp was found
    std::uint64_t seed = 0;
    int candidates = 0;
    int screened_successes = 0;

    /// One rectangle per (grasp, jaw size) in file order, jaw_size in pixels.
    GraspSet rectangles(double meters_per_pixel) const;
    std::size_t line_count() const;
};

/**
 * Three-step annotation of one scene:
 *   1. sample `sampler.candidates` grasps from the edge-pair probability map,
 *   2. keep those that succeed with the screening jaw (2 cm),
 *   3. re-test every survivor with every jaw size,
 * then drop near-duplicates. Deterministic in `seed`.
 */
AnnotationSet annotate_scene(const Scene& scene, const SamplerConfig& sampler, const GripperConfig& gripper,
                             const DedupConfig& dedup_cfg, std::uint64_t seed);

/// grasps.txt: `x;y;theta;opening;jaw_size`, pixels and degrees, one line per
/// (grasp, jaw size).
std::string format_annotations(const AnnotationSet& set, double meters_per_pixel);
AnnotationSet parse_annotations(std::string_view text, const std::string& source, std::string scene_id,
                                double meters_per_pixel, const GripperConfig& gripper);

/// Raw grasps.txt lines without jaw-size validation (for drawing).
GraspSet parse_grasp_lines(std::string_view text, const std::string& source);

struct Prediction {
    std::string scene_id;
    Grasp grasp;
    std::size_t line = 0;  // 1-based source line, 0 if not read from a file
};

std::string format_predictions(std::span<const Prediction> preds);
std::vector<Prediction> parse_predictions(std::string_view text, const std::string& source);
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> preds);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

struct GenerationConfig {
    std::uint64_t master_seed = 0;
    int scenes_per_object = kMaxScenesPerObject;
    SamplerConfig sampler;
    GripperConfig gripper;
    DedupConfig dedup;
    Camera camera;
    int workers = 1;  // scheduling only; never affects output

    void validate() const;
};

struct SceneRecord {
    std::string object_id;
    int scene_index = 0;
    std::string scene_id;
    std::string dir;  // relative to the dataset root
    std::uint64_t seed = 0;
    std::size_t annotation_count = 0;
    bool warning = false;
};

struct ObjectFailure {
    std::string object_id;
    std::string message;
};

struct Manifest {
    GenerationConfig config;
    std::string tool_version = kToolVersion;
    std::vector<SceneRecord> scenes;
    std::vector<ObjectFailure> failures;
};

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text, const std::string& source);

std::string make_scene_id(const std::string& object_id, int scene_index);

struct GeneratedScene {
    Scene scene;
    AnnotationSet annotations;
};

/// One scene job: per-scene seed, rescale, settle, annotate. Independent of any other job.
GeneratedScene generate_scene(const ObjectModel& model, int scene_index, const GenerationConfig& cfg);

/// Writes `<object_id>/<k>/{depth.pgm, mask.pgm, scene.txt, grasps.txt}` for
/// every object and scene index, then manifest.txt. Per-object failures are
/// recorded in the manifest and do not stop the run.
Manifest generate_dataset(std::span<const ObjectModel> pool, const GenerationConfig& cfg,
                          const std::filesystem::path& out_dir, std::span<const ObjectFailure> ingest_failures = {});

/// FNV-1a digest (hex) of manifest.txt followed by every listed scene's files.
std::string dataset_digest(const std::filesystem::path& dir);

struct DatasetScene {
    SceneRecord record;
    Scene scene;
    AnnotationSet annotations;
};

struct Dataset {
    std::filesystem::path root;
    Manifest manifest;
    std::vector<DatasetScene> scenes;

    const DatasetScene* find(const std::string& scene_id) const;
};

Dataset read_dataset(const std::filesystem::path& dir);

/// Loads every `*.meta` object in a directory (sorted by file name). Objects
/// that fail to parse are reported in `failures` instead of throwing.
std::vector<ObjectModel> load_object_pool(const std::filesystem::path& dir, std::vector<ObjectFailure>& failures);

}  // namespace graspsynth
