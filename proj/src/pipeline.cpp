#include "graspsynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include <fmt/core.h>

#include "graspsynth/error.hpp"
#include "graspsynth/io.hpp"
#include "graspsynth/rng.hpp"

namespace graspsynth {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr std::array<const char*, 4> kSceneFiles{"depth.pgm", "mask.pgm", "scene.txt", "grasps.txt"};

bool grasp_less(const Grasp& a, const Grasp& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    if (a.theta() != b.theta()) return a.theta() < b.theta();
    return a.opening() < b.opening();
}

// Indices of kept grasps, in (x, y, theta) order.
std::vector<std::size_t> dedup_indices(const std::vector<Grasp>& grasps, const DedupConfig& cfg, double mpp) {
    std::vector<std::size_t> order(grasps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grasp_less(grasps[a], grasps[b]); });
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        const bool dup = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return is_near_duplicate(grasps[k], grasps[i], cfg, mpp);
        });
        if (!dup) kept.push_back(i);
    }
    return kept;
}

double parse_theta(std::string_view field, const std::string& source, std::size_t line) {
    const double theta = parse_double(field, source, line, "theta");
    if (!(theta > -90.0 && theta <= 90.0)) {
        throw ParseError(source, line, fmt::format("field 'theta': {} is outside (-90, 90]", theta));
    }
    return theta;
}

std::vector<std::string_view> fields(std::string_view line, std::size_t expected, const std::string& source,
                                     std::size_t lineno, const char* layout) {
    auto f = split(line, ';');
    if (f.size() != expected) {
        throw ParseError(source, lineno,
                         fmt::format("expected {} fields ({}), found {}", expected, layout, f.size()));
    }
    return f;
}

Grasp make_grasp(double x, double y, double opening, double jaw, double theta, const std::string& source,
                 std::size_t lineno) {
    try {
        return Grasp(x, y, opening, jaw, theta);
    } catch (const ValidationError& e) {
        throw ParseError(source, lineno, e.what());
    }
}

std::string join_sizes(const std::vector<double>& sizes) {
    std::string out;
    for (double s : sizes) out += (out.empty() ? "" : ",") + format_double(s);
    return out;
}

std::string sanitize(std::string s) {
    for (char& ch : s) {
        if (ch == ';' || ch == '\n' || ch == '\r') ch = ' ';
    }
    return s;
}

}  // namespace

void DedupConfig::validate() const {
    if (!(center_thresh > 0.0) || !(angle_thresh > 0.0) || !(opening_thresh > 0.0)) {
        throw ValidationError("dedup thresholds must be positive");
    }
}

bool is_near_duplicate(const Grasp& a, const Grasp& b, const DedupConfig& cfg, double mpp) {
    const double center = std::hypot(a.x() - b.x(), a.y() - b.y()) * mpp;
    return center < cfg.center_thresh && angle_diff(a.theta(), b.theta()) < cfg.angle_thresh &&
           std::abs(a.opening() - b.opening()) * mpp < cfg.opening_thresh;
}

std::vector<Grasp> dedup(std::vector<Grasp> grasps, const DedupConfig& cfg, double mpp) {
    cfg.validate();
    std::vector<Grasp> out;
    for (std::size_t i : dedup_indices(grasps, cfg, mpp)) out.push_back(grasps[i]);
    return out;
}

GraspSet AnnotationSet::rectangles(double mpp) const {
    GraspSet out;
    for (const auto& e : entries) {
        for (double s : e.jaw_sizes) out.push_back(e.grasp.with_jaw_size(s / mpp));
    }
    return out;
}

std::size_t AnnotationSet::line_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.jaw_sizes.size();
    return n;
}

AnnotationSet annotate_scene(const Scene& scene, const SamplerConfig& sampler, const GripperConfig& gripper,
                             const DedupConfig& dedup_cfg, std::uint64_t seed) {
    sampler.validate();
    gripper.validate();
    dedup_cfg.validate();
    const double mpp = scene.camera.resolution;

    const auto edges = edge_map(scene, sampler.orientation_bins);
    const auto map = probability_map(edges, gripper.max_opening / mpp, sampler);
    Rng rng(stream_seed(seed, "candidates"));
    const auto ranges = CandidateRanges::for_scene(scene, gripper.max_opening, gripper.screening_jaw_size,
                                                   sampler.theta_jitter);
    const auto candidates = sample_candidates(map, sampler.candidates, rng, ranges);

    std::vector<Grasp> successes;
    for (const auto& c : candidates) {
        if (simulate_grasp(scene, c, gripper.screening_jaw_size, gripper).success) successes.push_back(c);
    }
    std::vector<std::vector<double>> sizes;
    sizes.reserve(successes.size());
    for (const auto& g : successes) sizes.push_back(trial_all_jaw_sizes(scene, g, gripper));

    AnnotationSet set;
    set.scene_id = scene.scene_id;
    set.seed = seed;
    set.candidates = sampler.candidates;
    set.screened_successes = static_cast<int>(successes.size());
    for (std::size_t i : dedup_indices(successes, dedup_cfg, mpp)) {
        if (sizes[i].empty()) continue;
        set.entries.push_back({successes[i], sizes[i]});
    }
    set.warning = set.entries.empty();
    return set;
}

std::string format_annotations(const AnnotationSet& set, double mpp) {
    std::string out;
    for (const auto& e : set.entries) {
        for (double s : e.jaw_sizes) {
            out += fmt::format("{};{};{};{};{}\n", format_double(e.grasp.x()), format_double(e.grasp.y()),
                               format_double(e.grasp.theta()), format_double(e.grasp.opening()),
                               format_double(s / mpp));
        }
    }
    return out;
}

AnnotationSet parse_annotations(std::string_view text, const std::string& source, std::string scene_id,
                                double mpp, const GripperConfig& gripper) {
    AnnotationSet set;
    set.scene_id = std::move(scene_id);
    const double screening_px = gripper.screening_jaw_size / mpp;
    std::size_t lineno = 0;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto f = fields(line, 5, source, lineno, "x;y;theta;opening;jaw_size");
        const double x = parse_double(f[0], source, lineno, "x");
        const double y = parse_double(f[1], source, lineno, "y");
        const double theta = parse_theta(f[2], source, lineno);
        const double opening = parse_double(f[3], source, lineno, "opening");
        const double jaw_px = parse_double(f[4], source, lineno, "jaw_size");
        const auto jaw = gripper.match_jaw_size(jaw_px * mpp);
        if (!jaw) {
            throw ParseError(source, lineno,
                             fmt::format("field 'jaw_size': {} px ({} m) is not a configured jaw size", jaw_px,
                                         jaw_px * mpp));
        }
        const Grasp g = make_grasp(x, y, opening, screening_px, theta, source, lineno);
        if (!set.entries.empty() && set.entries.back().grasp == g) {
            auto& sizes = set.entries.back().jaw_sizes;
            if (*jaw <= sizes.back()) throw ParseError(source, lineno, "jaw sizes of a grasp must be ascending");
            sizes.push_back(*jaw);
        } else {
            set.entries.push_back({g, {*jaw}});
        }
    }
    set.warning = set.entries.empty();
    return set;
}

GraspSet parse_grasp_lines(std::string_view text, const std::string& source) {
    GraspSet out;
    std::size_t lineno = 0;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto f = fields(line, 5, source, lineno, "x;y;theta;opening;jaw_size");
        out.push_back(make_grasp(parse_double(f[0], source, lineno, "x"), parse_double(f[1], source, lineno, "y"),
                                 parse_double(f[3], source, lineno, "opening"),
                                 parse_double(f[4], source, lineno, "jaw_size"), parse_theta(f[2], source, lineno),
                                 source, lineno));
    }
    return out;
}

std::string format_predictions(std::span<const Prediction> preds) {
    std::string out;
    for (const auto& p : preds) {
        if (p.scene_id.empty() || p.scene_id.find(';') != std::string::npos) {
            throw ValidationError(fmt::format("invalid scene id '{}' in prediction", p.scene_id));
        }
        const Grasp& g = p.grasp;
        out += fmt::format("{};{};{};{};{};{}\n", p.scene_id, format_double(g.x()), format_double(g.y()),
                           format_double(normalize_angle(g.theta())), format_double(g.opening()),
                           format_double(g.jaw_size()));
    }
    return out;
}

std::vector<Prediction> parse_predictions(std::string_view text, const std::string& source) {
    std::vector<Prediction> out;
    std::size_t lineno = 0;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto f = fields(line, 6, source, lineno, "scene_id;x;y;theta;opening;jaw_size");
        const std::string scene_id(trim(f[0]));
        if (scene_id.empty()) throw ParseError(source, lineno, "field 'scene_id' is empty");
        const double x = parse_double(f[1], source, lineno, "x");
        const double y = parse_double(f[2], source, lineno, "y");
        const double theta = parse_theta(f[3], source, lineno);
        const double opening = parse_double(f[4], source, lineno, "opening");
        const double jaw = parse_double(f[5], source, lineno, "jaw_size");
        out.push_back({scene_id, make_grasp(x, y, opening, jaw, theta, source, lineno), lineno});
    }
    return out;
}

void write_predictions(const fs::path& path, std::span<const Prediction> preds) {
    write_text_file(path, format_predictions(preds));
}

std::vector<Prediction> read_predictions(const fs::path& path) {
    return parse_predictions(read_text_file(path), path.string());
}

void GenerationConfig::validate() const {
    if (scenes_per_object < 1 || scenes_per_object > kMaxScenesPerObject) {
        throw ValidationError(fmt::format("scenes per object must be in [1, {}]", kMaxScenesPerObject));
    }
    if (workers < 1) throw ValidationError("workers must be >= 1");
    sampler.validate();
    gripper.validate();
    dedup.validate();
    camera.validate();
}

std::string format_manifest(const Manifest& m) {
    const auto& c = m.config;
    std::string out = "# graspsynth dataset manifest\nformat;1\n";
    out += fmt::format("tool;{}\n", m.tool_version);
    auto kv = [&out](const char* key, const std::string& value) { out += fmt::format("config;{};{}\n", key, value); };
    kv("master_seed", std::to_string(c.master_seed));
    kv("scenes_per_object", std::to_string(c.scenes_per_object));
    kv("sampler.candidates", std::to_string(c.sampler.candidates));
    kv("sampler.heuristic_weight", format_double(c.sampler.heuristic_weight));
    kv("sampler.orientation_bins", std::to_string(c.sampler.orientation_bins));
    kv("sampler.theta_jitter", format_double(c.sampler.theta_jitter));
    kv("sampler.edge_threshold", format_double(c.sampler.edge_threshold));
    kv("gripper.max_opening", format_double(c.gripper.max_opening));
    kv("gripper.jaw_sizes", join_sizes(c.gripper.jaw_sizes));
    kv("gripper.screening_jaw_size", format_double(c.gripper.screening_jaw_size));
    kv("gripper.jaw_thickness", format_double(c.gripper.jaw_thickness));
    kv("gripper.insertion_depth", format_double(c.gripper.insertion_depth));
    kv("gripper.friction_mu", format_double(c.gripper.friction_mu));
    kv("gripper.grip_force", format_double(c.gripper.grip_force));
    kv("gripper.lift_safety_factor", format_double(c.gripper.lift_safety_factor));
    kv("gripper.max_approach_tilt", format_double(c.gripper.max_approach_tilt));
    kv("dedup.center_thresh", format_double(c.dedup.center_thresh));
    kv("dedup.angle_thresh", format_double(c.dedup.angle_thresh));
    kv("dedup.opening_thresh", format_double(c.dedup.opening_thresh));
    kv("camera.rows", std::to_string(c.camera.rows));
    kv("camera.cols", std::to_string(c.camera.cols));
    kv("camera.resolution", format_double(c.camera.resolution));
    kv("camera.height", format_double(c.camera.height));
    for (const auto& s : m.scenes) {
        out += fmt::format("scene;{};{};{};{};{};{};{}\n", s.object_id, s.scene_index, s.scene_id, s.dir, s.seed,
                           s.annotation_count, s.warning ? 1 : 0);
    }
    for (const auto& f : m.failures) {
        out += fmt::format("failure;{};{}\n", f.object_id, sanitize(f.message));
    }
    return out;
}

Manifest parse_manifest(std::string_view text, const std::string& source) {
    Manifest m;
    std::map<std::string, std::pair<std::string, std::size_t>> cfg;
    std::size_t lineno = 0;
    bool saw_format = false;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto f = split(line, ';');
        if (f[0] == "format") {
            if (f.size() != 2 || trim(f[1]) != "1") throw ParseError(source, lineno, "unsupported manifest format");
            saw_format = true;
        } else if (f[0] == "tool" && f.size() == 2) {
            m.tool_version = std::string(f[1]);
        } else if (f[0] == "config" && f.size() == 3) {
            cfg[std::string(f[1])] = {std::string(f[2]), lineno};
        } else if (f[0] == "scene" && f.size() == 8) {
            SceneRecord r;
            r.object_id = std::string(f[1]);
            r.scene_index = static_cast<int>(parse_int(f[2], source, lineno, "scene_index"));
            r.scene_id = std::string(f[3]);
            r.dir = std::string(f[4]);
            r.seed = parse_uint64(f[5], source, lineno, "seed");
            r.annotation_count = static_cast<std::size_t>(parse_uint64(f[6], source, lineno, "annotations"));
            r.warning = parse_int(f[7], source, lineno, "warning") != 0;
            m.scenes.push_back(std::move(r));
        } else if (f[0] == "failure" && f.size() == 3) {
            m.failures.push_back({std::string(f[1]), std::string(f[2])});
        } else {
            throw ParseError(source, lineno, fmt::format("unrecognized manifest record '{}'", f[0]));
        }
    }
    if (!saw_format) throw ParseError(source, 0, "missing 'format' record");

    auto get = [&](const char* key) -> const std::pair<std::string, std::size_t>& {
        auto it = cfg.find(key);
        if (it == cfg.end()) throw ParseError(source, 0, fmt::format("missing config key '{}'", key));
        return it->second;
    };
    auto num = [&](const char* key) { return parse_double(get(key).first, source, get(key).second, key); };
    auto integer = [&](const char* key) {
        return static_cast<int>(parse_int(get(key).first, source, get(key).second, key));
    };
    auto& c = m.config;
    c.master_seed = parse_uint64(get("master_seed").first, source, get("master_seed").second, "master_seed");
    c.scenes_per_object = integer("scenes_per_object");
    c.sampler.candidates = integer("sampler.candidates");
    c.sampler.heuristic_weight = num("sampler.heuristic_weight");
    c.sampler.orientation_bins = integer("sampler.orientation_bins");
    c.sampler.theta_jitter = num("sampler.theta_jitter");
    c.sampler.edge_threshold = num("sampler.edge_threshold");
    c.gripper.max_opening = num("gripper.max_opening");
    c.gripper.jaw_sizes.clear();
    for (auto s : split(get("gripper.jaw_sizes").first, ',')) {
        c.gripper.jaw_sizes.push_back(parse_double(s, source, get("gripper.jaw_sizes").second, "gripper.jaw_sizes"));
    }
    c.gripper.screening_jaw_size = num("gripper.screening_jaw_size");
    c.gripper.jaw_thickness = num("gripper.jaw_thickness");
    c.gripper.insertion_depth = num("gripper.insertion_depth");
    c.gripper.friction_mu = num("gripper.friction_mu");
    c.gripper.grip_force = num("gripper.grip_force");
    c.gripper.lift_safety_factor = num("gripper.lift_safety_factor");
    c.gripper.max_approach_tilt = num("gripper.max_approach_tilt");
    c.dedup.center_thresh = num("dedup.center_thresh");
    c.dedup.angle_thresh = num("dedup.angle_thresh");
    c.dedup.opening_thresh = num("dedup.opening_thresh");
    c.camera.rows = integer("camera.rows");
    c.camera.cols = integer("camera.cols");
    c.camera.resolution = num("camera.resolution");
    c.camera.height = num("camera.height");
    try {
        c.validate();
    } catch (const ValidationError& e) {
        throw ParseError(source, 0, e.what());
    }
    return m;
}

std::string make_scene_id(const std::string& object_id, int scene_index) {
    return fmt::format("{}_{}", object_id, scene_index);
}

GeneratedScene generate_scene(const ObjectModel& model, int scene_index, const GenerationConfig& cfg) {
    const std::uint64_t seed = scene_seed(cfg.master_seed, model.id, static_cast<std::uint32_t>(scene_index));
    Rng scale_rng(stream_seed(seed, "scale"));
    const ObjectModel scaled = rescale_object(model, scale_rng);
    Rng pose_rng(stream_seed(seed, "pose"));
    Scene scene = settle(scaled, pose_rng, cfg.camera, make_scene_id(model.id, scene_index), seed);
    AnnotationSet ann = annotate_scene(scene, cfg.sampler, cfg.gripper, cfg.dedup, seed);
    return {std::move(scene), std::move(ann)};
}

Manifest generate_dataset(std::span<const ObjectModel> pool, const GenerationConfig& cfg, const fs::path& out_dir,
                          std::span<const ObjectFailure> ingest_failures) {
    cfg.validate();
    if (pool.empty() && ingest_failures.empty()) throw ValidationError("object pool is empty");

    Manifest manifest;
    manifest.config = cfg;
    manifest.failures.assign(ingest_failures.begin(), ingest_failures.end());

    std::vector<const ObjectModel*> objects;
    for (const auto& m : pool) objects.push_back(&m);
    std::stable_sort(objects.begin(), objects.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (std::size_t i = 1; i < objects.size();) {
        if (objects[i]->id == objects[i - 1]->id) {
            manifest.failures.push_back({objects[i]->id, "duplicate object id; only the first copy is used"});
            objects.erase(objects.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }

    struct Job {
        const ObjectModel* model;
        int index;
        std::optional<SceneRecord> record;
        std::string error;
    };
    std::vector<Job> jobs;
    for (auto* m : objects) {
        for (int k = 0; k < cfg.scenes_per_object; ++k) jobs.push_back({m, k, std::nullopt, {}});
    }

    fs::create_directories(out_dir);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            Job& job = jobs[i];
            try {
                const auto gen = generate_scene(*job.model, job.index, cfg);
                const std::string rel = fmt::format("{}/{}", job.model->id, job.index);
                const fs::path dir = out_dir / rel;
                write_scene(gen.scene, dir);
                write_text_file(dir / "grasps.txt", format_annotations(gen.annotations, gen.scene.camera.resolution));
                job.record = SceneRecord{job.model->id,       job.index, gen.scene.scene_id,         rel,
                                         gen.scene.seed,      gen.annotations.entries.size(),
                                         gen.annotations.warning};
            } catch (const std::exception& e) {
                job.error = fmt::format("scene {}: {}", job.index, e.what());
            }
        }
    };
    const auto n_workers = static_cast<std::size_t>(std::max(1, cfg.workers));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < std::min(n_workers, jobs.size()); ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    for (auto& job : jobs) {
        if (job.record) {
            manifest.scenes.push_back(std::move(*job.record));
        } else {
            manifest.failures.push_back({job.model->id, job.error});
        }
    }
    std::stable_sort(manifest.failures.begin(), manifest.failures.end(),
                     [](const auto& a, const auto& b) { return a.object_id < b.object_id; });
    write_text_file(out_dir / kManifestName, format_manifest(manifest));
    return manifest;
}

std::string dataset_digest(const fs::path& dir) {
    const std::string manifest_text = read_text_file(dir / kManifestName);
    std::uint64_t h = fnv1a64(manifest_text);
    const auto manifest = parse_manifest(manifest_text, (dir / kManifestName).string());
    for (const auto& s : manifest.scenes) {
        for (const char* name : kSceneFiles) {
            h = fnv1a64(s.dir + "/" + name, h);
            h = fnv1a64(read_text_file(dir / s.dir / name), h);
        }
    }
    return fmt::format("{:016x}", h);
}

const DatasetScene* Dataset::find(const std::string& scene_id) const {
    for (const auto& s : scenes) {
        if (s.record.scene_id == scene_id) return &s;
    }
    return nullptr;
}

Dataset read_dataset(const fs::path& dir) {
    Dataset ds;
    ds.root = dir;
    const auto manifest_path = dir / kManifestName;
    ds.manifest = parse_manifest(read_text_file(manifest_path), manifest_path.string());
    for (const auto& rec : ds.manifest.scenes) {
        const fs::path scene_dir = dir / rec.dir;
        Scene scene = read_scene(scene_dir);
        if (scene.scene_id != rec.scene_id) {
            throw ParseError((scene_dir / "scene.txt").string(), 0,
                             fmt::format("scene id '{}' does not match manifest '{}'", scene.scene_id, rec.scene_id));
        }
        const auto grasps_path = scene_dir / "grasps.txt";
        auto ann = parse_annotations(read_text_file(grasps_path), grasps_path.string(), rec.scene_id,
                                     scene.camera.resolution, ds.manifest.config.gripper);
        if (ann.entries.size() != rec.annotation_count) {
            throw ParseError(manifest_path.string(), 0,
                             fmt::format("scene {}: manifest lists {} annotations, grasps.txt has {}", rec.scene_id,
                                         rec.annotation_count, ann.entries.size()));
        }
        ann.seed = rec.seed;
        ds.scenes.push_back({rec, std::move(scene), std::move(ann)});
    }
    return ds;
}

std::vector<ObjectModel> load_object_pool(const fs::path& dir, std::vector<ObjectFailure>& failures) {
    if (!fs::is_directory(dir)) throw NotFoundError(fmt::format("object directory {} does not exist", dir.string()));
    std::vector<fs::path> metas;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".meta") metas.push_back(entry.path());
    }
    std::sort(metas.begin(), metas.end());
    std::vector<ObjectModel> pool;
    for (const auto& p : metas) {
        try {
            pool.push_back(ingest_heightmap(p));
        } catch (const Error& e) {
            failures.push_back({p.stem().string(), e.what()});
        }
    }
    return pool;
}

}  // namespace graspsynth
