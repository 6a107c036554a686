#include "graspsynth/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "graspsynth/error.hpp"
#include "graspsynth/evalsvc.hpp"
#include "graspsynth/fixtures.hpp"
#include "graspsynth/io.hpp"
#include "graspsynth/overlay.hpp"
#include "graspsynth/pipeline.hpp"
#include "graspsynth/sampler.hpp"

namespace graspsynth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetEnv = "GRASPSYNTH_DATASET";

std::string pct(std::size_t k, std::size_t n) {
    return fmt::format("{:.2f}%", n ? 100.0 * static_cast<double>(k) / static_cast<double>(n) : 0.0);
}

double ratio(std::size_t k, std::size_t n) { return n ? static_cast<double>(k) / static_cast<double>(n) : 0.0; }

void write_report(const std::string& path, const json& report) {
    if (!path.empty()) write_text_file(path, report.dump(2) + "\n");
}

// Every prediction must refer to a scene of the dataset; all offenders are listed at once.
void check_scene_ids(const std::vector<Prediction>& preds, const Dataset& ds, const std::string& source) {
    std::vector<std::string> unknown;
    for (const auto& p : preds) {
        if (!ds.find(p.scene_id) && std::find(unknown.begin(), unknown.end(), p.scene_id) == unknown.end())
            unknown.push_back(p.scene_id);
    }
    if (unknown.empty()) return;
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw NotFoundError(fmt::format("{}: unknown scene ids: {}", source, list));
}

struct Tally {
    std::size_t n = 0;
    std::size_t ok = 0;
};

json per_scene_json(const std::map<std::string, Tally>& per_scene) {
    json scenes = json::object();
    for (const auto& [id, t] : per_scene)
        scenes[id] = json{{"predictions", t.n}, {"matched", t.ok}, {"accuracy", ratio(t.ok, t.n)}};
    return scenes;
}

void print_per_scene(std::ostream& out, const std::map<std::string, Tally>& per_scene) {
    for (const auto& [id, t] : per_scene) fmt::print(out, "  {:<32} {:>8}  ({}/{})\n", id, pct(t.ok, t.n), t.ok, t.n);
}

struct GenerateArgs {
    std::string objects;
    std::string out;
    std::uint64_t seed = 0;
    int scenes_per_object = kMaxScenesPerObject;
    int candidates = SamplerConfig{}.candidates;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool dump_maps = false;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<ObjectFailure> ingest_failures;
    const auto pool = load_object_pool(a.objects, ingest_failures);
    if (pool.empty() && ingest_failures.empty())
        throw ValidationError(fmt::format("no objects (*.meta) found in {}", a.objects));

    GenerationConfig cfg;
    cfg.master_seed = a.seed;
    cfg.scenes_per_object = a.scenes_per_object;
    cfg.sampler.candidates = a.candidates;
    cfg.workers = a.workers;
    const Manifest m = generate_dataset(pool, cfg, a.out, ingest_failures);

    if (a.dump_maps) {
        const fs::path maps = fs::path(a.out) / "maps";
        fs::create_directories(maps);
        for (const auto& rec : m.scenes) {
            const Scene scene = read_scene(fs::path(a.out) / rec.dir);
            const auto pm = probability_map(edge_map(scene, cfg.sampler.orientation_bins),
                                            cfg.gripper.max_opening / scene.camera.resolution, cfg.sampler);
            write_probability_map(pm, maps / (rec.scene_id + ".pgm"));
        }
    }

    std::size_t annotations = 0, warnings = 0;
    for (const auto& s : m.scenes) {
        annotations += s.annotation_count;
        if (s.warning) ++warnings;
    }
    fmt::print(out, "scenes: {}\ngrasps: {}\nscenes without grasps: {}\ndigest: {}\n", m.scenes.size(), annotations,
               warnings, dataset_digest(a.out));
    for (const auto& s : m.scenes) {
        if (s.warning) fmt::print(err, "warning: scene {} has no successful grasp\n", s.scene_id);
    }
    if (!m.failures.empty()) {
        for (const auto& f : m.failures) fmt::print(err, "error: object {}: {}\n", f.object_id, f.message);
        fmt::print(err, "{} object failure(s)\n", m.failures.size());
        return kExitValidation;
    }
    return kExitOk;
}

struct EvalArgs {
    std::string pred;
    std::string dataset;
    double angle_thresh = RectCriterionConfig{}.angle_thresh;
    double iou_thresh = RectCriterionConfig{}.iou_thresh;
    std::string report;
};

int cmd_eval_rect(const EvalArgs& a, std::ostream& out) {
    const RectCriterionConfig cfg{a.angle_thresh, a.iou_thresh};
    cfg.validate();
    const auto preds = read_predictions(a.pred);
    if (preds.empty()) throw ValidationError(a.pred + ": no predictions");
    const Dataset ds = read_dataset(a.dataset);
    check_scene_ids(preds, ds, a.pred);

    std::map<std::string, GraspSet> gts;
    for (const auto& s : ds.scenes) gts[s.record.scene_id] = s.annotations.rectangles(s.scene.camera.resolution);
    std::vector<std::string> empty;
    for (const auto& p : preds) {
        if (gts[p.scene_id].empty() && std::find(empty.begin(), empty.end(), p.scene_id) == empty.end())
            empty.push_back(p.scene_id);
    }
    if (!empty.empty()) {
        std::string list;
        for (const auto& id : empty) list += (list.empty() ? "" : ", ") + id;
        throw ValidationError("scenes without ground truth: " + list);
    }

    std::map<std::string, Tally> per_scene;
    Tally total;
    json rows = json::array();
    for (const auto& p : preds) {
        const RectMatch m = rect_match(p.grasp, gts[p.scene_id], cfg);
        auto& t = per_scene[p.scene_id];
        ++t.n;
        ++total.n;
        if (m.matched) {
            ++t.ok;
            ++total.ok;
        }
        rows.push_back(json{{"line", p.line},
                            {"scene_id", p.scene_id},
                            {"matched", m.matched},
                            {"matched_index", m.index ? json(*m.index) : json(nullptr)}});
    }
    fmt::print(out, "rectangle criterion (angle <= {}, IoU >= {})\n", format_double(cfg.angle_thresh),
               format_double(cfg.iou_thresh));
    fmt::print(out, "accuracy: {} ({}/{})\n", pct(total.ok, total.n), total.ok, total.n);
    print_per_scene(out, per_scene);
    write_report(a.report, json{{"criterion", "rectangle"},
                                {"angle_thresh", cfg.angle_thresh},
                                {"iou_thresh", cfg.iou_thresh},
                                {"predictions", total.n},
                                {"matched", total.ok},
                                {"accuracy", ratio(total.ok, total.n)},
                                {"scenes", per_scene_json(per_scene)},
                                {"results", rows}});
    return kExitOk;
}

int cmd_eval_sgt(const EvalArgs& a, std::ostream& out) {
    const auto preds = read_predictions(a.pred);
    if (preds.empty()) throw ValidationError(a.pred + ": no predictions");
    const Dataset ds = read_dataset(a.dataset);
    check_scene_ids(preds, ds, a.pred);
    const GripperConfig& gripper = ds.manifest.config.gripper;

    std::map<std::string, Tally> per_scene;
    std::map<std::string, std::size_t> histogram;
    for (auto r : kAllFailureReasons) histogram[std::string(to_string(r))] = 0;
    Tally total;
    json rows = json::array();
    for (const auto& p : preds) {
        const Scene& scene = ds.find(p.scene_id)->scene;
        const auto jaw = gripper.match_jaw_size(p.grasp.jaw_size() * scene.camera.resolution);
        if (!jaw)
            throw ParseError(a.pred, p.line,
                             fmt::format("jaw size {} px is not a gripper jaw size", format_double(p.grasp.jaw_size())));
        TrialOutcome o;
        try {
            o = simulate_grasp(scene, p.grasp, *jaw, gripper);
        } catch (const ValidationError& e) {
            throw ParseError(a.pred, p.line, e.what());
        }
        auto& t = per_scene[p.scene_id];
        ++t.n;
        ++total.n;
        if (o.success) {
            ++t.ok;
            ++total.ok;
        } else {
            ++histogram[std::string(to_string(*o.failure))];
        }
        rows.push_back(json{{"line", p.line},
                            {"scene_id", p.scene_id},
                            {"success", o.success},
                            {"failure_reason", o.failure ? json(std::string(to_string(*o.failure))) : json(nullptr)}});
    }
    fmt::print(out, "simulated grasp trials\n");
    fmt::print(out, "accuracy: {} ({}/{})\n", pct(total.ok, total.n), total.ok, total.n);
    fmt::print(out, "failures:\n");
    for (const auto& [reason, n] : histogram) fmt::print(out, "  {:<24} {}\n", reason, n);
    fmt::print(out, "per scene:\n");
    print_per_scene(out, per_scene);
    write_report(a.report, json{{"criterion", "sgt"},
                                {"predictions", total.n},
                                {"successes", total.ok},
                                {"accuracy", ratio(total.ok, total.n)},
                                {"failures", histogram},
                                {"scenes", per_scene_json(per_scene)},
                                {"results", rows}});
    return kExitOk;
}

struct OverlayArgs {
    std::string scene;
    std::string out;
    std::string pred;
};

int cmd_render_overlay(const OverlayArgs& a, std::ostream& out) {
    const Scene scene = read_scene(a.scene);
    GraspSet gt;
    const fs::path grasps = fs::path(a.scene) / "grasps.txt";
    if (fs::exists(grasps)) gt = parse_grasp_lines(read_text_file(grasps), grasps.string());
    GraspSet preds;
    if (!a.pred.empty()) {
        for (const auto& p : read_predictions(a.pred))
            if (p.scene_id == scene.scene_id) preds.push_back(p.grasp);
    }
    write_overlay(a.out, scene, gt, preds);
    fmt::print(out, "{}: {} annotation rectangles, {} predictions\n", a.out, gt.size(), preds.size());
    return kExitOk;
}

struct ServeArgs {
    std::string dataset;
    std::string addr = "127.0.0.1:8080";
    std::string log = "submissions.jsonl";
};

std::pair<std::string, int> parse_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ValidationError("--addr must be HOST:PORT, got '" + addr + "'");
    const std::string host = addr.substr(0, colon);
    std::int64_t port = 0;
    try {
        port = parse_int(addr.substr(colon + 1), "--addr", 0, "port");
    } catch (const ParseError&) {
        throw ValidationError("--addr port must be an integer, got '" + addr + "'");
    }
    if (port < 0 || port > 65535) throw ValidationError("--addr port out of range");
    return {host, static_cast<int>(port)};
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    const auto [host, port] = parse_addr(a.addr);
    EvalService service(read_dataset(a.dataset), a.log);
    HttpServer server(service);
    const int bound = server.bind(host, port);
    fmt::print(out, "serving {} scenes on http://{}:{}/api/v1 (log {})\n", service.scene_ids().size(), host, bound,
               a.log);
    out.flush();
    server.run();
    return kExitOk;
}

int cmd_fixtures(const std::string& dir, double resolution, std::ostream& out) {
    const auto pool = fixtures::standard_pool(resolution);
    for (const auto& m : pool) write_heightmap(m, dir);
    fmt::print(out, "wrote {} objects to {}\n", pool.size(), dir);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic grasp dataset generation and evaluation", "grasp-synth"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate an annotated dataset from a directory of heightmap objects");
    g->add_option("--objects", gen.objects, "Directory of <id>.meta/<id>.hgt objects")->required();
    g->add_option("--out", gen.out, "Output dataset directory")->required();
    g->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    g->add_option("--scenes-per-object", gen.scenes_per_object, "Scenes per object")
        ->check(CLI::Range(1, kMaxScenesPerObject))
        ->capture_default_str();
    g->add_option("--candidates", gen.candidates, "Sampled candidates per scene")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    g->add_option("--workers", gen.workers, "Parallel scene jobs (output does not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    g->add_flag("--dump-maps", gen.dump_maps, "Also write each scene's sampling map to <out>/maps/");

    EvalArgs rect;
    auto* er = app.add_subcommand("eval-rect", "Score predictions with the rectangle criterion");
    er->add_option("--pred", rect.pred, "Predictions file (scene_id;x;y;theta;opening;jaw_size)")->required();
    er->add_option("--dataset", rect.dataset, "Dataset directory")->envname(kDatasetEnv)->required();
    er->add_option("--angle-thresh", rect.angle_thresh, "Maximum orientation difference, degrees")
        ->capture_default_str();
    er->add_option("--iou-thresh", rect.iou_thresh, "Minimum intersection over union")->capture_default_str();
    er->add_option("--report", rect.report, "Write a JSON report to this file");

    EvalArgs sgt;
    auto* es = app.add_subcommand("eval-sgt", "Score predictions with simulated grasp trials");
    es->add_option("--pred", sgt.pred, "Predictions file (scene_id;x;y;theta;opening;jaw_size)")->required();
    es->add_option("--dataset", sgt.dataset, "Dataset directory")->envname(kDatasetEnv)->required();
    es->add_option("--report", sgt.report, "Write a JSON report to this file");

    OverlayArgs ov;
    auto* ro = app.add_subcommand("render-overlay", "Draw annotation and prediction rectangles over a scene (PPM)");
    ro->add_option("--scene", ov.scene, "Scene directory")->required();
    ro->add_option("--out", ov.out, "Output image (.ppm)")->required();
    ro->add_option("--pred", ov.pred, "Predictions file; rows for this scene are drawn");

    ServeArgs sv;
    auto* se = app.add_subcommand("serve", "Run the HTTP evaluation service");
    se->add_option("--dataset", sv.dataset, "Dataset directory")->envname(kDatasetEnv)->required();
    se->add_option("--addr", sv.addr, "Listen address HOST:PORT")->capture_default_str();
    se->add_option("--log", sv.log, "Submission log (newline-delimited JSON)")->capture_default_str();

    std::string fixture_dir;
    double fixture_res = 0.002;
    auto* fx = app.add_subcommand("fixtures", "Write the built-in object pool as heightmap files");
    fx->add_option("--out", fixture_dir, "Output directory")->required();
    fx->add_option("--resolution", fixture_res, "Cell size, m")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitValidation;
    }

    try {
        if (*g) return cmd_generate(gen, out, err);
        if (*er) return cmd_eval_rect(rect, out);
        if (*es) return cmd_eval_sgt(sgt, out);
        if (*ro) return cmd_render_overlay(ov, out);
        if (*se) return cmd_serve(sv, out);
        if (*fx) return cmd_fixtures(fixture_dir, fixture_res, out);
    } catch (const ValidationError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitValidation;
    } catch (const NotFoundError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitRuntime;
    }
    return kExitRuntime;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace graspsynth
