#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "graspsynth/error.hpp"
#include "graspsynth/fixtures.hpp"
#include "graspsynth/grasp.hpp"
#include "graspsynth/pipeline.hpp"
#include "graspsynth/scene.hpp"
#include "graspsynth/sgt.hpp"

namespace py = pybind11;
using namespace graspsynth;

namespace {

py::object failure_obj(const std::optional<FailureReason>& f) {
    if (!f) return py::none();
    return py::str(std::string(to_string(*f)));
}

py::array_t<double> heights_array(const Scene& s) {
    py::array_t<double> a({s.heights.rows(), s.heights.cols()});
    std::copy(s.heights.data().begin(), s.heights.data().end(), a.mutable_data());
    return a;
}

}  // namespace

PYBIND11_MODULE(_graspsynth, m) {
    m.doc() = "Synthetic grasp dataset generation and simulated grasp trials";
    m.attr("__version__") = kToolVersion;

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_KeyError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Grasp>(m, "Grasp")
        .def(py::init<double, double, double, double, double>(), py::arg("x"), py::arg("y"), py::arg("opening"),
             py::arg("jaw_size"), py::arg("theta"))
        .def_property_readonly("x", &Grasp::x)
        .def_property_readonly("y", &Grasp::y)
        .def_property_readonly("opening", &Grasp::opening)
        .def_property_readonly("jaw_size", &Grasp::jaw_size)
        .def_property_readonly("theta", &Grasp::theta)
        .def("corners",
             [](const Grasp& g) {
                 std::vector<std::pair<double, double>> out;
                 for (const auto& p : rect_corners(g)) out.emplace_back(p.x, p.y);
                 return out;
             })
        .def(py::self == py::self)
        .def("__repr__", [](const Grasp& g) {
            return py::str("Grasp(x={}, y={}, opening={}, jaw_size={}, theta={})")
                .format(g.x(), g.y(), g.opening(), g.jaw_size(), g.theta());
        });

    m.def("normalize_angle", &normalize_angle, py::arg("degrees"));
    m.def("angle_diff", &angle_diff, py::arg("a"), py::arg("b"));
    m.def("iou", &iou, py::arg("a"), py::arg("b"));
    m.def(
        "rect_match",
        [](const Grasp& pred, const std::vector<Grasp>& gt, double angle_thresh, double iou_thresh) {
            const RectCriterionConfig cfg{angle_thresh, iou_thresh};
            cfg.validate();
            const RectMatch r = rect_match(pred, gt, cfg);
            return std::make_pair(r.matched, r.index);
        },
        py::arg("pred"), py::arg("gt"), py::arg("angle_thresh") = 30.0, py::arg("iou_thresh") = 0.25,
        "Returns (matched, index of the first matching ground-truth rectangle or None).");

    py::class_<GripperConfig>(m, "GripperConfig")
        .def(py::init<>())
        .def_readwrite("max_opening", &GripperConfig::max_opening)
        .def_readwrite("jaw_sizes", &GripperConfig::jaw_sizes)
        .def_readwrite("screening_jaw_size", &GripperConfig::screening_jaw_size)
        .def_readwrite("jaw_thickness", &GripperConfig::jaw_thickness)
        .def_readwrite("insertion_depth", &GripperConfig::insertion_depth)
        .def_readwrite("friction_mu", &GripperConfig::friction_mu)
        .def_readwrite("grip_force", &GripperConfig::grip_force)
        .def_readwrite("lift_safety_factor", &GripperConfig::lift_safety_factor)
        .def_readwrite("max_approach_tilt", &GripperConfig::max_approach_tilt)
        .def("validate", &GripperConfig::validate);

    py::class_<Scene>(m, "Scene")
        .def_readonly("scene_id", &Scene::scene_id)
        .def_readonly("object_id", &Scene::object_id)
        .def_readonly("longest_side", &Scene::longest_side)
        .def_readonly("mass", &Scene::mass)
        .def_readonly("seed", &Scene::seed)
        .def_property_readonly("resolution", [](const Scene& s) { return s.camera.resolution; })
        .def_property_readonly("shape", [](const Scene& s) { return std::make_pair(s.heights.rows(), s.heights.cols()); })
        .def_property_readonly("heights", &heights_array, "Height above the table in meters, shape (rows, cols).")
        .def("height_at", &Scene::height_at, py::arg("px"), py::arg("py"));

    m.def("read_scene", &read_scene, py::arg("dir"));

    py::class_<TrialOutcome>(m, "TrialOutcome")
        .def_readonly("success", &TrialOutcome::success)
        .def_property_readonly("failure_reason", [](const TrialOutcome& o) { return failure_obj(o.failure); })
        .def_readonly("grasp_plane", &TrialOutcome::grasp_plane)
        .def("__repr__", [](const TrialOutcome& o) {
            return py::str("TrialOutcome(success={}, failure_reason={})").format(o.success, failure_obj(o.failure));
        });

    m.def("simulate_grasp", &simulate_grasp, py::arg("scene"), py::arg("grasp"), py::arg("jaw_size"),
          py::arg("gripper") = GripperConfig{}, py::call_guard<py::gil_scoped_release>(),
          "Simulated grasp trial; grasp in pixels and degrees, jaw_size in meters.");
    m.def("trial_all_jaw_sizes", &trial_all_jaw_sizes, py::arg("scene"), py::arg("grasp"),
          py::arg("gripper") = GripperConfig{}, py::call_guard<py::gil_scoped_release>());

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("root", [](const Dataset& d) { return d.root; })
        .def_property_readonly("scene_ids",
                               [](const Dataset& d) {
                                   std::vector<std::string> ids;
                                   for (const auto& s : d.scenes) ids.push_back(s.record.scene_id);
                                   return ids;
                               })
        .def_property_readonly("gripper", [](const Dataset& d) { return d.manifest.config.gripper; })
        .def(
            "scene",
            [](const Dataset& d, const std::string& id) -> const Scene& {
                const auto* s = d.find(id);
                if (!s) throw NotFoundError("unknown scene '" + id + "'");
                return s->scene;
            },
            py::return_value_policy::reference_internal, py::arg("scene_id"))
        .def(
            "annotations",
            [](const Dataset& d, const std::string& id) {
                const auto* s = d.find(id);
                if (!s) throw NotFoundError("unknown scene '" + id + "'");
                std::vector<std::pair<Grasp, std::vector<double>>> out;
                for (const auto& e : s->annotations.entries) out.emplace_back(e.grasp, e.jaw_sizes);
                return out;
            },
            py::arg("scene_id"), "List of (grasp, jaw sizes in meters); the grasp carries the screening jaw in pixels.")
        .def(
            "rectangles",
            [](const Dataset& d, const std::string& id) {
                const auto* s = d.find(id);
                if (!s) throw NotFoundError("unknown scene '" + id + "'");
                return s->annotations.rectangles(s->scene.camera.resolution);
            },
            py::arg("scene_id"));

    m.def("read_dataset", &read_dataset, py::arg("dir"));
    m.def("dataset_digest", &dataset_digest, py::arg("dir"));

    m.def(
        "write_fixtures",
        [](const std::filesystem::path& dir, double resolution) {
            const auto pool = fixtures::standard_pool(resolution);
            for (const auto& o : pool) write_heightmap(o, dir);
            return pool.size();
        },
        py::arg("dir"), py::arg("resolution") = 0.002);

    m.def(
        "generate",
        [](const std::filesystem::path& objects, const std::filesystem::path& out, std::uint64_t seed,
           int scenes_per_object, int candidates, int workers) {
            std::vector<ObjectFailure> failures;
            const auto pool = load_object_pool(objects, failures);
            GenerationConfig cfg;
            cfg.master_seed = seed;
            cfg.scenes_per_object = scenes_per_object;
            cfg.sampler.candidates = candidates;
            cfg.workers = workers;
            Manifest man;
            {
                py::gil_scoped_release release;
                man = generate_dataset(pool, cfg, out, failures);
            }
            py::dict r;
            std::vector<std::string> ids;
            std::size_t grasps = 0;
            for (const auto& s : man.scenes) {
                ids.push_back(s.scene_id);
                grasps += s.annotation_count;
            }
            std::vector<std::pair<std::string, std::string>> fails;
            for (const auto& f : man.failures) fails.emplace_back(f.object_id, f.message);
            r["scene_ids"] = ids;
            r["grasps"] = grasps;
            r["failures"] = fails;
            return r;
        },
        py::arg("objects"), py::arg("out"), py::arg("seed") = 0, py::arg("scenes_per_object") = kMaxScenesPerObject,
        py::arg("candidates") = 5000, py::arg("workers") = 1);
}
