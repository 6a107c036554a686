#include "graspsynth/sgt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "graspsynth/error.hpp"

namespace graspsynth {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kStepPx = 0.5;      // sampling pitch inside jaw volumes
constexpr double kEdgeEpsPx = 1e-6;  // keeps samples off exact cell borders
constexpr double kHeightEps = 1e-9;
// Depth of the surface layer used for contact normals. A rasterized wall is a
// staircase, so the first touched cells alone give a biased direction.
constexpr double kNormalBandPx = 2.0;

// Evenly spaced samples over [lo, hi] with pitch <= kStepPx.
std::vector<double> samples(double lo, double hi) {
    lo += kEdgeEpsPx;
    hi -= kEdgeEpsPx;
    if (hi <= lo) return {(lo + hi) / 2.0};
    const auto n = static_cast<int>(std::ceil((hi - lo) / kStepPx));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) out.push_back(lo + (hi - lo) * i / n);
    return out;
}

struct Frame {
    Point2 center;
    Point2 axis;
    Point2 jaw;

    Point2 at(double u, double v) const { return center + u * axis + v * jaw; }
};

std::pair<int, int> cell_of(Point2 p) {
    return {static_cast<int>(std::floor(p.y)), static_cast<int>(std::floor(p.x))};
}

// Heightmap gradient in the pixel frame, meters per meter.
std::array<double, 2> gradient(const Scene& s, int r, int c) {
    const double res = s.camera.resolution;
    const double gx = (s.height_at(c + 1.5, r + 0.5) - s.height_at(c - 0.5, r + 0.5)) / (2.0 * res);
    const double gy = (s.height_at(c + 0.5, r + 1.5) - s.height_at(c + 0.5, r - 0.5)) / (2.0 * res);
    return {gx, gy};
}

std::optional<JawContact> close_jaw(const Scene& scene, const Frame& f, double sign, double half_open_px,
                                    const std::vector<double>& v_samples, double plane) {
    const double res = scene.camera.resolution;
    for (int k = 0;; ++k) {
        const double u = half_open_px - kEdgeEpsPx - k * kStepPx;
        if (u < 0.0) return std::nullopt;
        JawContact contact;
        for (double v : v_samples) {
            const auto [r, c] = cell_of(f.at(sign * u, v));
            if (scene.height_at(c + 0.5, r + 0.5) <= plane + kHeightEps) continue;
            if (std::find(contact.cells.begin(), contact.cells.end(), std::pair{r, c}) == contact.cells.end()) {
                contact.cells.emplace_back(r, c);
            }
        }
        if (!contact.cells.empty()) {
            contact.travel = (half_open_px - u) * res;
            return contact;
        }
    }
}

// Mean heightmap gradient over the occupied cells within kNormalBandPx past the
// first contact at closing coordinate `u`. Cells without slope are skipped.
std::array<double, 2> band_gradient(const Scene& scene, const Frame& f, double sign, double u,
                                    const std::vector<double>& v_samples, double plane) {
    std::vector<std::pair<int, int>> seen;
    double gx = 0.0, gy = 0.0;
    int n = 0;
    for (double d = 0.0; d <= kNormalBandPx + 1e-9 && u - d >= 0.0; d += kStepPx) {
        for (double v : v_samples) {
            const auto [r, c] = cell_of(f.at(sign * (u - d), v));
            if (scene.height_at(c + 0.5, r + 0.5) <= plane + kHeightEps) continue;
            if (std::find(seen.begin(), seen.end(), std::pair{r, c}) != seen.end()) continue;
            seen.emplace_back(r, c);
            const auto g = gradient(scene, r, c);
            if (std::hypot(g[0], g[1]) <= kHeightEps) continue;
            gx += g[0];
            gy += g[1];
            ++n;
        }
    }
    if (n == 0) return {0.0, 0.0};
    return {gx / n, gy / n};
}

}  // namespace

void GripperConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(fmt::format("gripper {} must be positive", name));
    };
    positive(max_opening, "max_opening");
    positive(jaw_thickness, "jaw_thickness");
    positive(insertion_depth, "insertion_depth");
    positive(friction_mu, "friction_mu");
    positive(grip_force, "grip_force");
    positive(lift_safety_factor, "lift_safety_factor");
    positive(max_approach_tilt, "max_approach_tilt");
    if (jaw_sizes.empty()) throw ValidationError("gripper needs at least one jaw size");
    for (std::size_t i = 0; i < jaw_sizes.size(); ++i) {
        positive(jaw_sizes[i], "jaw size");
        if (i > 0 && jaw_sizes[i] <= jaw_sizes[i - 1]) {
            throw ValidationError("gripper jaw sizes must be sorted ascending without duplicates");
        }
    }
    if (!match_jaw_size(screening_jaw_size)) {
        throw ValidationError("screening jaw size must be one of the configured jaw sizes");
    }
}

std::optional<double> GripperConfig::match_jaw_size(double meters) const {
    for (double s : jaw_sizes) {
        if (std::abs(meters - s) <= 1e-6 * s) return s;
    }
    return std::nullopt;
}

double GripperConfig::friction_cone_half_angle() const { return std::atan(friction_mu) * kRadToDeg; }

std::string_view to_string(FailureReason r) {
    switch (r) {
        case FailureReason::ApproachCollision: return "approach-collision";
        case FailureReason::NoContact: return "no-contact";
        case FailureReason::SingleSideContact: return "single-side-contact";
        case FailureReason::FrictionConeViolation: return "friction-cone-violation";
        case FailureReason::PayloadExceeded: return "payload-exceeded";
        case FailureReason::OpeningExceeded: return "opening-exceeded";
    }
    return "unknown";
}

std::optional<FailureReason> failure_reason_from_string(std::string_view s) {
    for (auto r : kAllFailureReasons) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

TrialOutcome simulate_grasp(const Scene& scene, const Grasp& grasp, double jaw_size, const GripperConfig& gripper) {
    if (!gripper.match_jaw_size(jaw_size)) {
        throw ValidationError(fmt::format("jaw size {} m is not one of the gripper's jaw sizes", jaw_size));
    }
    const auto& cam = scene.camera;
    if (grasp.x() < 0.0 || grasp.y() < 0.0 || grasp.x() >= cam.cols || grasp.y() >= cam.rows) {
        throw ValidationError(fmt::format("grasp center ({}, {}) is outside the {}x{} image", grasp.x(), grasp.y(),
                                          cam.cols, cam.rows));
    }

    TrialOutcome out;
    auto fail = [&out](FailureReason r) {
        out.success = false;
        out.failure = r;
        return out;
    };

    const double res = cam.resolution;
    if (grasp.opening() * res > gripper.max_opening * (1.0 + 1e-12)) return fail(FailureReason::OpeningExceeded);

    // 1. approach
    const auto [cr, cc] = cell_of(grasp.center());
    const auto g0 = gradient(scene, cr, cc);
    const double tilt = std::atan(std::hypot(g0[0], g0[1])) * kRadToDeg;
    if (tilt > gripper.max_approach_tilt) return fail(FailureReason::ApproachCollision);

    const double plane = std::max(0.0, scene.height_at(grasp.x(), grasp.y()) - gripper.insertion_depth);
    out.grasp_plane = plane;

    const Frame frame{grasp.center(), grasp.axis(), grasp.jaw_direction()};
    const double half_open = grasp.opening() / 2.0;
    const double half_jaw = jaw_size / res / 2.0;
    const auto v_samples = samples(-half_jaw, half_jaw);
    const auto u_samples = samples(half_open, half_open + gripper.jaw_thickness / res);
    for (double sign : {1.0, -1.0}) {
        for (double u : u_samples) {
            for (double v : v_samples) {
                const auto [r, c] = cell_of(frame.at(sign * u, v));
                if (scene.height_at(c + 0.5, r + 0.5) > plane + kHeightEps) {
                    return fail(FailureReason::ApproachCollision);
                }
            }
        }
    }

    // 2. close
    out.jaw_a = close_jaw(scene, frame, 1.0, half_open, v_samples, plane);
    out.jaw_b = close_jaw(scene, frame, -1.0, half_open, v_samples, plane);
    if (!out.jaw_a && !out.jaw_b) return fail(FailureReason::NoContact);
    if (!out.jaw_a || !out.jaw_b) return fail(FailureReason::SingleSideContact);

    // 3. hold
    const double cone = gripper.friction_cone_half_angle();
    bool inside_cone = true;
    for (auto [contact, sign] : {std::pair{&*out.jaw_a, 1.0}, std::pair{&*out.jaw_b, -1.0}}) {
        const double u = half_open - contact->travel / res;
        const auto [gx, gy] = band_gradient(scene, frame, sign, u, v_samples, plane);
        const double norm = std::sqrt(gx * gx + gy * gy + 1.0);
        contact->normal = {-gx / norm, -gy / norm, 1.0 / norm};
        // The object's normal at this jaw should point back toward the jaw.
        const double cosang = sign * (contact->normal[0] * frame.axis.x + contact->normal[1] * frame.axis.y);
        contact->cone_angle = std::acos(std::clamp(cosang, -1.0, 1.0)) * kRadToDeg;
        inside_cone = inside_cone && contact->cone_angle <= cone;
    }
    if (!inside_cone) return fail(FailureReason::FrictionConeViolation);

    // 4. lift
    if (2.0 * gripper.friction_mu * gripper.grip_force < gripper.lift_safety_factor * scene.mass * kGravity) {
        return fail(FailureReason::PayloadExceeded);
    }

    out.success = true;
    out.failure.reset();
    return out;
}

std::vector<double> trial_all_jaw_sizes(const Scene& scene, const Grasp& grasp, const GripperConfig& gripper) {
    std::vector<double> passing;
    for (double s : gripper.jaw_sizes) {
        if (simulate_grasp(scene, grasp, s, gripper).success) passing.push_back(s);
    }
    return passing;
}

}  // namespace graspsynth
