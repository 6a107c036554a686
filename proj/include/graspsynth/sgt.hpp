#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "graspsynth/grasp.hpp"
#include "graspsynth/scene.hpp"

namespace graspsynth {

inline constexpr double kGravity = 9.81;  // m/s^2

/// Parallel-jaw gripper used by the simulated grasp trial. Lengths in meters.
struct GripperConfig {
    double max_opening = 0.10;
    std::vector<double> jaw_sizes{0.01, 0.02, 0.03, 0.04, 0.06};
    double screening_jaw_size = 0.02;
    double jaw_thickness = 0.005;
    double insertion_depth = 0.01;
    double friction_mu = 0.5;
    double grip_force = 40.0;  // N per jaw
    double lift_safety_factor = 1.2;
    double max_approach_tilt = 30.0;  // degrees from vertical

    void validate() const;
    /// The configured jaw size equal to `meters` within 1e-6 relative, if any.
    std::optional<double> match_jaw_size(double meters) const;
    double friction_cone_half_angle() const;  // degrees

    friend bool operator==(const GripperConfig&, const GripperConfig&) = default;
};

enum class FailureReason {
    ApproachCollision,
    NoContact,
    SingleSideContact,
    FrictionConeViolation,
    PayloadExceeded,
    OpeningExceeded,
};

inline constexpr std::array<FailureReason, 6> kAllFailureReasons{
    FailureReason::ApproachCollision,     FailureReason::NoContact,       FailureReason::SingleSideContact,
    FailureReason::FrictionConeViolation, FailureReason::PayloadExceeded, FailureReason::OpeningExceeded,
};

std::string_view to_string(FailureReason r);
std::optional<FailureReason> failure_reason_from_string(std::string_view s);

struct JawContact {
    std::vector<std::pair<int, int>> cells;  // (row, col) of first-contact cells
    std::array<double, 3> normal{0, 0, 0};   // unit surface normal, pixel frame (col, row, up)
    double travel = 0.0;                     // closing travel until contact, m
    double cone_angle = 0.0;                 // degrees between normal and the jaw's closing direction
};

struct TrialOutcome {
    bool success = false;
    std::optional<FailureReason> failure;
    double grasp_plane = 0.0;  // z of the jaw tips, m
    std::optional<JawContact> jaw_a;  // jaw on the +axis side
    std::optional<JawContact> jaw_b;

    friend bool operator==(const TrialOutcome& a, const TrialOutcome& b) {
        return a.success == b.success && a.failure == b.failure;
    }
};

/**
 * Quasi-static simulated grasp trial.
 *
 * The grasp is in image pixels (scene.camera.resolution m/px); `jaw_size` is
 * in meters and must be one of `gripper.jaw_sizes`. Stages, first failure wins:
 *   0. opening above the gripper maximum -> OpeningExceeded
 *   1. approach along the surface normal at the center (only near-vertical
 *      normals are accepted); the open jaws descend to
 *      z = max(0, height(center) - insertion_depth) and must not meet material
 *      on the way -> ApproachCollision
 *   2. both jaws close toward the center; the first slice holding material
 *      above the grasp plane is the contact -> NoContact / SingleSideContact
 *   3. each contact normal (mean heightmap gradient over the contact cells)
 *      must lie within atan(mu) of that jaw's closing axis -> FrictionConeViolation
 *   4. friction must carry the weight: 2 mu F >= safety * m g -> PayloadExceeded
 *
 * Throws ValidationError for a jaw size outside the configuration or a grasp
 * center outside the image.
 */
TrialOutcome simulate_grasp(const Scene& scene, const Grasp& grasp, double jaw_size,
                            const GripperConfig& gripper = {});

/// Jaw sizes (ascending) for which simulate_grasp succeeds. Each size is tried independently.
std::vector<double> trial_all_jaw_sizes(const Scene& scene, const Grasp& grasp,
                                        const GripperConfig& gripper = {});

}  // namespace graspsynth
