#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graspsynth {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Wraps an angle in degrees into (-90, 90]. A parallel-jaw grasp is symmetric
/// under a half turn, so this is the canonical range for grasp orientation.
double normalize_angle(double degrees);

/// Minimum absolute difference between two grasp orientations modulo 180 degrees.
/// Result lies in [0, 90].
double angle_diff(double a_deg, double b_deg);

/**
 * Five-parameter grasp rectangle in image coordinates.
 *
 * (x, y) is the rectangle center in pixels, `opening` (w) the distance between
 * the jaw inner faces and `jaw_size` (h) the length of the jaw plates. `theta`
 * is the direction of the closing axis in degrees, counterclockwise from the
 * image x-axis as seen on screen (image y points down), normalized into
 * (-90, 90]. The constructor rejects non-finite values and zero or negative
 * sizes.
 */
class Grasp {
public:
    Grasp(double x, double y, double opening, double jaw_size, double theta_deg);

    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }
    double opening() const noexcept { return opening_; }
    double jaw_size() const noexcept { return jaw_size_; }
    double theta() const noexcept { return theta_; }
    Point2 center() const noexcept { return {x_, y_}; }

    /// Unit vector of the closing axis in pixel coordinates.
    Point2 axis() const noexcept;
    /// Unit vector along the jaw plates (perpendicular to the axis).
    Point2 jaw_direction() const noexcept;

    Grasp translated(double dx, double dy) const;
    Grasp with_jaw_size(double jaw_size) const;

    friend bool operator==(const Grasp&, const Grasp&) = default;

private:
    double x_;
    double y_;
    double opening_;
    double jaw_size_;
    double theta_;
};

/// Corners in counterclockwise order (positive shoelace area in the coordinate
/// tuple). Edges 0-1 and 2-3 have length `opening`; edges 1-2 and 3-0 have
/// length `jaw_size` and are the jaw sides.
std::array<Point2, 4> rect_corners(const Grasp& g);

/// Intersection of two convex polygons given counterclockwise (Sutherland-Hodgman).
std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip);

/// Signed shoelace area; positive for counterclockwise input.
double polygon_area(std::span<const Point2> poly);

/// Exact intersection-over-union of two grasp rectangles.
double iou(const Grasp& a, const Grasp& b);

struct RectCriterionConfig {
    double angle_thresh = 30.0;  // degrees
    double iou_thresh = 0.25;

    /// Throws ValidationError unless angle_thresh in (0, 90] and iou_thresh in (0, 1].
    void validate() const;
};

/// Ordered ground-truth rectangles of one scene.
using GraspSet = std::vector<Grasp>;

struct RectMatch {
    bool matched = false;
    std::optional<std::size_t> index;
};

/// First ground-truth rectangle (in set order) within both thresholds.
/// Throws ValidationError on an empty ground-truth set.
RectMatch rect_match(const Grasp& pred, std::span<const Grasp> gt,
                     const RectCriterionConfig& cfg = {});

/// min over gt of the squared norm of the raw 5-vector difference
/// (x, y, jaw_size, opening, theta) with theta in degrees. Diagnostic only.
double min_grasp_distance(const Grasp& pred, std::span<const Grasp> gt);

struct ScenePrediction {
    std::string scene_id;
    Grasp grasp;
};

/// Fraction of predictions matching their scene's ground truth under the
/// rectangle criterion. Throws on an empty prediction list and on predictions
/// whose scene has no ground truth (message lists every offending id).
double batch_accuracy(std::span<const ScenePrediction> preds,
                      const std::map<std::string, GraspSet>& gts,
                      const RectCriterionConfig& cfg = {});

}  // namespace graspsynth
