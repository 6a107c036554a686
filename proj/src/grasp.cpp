#include "graspsynth/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <fmt/core.h>

#include "graspsynth/error.hpp"

namespace graspsynth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double cross(Point2 o, Point2 a, Point2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double normalize_angle(double degrees) {
    double t = std::fmod(degrees, 180.0);
    if (t <= -90.0) t += 180.0;
    if (t > 90.0) t -= 180.0;
    return t;
}

double angle_diff(double a_deg, double b_deg) {
    double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
    return std::min(d, 180.0 - d);
}

Grasp::Grasp(double x, double y, double opening, double jaw_size, double theta_deg)
    : x_(x), y_(y), opening_(opening), jaw_size_(jaw_size), theta_(0.0) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(opening) ||
        !std::isfinite(jaw_size) || !std::isfinite(theta_deg)) {
        throw ValidationError("grasp has a non-finite component");
    }
    if (opening <= 0.0) throw ValidationError(fmt::format("grasp opening must be > 0, got {}", opening));
    if (jaw_size <= 0.0) throw ValidationError(fmt::format("grasp jaw size must be > 0, got {}", jaw_size));
    theta_ = normalize_angle(theta_deg);
}

Point2 Grasp::axis() const noexcept {
    const double t = theta_ * kDegToRad;
    return {std::cos(t), -std::sin(t)};
}

Point2 Grasp::jaw_direction() const noexcept {
    const double t = theta_ * kDegToRad;
    return {std::sin(t), std::cos(t)};
}

Grasp Grasp::translated(double dx, double dy) const {
    return Grasp(x_ + dx, y_ + dy, opening_, jaw_size_, theta_);
}

Grasp Grasp::with_jaw_size(double jaw_size) const {
    return Grasp(x_, y_, opening_, jaw_size, theta_);
}

std::array<Point2, 4> rect_corners(const Grasp& g) {
    const Point2 c = g.center();
    const Point2 a = (g.opening() / 2.0) * g.axis();
    const Point2 n = (g.jaw_size() / 2.0) * g.jaw_direction();
    return {c - a - n, c + a - n, c + a + n, c - a + n};
}

double polygon_area(std::span<const Point2> poly) {
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        twice += p.x * q.y - q.x * p.y;
    }
    return twice / 2.0;
}

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip) {
    std::vector<Point2> out(subject.begin(), subject.end());
    for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
        const Point2 a = clip[i];
        const Point2 b = clip[(i + 1) % clip.size()];
        std::vector<Point2> in;
        in.swap(out);
        for (std::size_t j = 0; j < in.size(); ++j) {
            const Point2 p = in[j];
            const Point2 q = in[(j + 1) % in.size()];
            const double sp = cross(a, b, p);
            const double sq = cross(a, b, q);
            const bool p_in = sp >= 0.0;
            const bool q_in = sq >= 0.0;
            if (p_in) out.push_back(p);
            if (p_in != q_in) {
                const double t = sp / (sp - sq);
                out.push_back(p + t * (q - p));
            }
        }
    }
    return out;
}

double iou(const Grasp& a, const Grasp& b) {
    const auto ra = rect_corners(a);
    const auto rb = rect_corners(b);
    const double area_a = a.opening() * a.jaw_size();
    const double area_b = b.opening() * b.jaw_size();
    const auto inter_poly = clip_convex(ra, rb);
    const double inter = inter_poly.size() < 3 ? 0.0 : std::max(0.0, polygon_area(inter_poly));
    const double uni = area_a + area_b - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

void RectCriterionConfig::validate() const {
    if (!(angle_thresh > 0.0 && angle_thresh <= 90.0)) {
        throw ValidationError(fmt::format("angle_thresh must be in (0, 90], got {}", angle_thresh));
    }
    if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) {
        throw ValidationError(fmt::format("iou_thresh must be in (0, 1], got {}", iou_thresh));
    }
}

RectMatch rect_match(const Grasp& pred, std::span<const Grasp> gt, const RectCriterionConfig& cfg) {
    cfg.validate();
    if (gt.empty()) throw ValidationError("empty ground-truth set: annotation data is unusable");
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (angle_diff(pred.theta(), gt[i].theta()) <= cfg.angle_thresh &&
            iou(pred, gt[i]) >= cfg.iou_thresh) {
            return {true, i};
        }
    }
    return {};
}

double min_grasp_distance(const Grasp& pred, std::span<const Grasp> gt) {
    if (gt.empty()) throw ValidationError("empty ground-truth set");
    double best = std::numeric_limits<double>::infinity();
    for (const Grasp& g : gt) {
        const double dx = g.x() - pred.x();
        const double dy = g.y() - pred.y();
        const double dh = g.jaw_size() - pred.jaw_size();
        const double dw = g.opening() - pred.opening();
        const double dt = g.theta() - pred.theta();
        best = std::min(best, dx * dx + dy * dy + dh * dh + dw * dw + dt * dt);
    }
    return best;
}

double batch_accuracy(std::span<const ScenePrediction> preds,
                      const std::map<std::string, GraspSet>& gts, const RectCriterionConfig& cfg) {
    if (preds.empty()) throw ValidationError("accuracy is undefined for an empty prediction list");
    std::set<std::string> unknown;
    for (const auto& p : preds) {
        if (!gts.contains(p.scene_id)) unknown.insert(p.scene_id);
    }
    if (!unknown.empty()) {
        std::string ids;
        for (const auto& id : unknown) ids += (ids.empty() ? "" : ", ") + id;
        throw ValidationError("predictions reference scenes without ground truth: " + ids);
    }
    std::size_t hits = 0;
    for (const auto& p : preds) {
        if (rect_match(p.grasp, gts.at(p.scene_id), cfg).matched) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace graspsynth
