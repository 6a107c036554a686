#include "graspsynth/fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace graspsynth::fixtures {

namespace {

constexpr std::size_t kMargin = 2;

// Samples `height(X, Y)` at the cell centers of a grid spanning span_x by span_y
// (plus margin), with the object frame centered on the grid.
template <typename F>
ObjectModel paint(std::string id, double span_x, double span_y, double resolution, F height) {
    const auto nx = static_cast<std::size_t>(std::lround(span_x / resolution));
    const auto ny = static_cast<std::size_t>(std::lround(span_y / resolution));
    Grid<double> g(ny + 2 * kMargin, nx + 2 * kMargin, 0.0);
    const double half_c = static_cast<double>(g.cols()) / 2.0;
    const double half_r = static_cast<double>(g.rows()) / 2.0;
    for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) {
            const double x = (static_cast<double>(c) + 0.5 - half_c) * resolution;
            const double y = (half_r - static_cast<double>(r) - 0.5) * resolution;
            g(r, c) = std::max(0.0, height(x, y));
        }
    }
    return make_object(std::move(id), std::move(g), resolution);
}

}  // namespace

ObjectModel box(std::string id, double size_x, double size_y, double height, double resolution) {
    return paint(std::move(id), size_x, size_y, resolution, [=](double x, double y) {
        return std::abs(x) < size_x / 2 && std::abs(y) < size_y / 2 ? height : 0.0;
    });
}

ObjectModel plate(std::string id, double size_x, double size_y, double thickness, double resolution) {
    return box(std::move(id), size_x, size_y, thickness, resolution);
}

ObjectModel l_shape(std::string id, double arm_x, double arm_y, double arm_width, double height, double resolution) {
    return paint(std::move(id), arm_x, arm_y, resolution, [=](double x, double y) {
        if (std::abs(x) >= arm_x / 2 || std::abs(y) >= arm_y / 2) return 0.0;
        return x < -arm_x / 2 + arm_width || y < -arm_y / 2 + arm_width ? height : 0.0;
    });
}

ObjectModel t_shape(std::string id, double bar, double stem, double width, double height, double resolution) {
    const double span_y = width + stem;
    return paint(std::move(id), bar, span_y, resolution, [=](double x, double y) {
        if (std::abs(x) >= bar / 2 || std::abs(y) >= span_y / 2) return 0.0;
        return y > span_y / 2 - width || std::abs(x) < width / 2 ? height : 0.0;
    });
}

ObjectModel cylinder_upright(std::string id, double radius, double height, double resolution) {
    return paint(std::move(id), 2 * radius, 2 * radius, resolution,
                 [=](double x, double y) { return std::hypot(x, y) < radius ? height : 0.0; });
}

ObjectModel cylinder_lying(std::string id, double radius, double length, double resolution) {
    return paint(std::move(id), length, 2 * radius, resolution, [=](double x, double y) {
        if (std::abs(x) >= length / 2 || std::abs(y) >= radius) return 0.0;
        return radius + std::sqrt(radius * radius - y * y);
    });
}

ObjectModel ring(std::string id, double outer_radius, double inner_radius, double height, double resolution) {
    return paint(std::move(id), 2 * outer_radius, 2 * outer_radius, resolution, [=](double x, double y) {
        const double d = std::hypot(x, y);
        return d < outer_radius && d >= inner_radius ? height : 0.0;
    });
}

ObjectModel slotted_clamp(std::string id, double slot_width, double resolution) {
    constexpr double bar_half = 0.010;
    constexpr double block_inner = 0.012;
    constexpr double block_outer = 0.040;
    constexpr double half_len = 0.030;
    constexpr double height = 0.040;
    return paint(std::move(id), 2 * block_outer, 2 * half_len, resolution, [=](double x, double y) {
        if (std::abs(y) >= half_len) return 0.0;
        if (std::abs(x) < bar_half) return height;
        const bool in_block = std::abs(x) >= block_inner && std::abs(x) < block_outer;
        return in_block && std::abs(y) >= slot_width / 2 ? height : 0.0;
    });
}

std::vector<ObjectModel> standard_pool(double res) {
    std::vector<ObjectModel> pool;
    pool.push_back(box("box_cube", 0.05, 0.05, 0.05, res));
    pool.push_back(box("box_flat", 0.08, 0.04, 0.02, res));
    pool.push_back(box("box_long", 0.20, 0.03, 0.03, res));
    pool.push_back(box("box_tall", 0.04, 0.04, 0.15, res));
    pool.push_back(box("box_brick", 0.10, 0.05, 0.06, res));
    pool.push_back(box("box_thin", 0.12, 0.016, 0.05, res));
    pool.push_back(box("box_small", 0.03, 0.02, 0.02, res));
    pool.push_back(l_shape("l_small", 0.08, 0.06, 0.02, 0.03, res));
    pool.push_back(l_shape("l_large", 0.15, 0.10, 0.03, 0.04, res));
    pool.push_back(l_shape("l_thin", 0.10, 0.10, 0.012, 0.02, res));
    pool.push_back(t_shape("t_small", 0.10, 0.06, 0.02, 0.03, res));
    pool.push_back(t_shape("t_wide", 0.14, 0.08, 0.03, 0.02, res));
    pool.push_back(cylinder_upright("cyl_can", 0.03, 0.10, res));
    pool.push_back(cylinder_upright("cyl_puck", 0.04, 0.015, res));
    pool.push_back(cylinder_upright("cyl_pin", 0.008, 0.08, res));
    pool.push_back(cylinder_lying("rod", 0.008, 0.20, res));
    pool.push_back(cylinder_lying("log", 0.025, 0.15, res));
    pool.push_back(ring("ring", 0.05, 0.04, 0.02, res));
    pool.push_back(plate("plate_wide", 0.30, 0.30, 0.005, res));
    pool.push_back(plate("plate_narrow", 0.20, 0.04, 0.01, res));
    pool.push_back(plate("plate_square", 0.12, 0.12, 0.01, res));
    pool.push_back(slotted_clamp("clamp", 0.012, res));
    return pool;
}

}  // namespace graspsynth::fixtures
