#include "graspsynth/overlay.hpp"

#include <algorithm>
#include <cmath>

namespace graspsynth {

namespace {

void plot(Grid<Rgb>& img, long r, long c, const Rgb& color) {
    if (img.contains(r, c)) img(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = color;
}

// Bresenham between rounded endpoints; `thick` also paints the 4-neighbours.
void line(Grid<Rgb>& img, Point2 a, Point2 b, const Rgb& color, bool thick) {
    long x0 = std::lround(std::floor(a.x)), y0 = std::lround(std::floor(a.y));
    const long x1 = std::lround(std::floor(b.x)), y1 = std::lround(std::floor(b.y));
    const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    for (;;) {
        plot(img, y0, x0, color);
        if (thick) {
            plot(img, y0 + 1, x0, color);
            plot(img, y0, x0 + 1, color);
        }
        if (x0 == x1 && y0 == y1) break;
        const long e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

void draw_rectangle(Grid<Rgb>& img, const Grasp& g, const OverlayStyle& style) {
    const auto c = rect_corners(g);
    line(img, c[0], c[1], style.opening_side, false);
    line(img, c[2], c[3], style.opening_side, false);
    line(img, c[1], c[2], style.jaw_side, true);
    line(img, c[3], c[0], style.jaw_side, true);
}

Grid<Rgb> render_overlay(const Scene& scene, const GraspSet& annotations, const GraspSet& predictions) {
    const auto& h = scene.heights;
    double top = 0.0;
    for (std::size_t r = 0; r < h.rows(); ++r)
        for (std::size_t c = 0; c < h.cols(); ++c) top = std::max(top, h(r, c));
    Grid<Rgb> img(h.rows(), h.cols());
    for (std::size_t r = 0; r < h.rows(); ++r)
        for (std::size_t c = 0; c < h.cols(); ++c) {
            const double t = top > 0 ? h(r, c) / top : 0.0;
            const auto v = static_cast<std::uint8_t>(std::lround(40.0 + 215.0 * std::clamp(t, 0.0, 1.0)));
            img(r, c) = Rgb{v, v, v};
        }
    for (const auto& g : annotations) draw_rectangle(img, g, kAnnotationStyle);
    for (const auto& g : predictions) draw_rectangle(img, g, kPredictionStyle);
    return img;
}

void write_overlay(const std::filesystem::path& path, const Scene& scene, const GraspSet& annotations,
                   const GraspSet& predictions) {
    write_ppm(path, render_overlay(scene, annotations, predictions));
}

}  // namespace graspsynth
