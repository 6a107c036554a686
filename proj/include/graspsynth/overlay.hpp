#pragma once

#include <filesystem>

#include "graspsynth/grasp.hpp"
#include "graspsynth/grid.hpp"
#include "graspsynth/io.hpp"
#include "graspsynth/scene.hpp"

namespace graspsynth {

struct OverlayStyle {
    Rgb opening_side;
    Rgb jaw_side;  // drawn thicker and darker
};

inline constexpr OverlayStyle kAnnotationStyle{{230, 60, 60}, {110, 20, 120}};
inline constexpr OverlayStyle kPredictionStyle{{250, 220, 40}, {20, 150, 40}};

/// Height image in gray (table black, highest point white) with every
/// rectangle drawn on top; annotations first, then predictions.
Grid<Rgb> render_overlay(const Scene& scene, const GraspSet& annotations, const GraspSet& predictions = {});

void draw_rectangle(Grid<Rgb>& img, const Grasp& g, const OverlayStyle& style);

void write_overlay(const std::filesystem::path& path, const Scene& scene, const GraspSet& annotations,
                   const GraspSet& predictions = {});

}  // namespace graspsynth
