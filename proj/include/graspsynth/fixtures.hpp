#pragma once

#include <string>
#include <vector>

#include "graspsynth/scene.hpp"

// Analytic heightmap solids. Dimensions in meters; the solid is centered in
// its grid with a two-cell empty margin.
namespace graspsynth::fixtures {

ObjectModel box(std::string id, double size_x, double size_y, double height, double resolution);
ObjectModel plate(std::string id, double size_x, double size_y, double thickness, double resolution);
/// Two arms of width `arm_width` meeting at a right angle in the lower-left corner.
ObjectModel l_shape(std::string id, double arm_x, double arm_y, double arm_width, double height, double resolution);
/// Bar along x with a stem of the same width hanging off its middle.
ObjectModel t_shape(std::string id, double bar, double stem, double width, double height, double resolution);
ObjectModel cylinder_upright(std::string id, double radius, double height, double resolution);
/// Cylinder lying on the table with its axis along x.
ObjectModel cylinder_lying(std::string id, double radius, double length, double resolution);
ObjectModel ring(std::string id, double outer_radius, double inner_radius, double height, double resolution);

/// A 20 mm wide bar (along y) flanked by tall blocks that leave a slot of
/// `slot_width` on the bar's center line: only jaws shorter than the slot can
/// descend beside the bar.
ObjectModel slotted_clamp(std::string id, double slot_width, double resolution);

/// Mixed pool of boxes, L/T shapes, cylinders, rings and plates (>= 20 objects).
std::vector<ObjectModel> standard_pool(double resolution = 0.002);

}  // namespace graspsynth::fixtures
