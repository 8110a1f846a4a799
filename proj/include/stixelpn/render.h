#pragma once

#include <string>
#include <vector>

#include "stixelpn/core.h"

namespace stixelpn::render {

// Deterministic fill color for an instance; background stixels are gray.
std::string svg_color(const InstanceId& id);

// Standalone SVG document: one rectangle per stixel, filled with its
// instance color so stixels of the same instance share a color. Detection
// boxes, when given, are drawn as dashed outlines on top.
std::string frame_svg(const StixelFrame& frame, const InstanceLabeling& labeling,
                      const std::vector<DetectionBox>* boxes = nullptr);

}  // namespace stixelpn::render
