#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stixelpn/core.h"

namespace stixelpn::filter {

inline constexpr int kFeatureCount = 10;

struct FilterParams {
    double sc_roi = 1.0;  // detection-box scale factor, >= 1
    double t_roi = 0.1;   // captured iff stixel-area fraction inside RoI exceeds this
};
std::string validate(const FilterParams& p);

// Detection box scaled about its center and clamped to the image.
struct RoiBox {
    Rect rect;
    DetectionBox source;
    double scale = 1.0;
};

// Network input for one RoI. The feature matrix is row-major [N' x 10] with
// columns [x, y, z, w, h, u', v', h', l, l_bb]; row i belongs to
// captured[i], rows ascending by stixel id. u'/v' are the stixel rectangle
// center normalized into the RoI, h' the pixel-height ratio, all three
// clamped to [-0.5, 1.5]; l and l_bb are merged class indices over
// (class count - 1).
struct RoiSample {
    RoiBox roi;
    std::vector<int> captured;
    std::vector<double> features;

    int count() const { return static_cast<int>(captured.size()); }
};

// Optional per-column standardization, derived from a training split.
struct FeatureStats {
    std::vector<double> mean;  // size kFeatureCount
    std::vector<double> std;   // size kFeatureCount, all > 0
};
std::string validate(const FeatureStats& s);

RoiBox scale_box(const DetectionBox& det, double sc_roi, int image_width, int image_height);

// Ascending stixel ids; strict threshold, so a fraction of exactly t_roi is
// not captured.
std::vector<int> capture(const StixelFrame& frame, const RoiBox& roi, double t_roi);

// Empty capture lists yield nullopt: the RoI is skipped, not an error.
std::optional<RoiSample> build_sample(const StixelFrame& frame, const RoiBox& roi,
                                      const std::vector<int>& captured, const ClassTable& classes,
                                      const FeatureStats* stats = nullptr);

// scale/capture/build for every detection of a frame, skipping empty RoIs.
std::vector<RoiSample> build_frame_samples(const StixelFrame& frame,
                                           const std::vector<DetectionBox>& detections,
                                           const FilterParams& params, const ClassTable& classes,
                                           const FeatureStats* stats = nullptr);

} // namespace stixelpn::filter
