#include "stixelpn/filter.h"

#include <algorithm>
#include <stdexcept>

namespace stixelpn::filter {

std::string validate(const FilterParams& p) {
    if (p.sc_roi < 1.0) return "filter: sc_roi must be >= 1";
    if (!(p.t_roi > 0) || p.t_roi > 1) return "filter: t_roi outside (0,1]";
    return "";
}

std::string validate(const FeatureStats& s) {
    if (s.mean.size() != kFeatureCount || s.std.size() != kFeatureCount)
        return "feature stats: wrong column count";
    for (double v : s.std)
        if (!(v > 0)) return "feature stats: nonpositive std";
    return "";
}

RoiBox scale_box(const DetectionBox& det, double sc_roi, int image_width, int image_height) {
    if (sc_roi < 1.0) throw std::invalid_argument("sc_roi must be >= 1");
    const Rect r = det.rect();
    const double uc = r.u_center(), vc = r.v_center();
    const double hw = 0.5 * sc_roi * r.width(), hh = 0.5 * sc_roi * r.height();
    RoiBox roi;
    roi.rect.u_tl = std::max(uc - hw, 0.0);
    roi.rect.v_tl = std::max(vc - hh, 0.0);
    roi.rect.u_br = std::min(uc + hw, static_cast<double>(image_width));
    roi.rect.v_br = std::min(vc + hh, static_cast<double>(image_height));
    roi.source = det;
    roi.scale = sc_roi;
    return roi;
}

std::vector<int> capture(const StixelFrame& frame, const RoiBox& roi, double t_roi) {
    if (!(t_roi > 0) || t_roi > 1) throw std::invalid_argument("t_roi outside (0,1]");
    std::vector<int> captured;
    for (const Stixel& s : frame.stixels) {
        const double area = rect_area(s.rect());
        if (area <= 0) continue;
        if (rect_intersection_area(s.rect(), roi.rect) / area > t_roi)
            captured.push_back(s.stixel_id);
    }
    return captured;  // frame order is ascending stixel_id
}

std::optional<RoiSample> build_sample(const StixelFrame& frame, const RoiBox& roi,
                                      const std::vector<int>& captured, const ClassTable& classes,
                                      const FeatureStats* stats) {
    if (captured.empty()) return std::nullopt;
    if (stats)
        if (auto e = validate(*stats); !e.empty()) throw std::invalid_argument(e);
    const double rw = roi.rect.width(), rh = roi.rect.height();
    if (!(rw > 0) || !(rh > 0)) throw std::invalid_argument("degenerate RoI rectangle");
    const double denom = classes.size() > 1 ? classes.size() - 1.0 : 1.0;
    const auto clamp_unit = [](double v) { return std::clamp(v, -0.5, 1.5); };
    if (roi.source.box_label < 0 || roi.source.box_label >= classes.size())
        throw std::invalid_argument("detection label outside class table");

    RoiSample sample;
    sample.roi = roi;
    sample.captured = captured;
    sample.features.resize(static_cast<std::size_t>(captured.size()) * kFeatureCount);
    const double l_bb = classes.merged(roi.source.box_label) / denom;

    for (std::size_t i = 0; i < captured.size(); ++i) {
        const Stixel* s = frame.find(captured[i]);
        if (!s) throw std::invalid_argument("captured stixel missing from frame");
        if (s->label < 0 || s->label >= classes.size())
            throw std::invalid_argument("stixel label outside class table");
        double* row = sample.features.data() + i * kFeatureCount;
        row[0] = s->x;
        row[1] = s->y;
        row[2] = s->z;
        row[3] = s->w;
        row[4] = s->h;
        row[5] = clamp_unit((s->rect().u_center() - roi.rect.u_tl) / rw);
        row[6] = clamp_unit((s->rect().v_center() - roi.rect.v_tl) / rh);
        row[7] = clamp_unit(s->rect().height() / rh);
        row[8] = classes.merged(s->label) / denom;
        row[9] = l_bb;
        if (stats)
            for (int c = 0; c < kFeatureCount; ++c) row[c] = (row[c] - stats->mean[c]) / stats->std[c];
    }
    return sample;
}

std::vector<RoiSample> build_frame_samples(const StixelFrame& frame,
                                           const std::vector<DetectionBox>& detections,
                                           const FilterParams& params, const ClassTable& classes,
                                           const FeatureStats* stats) {
    if (auto e = validate(params); !e.empty()) throw std::invalid_argument(e);
    std::vector<RoiSample> samples;
    for (const DetectionBox& det : detections) {
        const RoiBox roi = scale_box(det, params.sc_roi, frame.width, frame.height);
        if (auto sample = build_sample(frame, roi, capture(frame, roi, params.t_roi), classes, stats))
            samples.push_back(std::move(*sample));
    }
    return samples;
}

} // namespace stixelpn::filter
