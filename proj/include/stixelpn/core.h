#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace stixelpn {

// Axis-aligned pixel rectangle, half-open [u_tl, u_br) x [v_tl, v_br).
// Coordinates are continuous (real-valued pixels).
struct Rect {
    double u_tl = 0, v_tl = 0, u_br = 0, v_br = 0;

    double width() const { return u_br - u_tl; }
    double height() const { return v_br - v_tl; }
    double u_center() const { return 0.5 * (u_tl + u_br); }
    double v_center() const { return 0.5 * (v_tl + v_br); }
    bool valid() const { return u_tl <= u_br && v_tl <= v_br; }
};

double rect_area(const Rect& r);
double rect_intersection_area(const Rect& a, const Rect& b);

// One rectangular world element: 3D pose in meters, 2D image rectangle in
// pixels, semantic label and its confidence.
struct Stixel {
    double x = 0, y = 0, z = 0;  // world position [m]; z > 0 in front of camera
    double w = 0, h = 0;         // world width / height [m]
    double u_tl = 0, v_tl = 0, u_br = 0, v_br = 0;  // image rectangle [px]
    int label = 0;               // semantic class index into the ClassTable
    double label_conf = 1.0;     // in [0,1]
    int stixel_id = 0;           // frame-unique

    Rect rect() const { return {u_tl, v_tl, u_br, v_br}; }
};

// 2D detector output: box rectangle, predicted class and its confidence.
struct DetectionBox {
    double u_tl = 0, v_tl = 0, u_br = 0, v_br = 0;
    int box_label = 0;
    double box_conf = 1.0;

    Rect rect() const { return {u_tl, v_tl, u_br, v_br}; }
};

struct StixelFrame {
    std::string frame_id;
    int width = 0, height = 0;   // image size [px]
    std::vector<Stixel> stixels; // sorted by stixel_id

    const Stixel* find(int stixel_id) const;
};

// Instance identity: (class index, counter >= 1), or the distinguished
// background value which compares unequal to every real instance.
struct InstanceId {
    int cls = -1;
    int num = 0;

    static InstanceId background() { return {-1, 0}; }
    bool is_background() const { return cls < 0; }
    auto operator<=>(const InstanceId&) const = default;
};

std::string to_string(const InstanceId& id);
InstanceId instance_id_from_string(const std::string& s);

// Per-stixel instance assignment for one frame. Both ground truth and
// predictions share this shape.
struct InstanceLabeling {
    std::string frame_id;
    std::map<int, InstanceId> labels;  // stixel_id -> instance
};

// A labeling used as a prediction: per-instance confidences rank instances
// during AP evaluation. Missing entries default to 1.0.
struct PredictedLabeling {
    InstanceLabeling labeling;
    std::map<InstanceId, double> confidence;
};

struct ClassInfo {
    std::string name;
    int mask_id = 0;        // class id used in pixel instance masks (code = mask_id*1000 + counter)
    bool evaluated = true;  // participates in AP evaluation and instance prediction
};

// Ordered class list with dense indices, an "evaluated" flag per class and an
// idempotent merge map (e.g. train -> bus as the large-vehicle class).
struct ClassTable {
    std::vector<ClassInfo> classes;
    std::vector<int> merge;  // merge[i] = dense index after class merge

    int size() const { return static_cast<int>(classes.size()); }
    int merged(int idx) const { return merge[idx]; }
    const std::string& name(int idx) const { return classes[idx].name; }
    int index_of_name(const std::string& name) const;  // -1 if unknown
    int index_of_mask_id(int mask_id) const;           // -1 if unknown
    bool is_evaluated(int idx) const { return classes[idx].evaluated; }

    // The 8 Cityscapes instance classes; train merges into bus ("large vehicle").
    static ClassTable cityscapes();
    // Same plus a non-evaluated background class for synthetic ground stixels.
    static ClassTable cityscapes_with_background();
};

// Invariant checks used by ingest; return an empty string when fine,
// otherwise a description of the first violation.
std::string validate(const Stixel& s);
std::string validate(const DetectionBox& b);
std::string validate(const StixelFrame& f);
std::string validate(const ClassTable& t);

}  // namespace stixelpn
