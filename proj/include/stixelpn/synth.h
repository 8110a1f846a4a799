#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stixelpn/core.h"
#include "stixelpn/ingest.h"

namespace stixelpn {

// Metric size and per-frame count ranges for one object class.
struct ClassShape {
    double w_lo = 0.5, w_hi = 1.0;  // object width, meters
    double h_lo = 1.0, h_hi = 2.0;  // object height, meters
    int n_lo = 0, n_hi = 1;        // objects per frame
};

// Pinhole scene: camera at the origin looking along +z, x right, y down,
// flat ground plane at y = cam_height. Objects are upright billboards
// standing on the ground, rasterized into stixel columns with a z-buffer.
struct SceneConfig {
    int width = 512;
    int height = 256;
    double focal = 256.0;      // pixels
    double cam_height = 1.5;   // meters
    int column_width = 4;      // pixels; last column truncated if it overflows
    double z_lo = 5.0;
    double z_hi = 45.0;
    double occlusion_prob = 0.25;  // chance an object is placed behind an earlier one
    double group_prob = 0.35;      // chance an object lines up beside a same-class one
    double stixel_jitter = 0.0;    // stddev in px on stixel top/bottom edges
    bool emit_ground = true;       // ground stixels labeled with the background class
    ClassTable classes = ClassTable::cityscapes_with_background();
    std::map<std::string, ClassShape> shapes;  // keyed by class name; absent -> none spawned

    static SceneConfig defaults();
};
std::string validate(const SceneConfig& c);

// Emulates a box detector around the generator's ground truth. All stddevs
// and rates zero (none()) reproduce each instance's visible bounding
// rectangle with confidence exactly 1.
struct DetectorNoise {
    double center_jitter = 0.0;          // stddev, fraction of box size
    double size_jitter = 0.0;            // stddev of the relative scale factor
    double conf_base = 1.0;
    double conf_noise = 0.0;             // stddev of additive confidence noise
    double conf_jitter_weight = 0.0;     // confidence penalty per unit jitter magnitude
    double conf_occlusion_weight = 0.0;  // confidence penalty per occluded fraction
    double miss_rate = 0.0;
    std::map<std::string, double> miss_rate_per_class;  // by class name, overrides miss_rate
    double false_positives = 0.0;        // expected count per frame

    static DetectorNoise none() { return {}; }
    static DetectorNoise realistic();
};
std::string validate(const DetectorNoise& n);

namespace synth {

// Scene object after projection and column snapping, kept for inspection:
// oracles can re-rasterize the frame from these alone.
struct PlacedObject {
    int cls = 0;      // class-table index
    double z = 0;     // billboard depth; constant over the object
    int u0 = 0, v0 = 0, u1 = 0, v1 = 0;  // snapped pixel rect, half-open
    int counter = 0;  // per-class instance counter; 0 when fully hidden
    bool visible = false;
};

struct GeneratedFrame {
    StixelFrame frame;
    InstanceMask mask;
    InstanceLabeling gt;
    std::vector<PlacedObject> objects;  // sampling order; later objects lose depth ties
};

// Deterministic in (config, seed). Stixel anchor convention: (x, z) at the
// object surface under the column center, y at the stixel's vertical base.
GeneratedFrame generate_frame(const SceneConfig& config, std::uint64_t seed);

// One box per GT instance (bounding rectangle of its stixels, i.e. of its
// visible pixels), jittered and scored per `noise`; labels are merged class
// indices; plus sampled false positives.
std::vector<DetectionBox> simulate_detections(const StixelFrame& frame, const InstanceLabeling& gt,
                                              const ClassTable& classes, const DetectorNoise& noise,
                                              std::uint64_t seed);

// Frame i is derived from (seed, i) alone, so any frame can be regenerated
// independently. Masks are always attached.
Dataset generate_dataset(const SceneConfig& config, const DetectorNoise& noise, int n_frames,
                         std::uint64_t seed, const std::string& name);

// Raw load for the runtime benchmark: exact counts on a 2048x1024 image with
// 8 px columns, most stixels clustered under the boxes so RoI capture sizes
// resemble detector output. Not physically consistent; never labeled.
std::pair<StixelFrame, std::vector<DetectionBox>> benchmark_workload(int n_stixels, int n_boxes,
                                                                     std::uint64_t seed);

} // namespace synth
} // namespace stixelpn
