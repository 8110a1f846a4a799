#include "stixelpn/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "stixelpn/rng.h"

namespace stixelpn {

SceneConfig SceneConfig::defaults() {
    SceneConfig c;
    c.shapes = {
        {"person", {0.5, 0.8, 1.5, 1.9, 0, 3}},
        {"rider", {0.5, 0.9, 1.4, 1.8, 0, 1}},
        {"car", {1.6, 2.0, 1.4, 1.7, 1, 4}},
        {"truck", {2.2, 2.6, 2.5, 3.5, 0, 1}},
        {"bus", {2.4, 2.6, 2.8, 3.2, 0, 1}},
        {"train", {2.8, 3.0, 3.2, 3.8, 0, 1}},
        {"motorcycle", {0.7, 0.9, 1.2, 1.5, 0, 1}},
        {"bicycle", {0.5, 0.7, 1.0, 1.4, 0, 2}},
    };
    return c;
}

std::string validate(const SceneConfig& c) {
    if (c.width <= 0 || c.height <= 0) return "scene: nonpositive image size";
    if (c.focal <= 0) return "scene: nonpositive focal length";
    if (c.cam_height <= 0) return "scene: camera must sit above the ground";
    if (c.column_width <= 0 || c.column_width > c.width) return "scene: bad column width";
    if (!(c.z_lo > 0) || !(c.z_hi >= c.z_lo)) return "scene: empty depth range";
    if (c.occlusion_prob < 0 || c.occlusion_prob > 1) return "scene: occlusion_prob outside [0,1]";
    if (c.group_prob < 0 || c.group_prob > 1) return "scene: group_prob outside [0,1]";
    if (c.stixel_jitter < 0) return "scene: negative stixel_jitter";
    if (auto e = validate(c.classes); !e.empty()) return "scene: " + e;
    if (c.emit_ground && c.classes.index_of_name("background") < 0)
        return "scene: emit_ground requires a background class";
    for (const auto& [name, s] : c.shapes) {
        const int idx = c.classes.index_of_name(name);
        if (idx < 0) return "scene: shape for unknown class \"" + name + "\"";
        if (!c.classes.is_evaluated(idx)) return "scene: shape for non-evaluated class \"" + name + "\"";
        if (!(s.w_lo > 0) || s.w_hi < s.w_lo || !(s.h_lo > 0) || s.h_hi < s.h_lo)
            return "scene: empty size range for \"" + name + "\"";
        if (s.n_lo < 0 || s.n_hi < s.n_lo) return "scene: empty count range for \"" + name + "\"";
    }
    return "";
}

DetectorNoise DetectorNoise::realistic() {
    DetectorNoise n;
    n.center_jitter = 0.02;
    n.size_jitter = 0.05;
    n.conf_base = 0.95;
    n.conf_noise = 0.04;
    n.conf_jitter_weight = 1.5;
    n.conf_occlusion_weight = 0.4;
    n.miss_rate = 0.05;
    n.false_positives = 0.6;
    return n;
}

std::string validate(const DetectorNoise& n) {
    if (n.center_jitter < 0 || n.size_jitter < 0 || n.conf_noise < 0)
        return "detector noise: negative stddev";
    if (n.conf_base < 0 || n.conf_base > 1) return "detector noise: conf_base outside [0,1]";
    if (n.miss_rate < 0 || n.miss_rate > 1) return "detector noise: miss_rate outside [0,1]";
    for (const auto& [name, r] : n.miss_rate_per_class)
        if (r < 0 || r > 1) return "detector noise: miss rate for \"" + name + "\" outside [0,1]";
    if (n.false_positives < 0) return "detector noise: negative false-positive rate";
    return "";
}

namespace synth {
namespace {

struct Object {
    int cls = 0;     // class-table index
    double z = 0, x_center = 0, w_m = 0, h_m = 0;
    // snapped pixel rect; u on column boundaries, v integral
    int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
    bool drawable = false;
    int counter = 0;  // per-class instance counter, assigned to visible objects
};

constexpr int kSky = -2;
constexpr int kGround = -1;

int snap(double v, int grid) { return static_cast<int>(std::lround(v / grid)) * grid; }

std::vector<Object> sample_objects(const SceneConfig& c, Rng& rng) {
    const double cx = 0.5 * c.width;
    const double cy = 0.5 * c.height;
    std::vector<Object> objects;
    for (int ci = 0; ci < c.classes.size(); ++ci) {
        const auto it = c.shapes.find(c.classes.name(ci));
        if (it == c.shapes.end()) continue;
        const ClassShape& s = it->second;
        const int n = rng.uniform_int(s.n_lo, s.n_hi);
        const std::size_t class_start = objects.size();
        for (int k = 0; k < n; ++k) {
            Object o;
            o.cls = ci;
            o.w_m = rng.uniform(s.w_lo, s.w_hi);
            o.h_m = rng.uniform(s.h_lo, s.h_hi);
            o.z = rng.uniform(c.z_lo, c.z_hi);
            if (objects.size() > class_start && rng.bernoulli(c.group_prob)) {
                // line up beside an earlier same-class object: parked rows,
                // pedestrian groups
                const Object& base = objects[rng.uniform_int(
                    static_cast<int>(class_start), static_cast<int>(objects.size()) - 1)];
                o.z = std::clamp(base.z + rng.normal(0.0, 0.5), c.z_lo, c.z_hi);
                const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
                o.x_center = base.x_center +
                             side * (0.5 * base.w_m + 0.5 * o.w_m + rng.uniform(0.2, 1.2));
                const double x_lo = (0.0 - cx) * o.z / c.focal + 0.5 * o.w_m;
                const double x_hi = (c.width - cx) * o.z / c.focal - 0.5 * o.w_m;
                if (x_lo < x_hi) o.x_center = std::clamp(o.x_center, x_lo, x_hi);
            } else if (!objects.empty() && rng.bernoulli(c.occlusion_prob)) {
                // place behind an earlier object, roughly in its column range
                const Object& base = objects[rng.uniform_int(0, static_cast<int>(objects.size()) - 1)];
                const double z_near = std::min(base.z + 1.0, c.z_hi);
                o.z = rng.uniform(z_near, c.z_hi);
                o.x_center = base.x_center + rng.normal(0.0, 0.4 * std::max(base.w_m, o.w_m));
            } else {
                const double x_lo = (0.0 - cx) * o.z / c.focal + 0.5 * o.w_m;
                const double x_hi = (c.width - cx) * o.z / c.focal - 0.5 * o.w_m;
                o.x_center = x_lo < x_hi ? rng.uniform(x_lo, x_hi) : 0.5 * (x_lo + x_hi);
            }

            const double u0 = cx + c.focal * (o.x_center - 0.5 * o.w_m) / o.z;
            const double u1 = cx + c.focal * (o.x_center + 0.5 * o.w_m) / o.z;
            const double v0 = cy + c.focal * (c.cam_height - o.h_m) / o.z;
            const double v1 = cy + c.focal * c.cam_height / o.z;
            o.u0 = std::clamp(snap(u0, c.column_width), 0, c.width);
            o.u1 = std::clamp(snap(u1, c.column_width), 0, c.width);
            if (o.u1 == o.u0 && o.u1 < c.width) o.u1 += c.column_width;
            o.u1 = std::min(o.u1, c.width);
            o.v0 = std::clamp(static_cast<int>(std::lround(v0)), 0, c.height);
            o.v1 = std::clamp(static_cast<int>(std::lround(v1)), 0, c.height);
            if (o.v1 == o.v0 && o.v1 < c.height) o.v1 += 1;
            o.drawable = o.u1 > o.u0 && o.v1 > o.v0;
            objects.push_back(o);
        }
    }
    return objects;
}

} // namespace

GeneratedFrame generate_frame(const SceneConfig& config, std::uint64_t seed) {
    if (auto e = validate(config); !e.empty()) throw std::invalid_argument(e);
    const double cy = 0.5 * config.height;
    const double cx = 0.5 * config.width;
    Rng rng(seed);

    std::vector<Object> objects = sample_objects(config, rng);

    // winner per (column, row); object edges sit on column boundaries, so one
    // evaluation per column stands for every pixel in it
    const int ncols = (config.width + config.column_width - 1) / config.column_width;
    std::vector<int> winner(static_cast<std::size_t>(ncols) * config.height, kSky);
    for (int cidx = 0; cidx < ncols; ++cidx) {
        const double u_center = cidx * config.column_width + 0.5;
        for (int v = 0; v < config.height; ++v) {
            const double v_center = v + 0.5;
            double z_best = 0;
            int win = kSky;
            if (v_center > cy) {
                z_best = config.focal * config.cam_height / (v_center - cy);
                win = kGround;
            }
            for (std::size_t oi = 0; oi < objects.size(); ++oi) {
                const Object& o = objects[oi];
                if (!o.drawable) continue;
                if (u_center < o.u0 || u_center >= o.u1) continue;
                if (v_center < o.v0 || v_center >= o.v1) continue;
                if (win == kSky || o.z < z_best) {
                    z_best = o.z;
                    win = static_cast<int>(oi);
                }
            }
            winner[static_cast<std::size_t>(cidx) * config.height + v] = win;
        }
    }

    // per-class counters over visible objects, in sampling order
    std::vector<bool> visible(objects.size(), false);
    for (int w : winner)
        if (w >= 0) visible[w] = true;
    std::vector<int> class_counter(config.classes.size(), 0);
    for (std::size_t oi = 0; oi < objects.size(); ++oi)
        if (visible[oi]) objects[oi].counter = ++class_counter[objects[oi].cls];

    GeneratedFrame out;
    out.frame.frame_id = "seed-" + std::to_string(seed);
    out.frame.width = config.width;
    out.frame.height = config.height;
    out.mask.width = config.width;
    out.mask.height = config.height;
    out.mask.codes.assign(static_cast<std::size_t>(config.width) * config.height, 0);

    for (int cidx = 0; cidx < ncols; ++cidx) {
        const int cu0 = cidx * config.column_width;
        const int cu1 = std::min(cu0 + config.column_width, config.width);
        for (int v = 0; v < config.height; ++v) {
            const int win = winner[static_cast<std::size_t>(cidx) * config.height + v];
            if (win < 0) continue;
            const Object& o = objects[win];
            const std::uint16_t code = static_cast<std::uint16_t>(
                config.classes.classes[o.cls].mask_id * 1000 + o.counter);
            for (int u = cu0; u < cu1; ++u) out.mask.at(u, v) = code;
        }
    }

    // column runs with a constant winner become stixels, top to bottom
    int next_id = 0;
    for (int cidx = 0; cidx < ncols; ++cidx) {
        const int cu0 = cidx * config.column_width;
        const int cu1 = std::min(cu0 + config.column_width, config.width);
        const int* col = winner.data() + static_cast<std::size_t>(cidx) * config.height;
        int v = 0;
        while (v < config.height) {
            const int win = col[v];
            int v_end = v + 1;
            while (v_end < config.height && col[v_end] == win) ++v_end;
            if (win == kSky || (win == kGround && !config.emit_ground)) {
                v = v_end;
                continue;
            }
            Stixel s;
            s.u_tl = cu0;
            s.u_br = cu1;
            s.v_tl = v;
            s.v_br = v_end;
            InstanceId inst = InstanceId::background();
            if (win >= 0) {
                const Object& o = objects[win];
                s.z = o.z;
                s.label = o.cls;
                inst = InstanceId{o.cls, o.counter};
            } else {
                // depth of the ground at the run's base row
                s.z = config.focal * config.cam_height / (v_end - 0.5 - cy);
                s.label = config.classes.index_of_name("background");
            }
            s.x = (0.5 * (cu0 + cu1) - cx) * s.z / config.focal;
            s.y = (s.v_br - cy) * s.z / config.focal;
            s.w = (cu1 - cu0) * s.z / config.focal;
            s.h = (s.v_br - s.v_tl) * s.z / config.focal;
            s.label_conf = 1.0;
            s.stixel_id = next_id++;
            out.frame.stixels.push_back(s);
            out.gt.labels[s.stixel_id] = inst;
            v = v_end;
        }
    }

    if (config.stixel_jitter > 0) {
        for (Stixel& s : out.frame.stixels) {
            double a = s.v_tl + rng.normal(0.0, config.stixel_jitter);
            double b = s.v_br + rng.normal(0.0, config.stixel_jitter);
            if (a > b) std::swap(a, b);
            if (b - a < 1.0) {
                const double mid = 0.5 * (a + b);
                a = mid - 0.5;
                b = mid + 0.5;
            }
            s.v_tl = std::clamp(a, 0.0, config.height - 1.0);
            s.v_br = std::clamp(b, s.v_tl + 1.0, static_cast<double>(config.height));
            s.y = (s.v_br - cy) * s.z / config.focal;
            s.h = (s.v_br - s.v_tl) * s.z / config.focal;
        }
    }

    out.gt.frame_id = out.frame.frame_id;
    for (const Object& o : objects)
        if (o.drawable)
            out.objects.push_back({o.cls, o.z, o.u0, o.v0, o.u1, o.v1, o.counter,
                                   o.counter > 0});
    return out;
}

std::vector<DetectionBox> simulate_detections(const StixelFrame& frame, const InstanceLabeling& gt,
                                              const ClassTable& classes, const DetectorNoise& noise,
                                              std::uint64_t seed) {
    if (auto e = validate(noise); !e.empty()) throw std::invalid_argument(e);
    Rng rng(seed);

    std::map<InstanceId, std::vector<const Stixel*>> instances;
    for (const Stixel& s : frame.stixels) {
        const auto it = gt.labels.find(s.stixel_id);
        if (it == gt.labels.end()) throw std::invalid_argument("gt does not label stixel");
        if (!it->second.is_background()) instances[it->second].push_back(&s);
    }

    std::vector<DetectionBox> boxes;
    for (const auto& [inst, parts] : instances) {
        double miss = noise.miss_rate;
        if (const auto it = noise.miss_rate_per_class.find(classes.name(inst.cls));
            it != noise.miss_rate_per_class.end())
            miss = it->second;
        if (miss > 0 && rng.bernoulli(miss)) continue;

        Rect bbox = parts.front()->rect();
        double visible_area = 0;
        for (const Stixel* s : parts) {
            bbox.u_tl = std::min(bbox.u_tl, s->u_tl);
            bbox.v_tl = std::min(bbox.v_tl, s->v_tl);
            bbox.u_br = std::max(bbox.u_br, s->u_br);
            bbox.v_br = std::max(bbox.v_br, s->v_br);
            visible_area += rect_area(s->rect());
        }
        const double covered = visible_area / rect_area(bbox);
        const double occlusion = std::clamp(1.0 - covered, 0.0, 1.0);

        const double bw = bbox.width(), bh = bbox.height();
        const double dx = rng.normal(0.0, noise.center_jitter);
        const double dy = rng.normal(0.0, noise.center_jitter);
        const double sw = std::max(0.2, 1.0 + rng.normal(0.0, noise.size_jitter));
        const double sh = std::max(0.2, 1.0 + rng.normal(0.0, noise.size_jitter));
        const double jitter_mag = std::abs(dx) + std::abs(dy) + std::abs(sw - 1.0) + std::abs(sh - 1.0);

        DetectionBox b;
        const double ucf = bbox.u_center() + dx * bw;
        const double vcf = bbox.v_center() + dy * bh;
        b.u_tl = std::clamp(ucf - 0.5 * sw * bw, 0.0, frame.width - 1.0);
        b.v_tl = std::clamp(vcf - 0.5 * sh * bh, 0.0, frame.height - 1.0);
        b.u_br = std::clamp(ucf + 0.5 * sw * bw, b.u_tl + 1.0, static_cast<double>(frame.width));
        b.v_br = std::clamp(vcf + 0.5 * sh * bh, b.v_tl + 1.0, static_cast<double>(frame.height));
        b.box_label = classes.merged(inst.cls);
        b.box_conf = std::clamp(noise.conf_base - noise.conf_jitter_weight * jitter_mag -
                                    noise.conf_occlusion_weight * occlusion +
                                    rng.normal(0.0, noise.conf_noise),
                                0.01, 1.0);
        boxes.push_back(b);
    }

    std::vector<int> fp_classes;
    for (int i = 0; i < classes.size(); ++i)
        if (classes.is_evaluated(i) && classes.merged(i) == i) fp_classes.push_back(i);
    int n_fp = static_cast<int>(noise.false_positives);
    if (rng.bernoulli(noise.false_positives - n_fp)) ++n_fp;
    for (int k = 0; k < n_fp && !fp_classes.empty(); ++k) {
        DetectionBox b;
        const double w = rng.uniform(0.05, 0.3) * frame.width;
        const double h = rng.uniform(0.05, 0.3) * frame.height;
        const double uc = rng.uniform(0.0, static_cast<double>(frame.width));
        const double vc = rng.uniform(0.0, static_cast<double>(frame.height));
        b.u_tl = std::clamp(uc - 0.5 * w, 0.0, frame.width - 1.0);
        b.v_tl = std::clamp(vc - 0.5 * h, 0.0, frame.height - 1.0);
        b.u_br = std::clamp(uc + 0.5 * w, b.u_tl + 1.0, static_cast<double>(frame.width));
        b.v_br = std::clamp(vc + 0.5 * h, b.v_tl + 1.0, static_cast<double>(frame.height));
        b.box_label = fp_classes[rng.uniform_int(0, static_cast<int>(fp_classes.size()) - 1)];
        b.box_conf = std::clamp(noise.conf_base * rng.uniform(0.1, 0.7), 0.01, 1.0);
        boxes.push_back(b);
    }
    return boxes;
}

Dataset generate_dataset(const SceneConfig& config, const DetectorNoise& noise, int n_frames,
                         std::uint64_t seed, const std::string& name) {
    if (n_frames < 0) throw std::invalid_argument("negative frame count");
    Dataset ds;
    ds.name = name;
    ds.seed = seed;
    ds.classes = config.classes;
    for (int i = 0; i < n_frames; ++i) {
        const std::uint64_t frame_seed = Rng::derive(seed, static_cast<std::uint64_t>(i));
        GeneratedFrame g = generate_frame(config, frame_seed);
        char id[16];
        std::snprintf(id, sizeof id, "f%06d", i);
        g.frame.frame_id = id;
        g.gt.frame_id = id;

        DatasetEntry entry;
        entry.detections =
            simulate_detections(g.frame, g.gt, config.classes, noise, Rng::derive(frame_seed, 1));
        entry.frame = std::move(g.frame);
        entry.gt = std::move(g.gt);
        entry.mask = std::move(g.mask);
        ds.entries.push_back(std::move(entry));
    }
    return ds;
}

std::pair<StixelFrame, std::vector<DetectionBox>> benchmark_workload(int n_stixels, int n_boxes,
                                                                     std::uint64_t seed) {
    if (n_stixels < 0 || n_boxes < 0) throw std::invalid_argument("negative workload counts");
    constexpr int kWidth = 2048, kHeight = 1024, kColW = 8;
    Rng rng(seed);
    const ClassTable classes = ClassTable::cityscapes();

    std::vector<DetectionBox> boxes;
    for (int i = 0; i < n_boxes; ++i) {
        DetectionBox b;
        const double w = rng.uniform(100.0, 400.0);
        const double h = rng.uniform(80.0, 300.0);
        b.u_tl = rng.uniform(0.0, kWidth - w);
        b.v_tl = rng.uniform(0.0, kHeight - h);
        b.u_br = b.u_tl + w;
        b.v_br = b.v_tl + h;
        b.box_label = classes.merged(rng.uniform_int(0, classes.size() - 1));
        b.box_conf = rng.uniform(0.3, 1.0);
        boxes.push_back(b);
    }

    StixelFrame frame;
    frame.frame_id = "bench";
    frame.width = kWidth;
    frame.height = kHeight;
    for (int i = 0; i < n_stixels; ++i) {
        Stixel s;
        int col;
        double v0, hpx;
        if (n_boxes > 0 && i % 10 < 7) {
            // clustered under a box so RoI capture counts resemble detections
            const DetectionBox& b = boxes[i % n_boxes];
            col = std::clamp(static_cast<int>(rng.uniform(b.u_tl, b.u_br)) / kColW, 0,
                             kWidth / kColW - 1);
            hpx = rng.uniform(0.5, 1.0) * (b.v_br - b.v_tl);
            v0 = std::clamp(rng.uniform(b.v_tl - 10.0, b.v_br - hpx + 10.0), 0.0, kHeight - hpx);
        } else {
            col = rng.uniform_int(0, kWidth / kColW - 1);
            hpx = rng.uniform(20.0, 200.0);
            v0 = rng.uniform(0.0, kHeight - hpx);
        }
        s.u_tl = col * kColW;
        s.u_br = s.u_tl + kColW;
        s.v_tl = v0;
        s.v_br = v0 + hpx;
        s.z = rng.uniform(5.0, 50.0);
        s.x = (s.rect().u_center() - 0.5 * kWidth) * s.z / 1024.0;
        s.y = (s.v_br - 0.5 * kHeight) * s.z / 1024.0;
        s.w = kColW * s.z / 1024.0;
        s.h = hpx * s.z / 1024.0;
        s.label = rng.uniform_int(0, classes.size() - 1);
        s.label_conf = rng.uniform(0.5, 1.0);
        s.stixel_id = i;
        frame.stixels.push_back(s);
    }
    return {std::move(frame), std::move(boxes)};
}

} // namespace synth
} // namespace stixelpn
