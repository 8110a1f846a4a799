#include "stixelpn/core.h"

#include <algorithm>
#include <set>
#include <sstream>

namespace stixelpn {

double rect_area(const Rect& r) {
    const double w = r.u_br - r.u_tl;
    const double h = r.v_br - r.v_tl;
    if (w <= 0 || h <= 0) return 0.0;
    return w * h;
}

double rect_intersection_area(const Rect& a, const Rect& b) {
    const double u0 = std::max(a.u_tl, b.u_tl);
    const double v0 = std::max(a.v_tl, b.v_tl);
    const double u1 = std::min(a.u_br, b.u_br);
    const double v1 = std::min(a.v_br, b.v_br);
    if (u1 <= u0 || v1 <= v0) return 0.0;
    return (u1 - u0) * (v1 - v0);
}

const Stixel* StixelFrame::find(int stixel_id) const {
    auto it = std::lower_bound(stixels.begin(), stixels.end(), stixel_id,
                               [](const Stixel& s, int id) { return s.stixel_id < id; });
    if (it != stixels.end() && it->stixel_id == stixel_id) return &*it;
    return nullptr;
}

std::string to_string(const InstanceId& id) {
    if (id.is_background()) return "bg";
    return std::to_string(id.cls) + ":" + std::to_string(id.num);
}

InstanceId instance_id_from_string(const std::string& s) {
    if (s == "bg") return InstanceId::background();
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad instance id: " + s);
    InstanceId id;
    id.cls = std::stoi(s.substr(0, colon));
    id.num = std::stoi(s.substr(colon + 1));
    if (id.cls < 0 || id.num < 0) throw std::invalid_argument("bad instance id: " + s);
    return id;
}

int ClassTable::index_of_name(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (classes[i].name == name) return i;
    return -1;
}

int ClassTable::index_of_mask_id(int mask_id) const {
    for (int i = 0; i < size(); ++i)
        if (classes[i].mask_id == mask_id) return i;
    return -1;
}

ClassTable ClassTable::cityscapes() {
    ClassTable t;
    t.classes = {
        {"person", 24, true},   {"rider", 25, true}, {"car", 26, true},
        {"truck", 27, true},    {"bus", 28, true},   {"train", 31, true},
        {"motorcycle", 32, true}, {"bicycle", 33, true},
    };
    t.merge = {0, 1, 2, 3, 4, 4, 6, 7};  // train -> bus (large vehicle)
    return t;
}

ClassTable ClassTable::cityscapes_with_background() {
    ClassTable t = cityscapes();
    t.classes.insert(t.classes.begin(), {"background", 7, false});
    t.merge = {0, 1, 2, 3, 4, 5, 5, 7, 8};
    return t;
}

std::string validate(const Stixel& s) {
    std::ostringstream err;
    if (!(s.u_tl < s.u_br)) err << "stixel " << s.stixel_id << ": u_tl >= u_br";
    else if (!(s.v_tl < s.v_br)) err << "stixel " << s.stixel_id << ": v_tl >= v_br";
    else if (!(s.w > 0)) err << "stixel " << s.stixel_id << ": w <= 0";
    else if (!(s.h > 0)) err << "stixel " << s.stixel_id << ": h <= 0";
    else if (!(s.z > 0)) err << "stixel " << s.stixel_id << ": z <= 0";
    else if (s.label < 0) err << "stixel " << s.stixel_id << ": negative label";
    else if (!(s.label_conf >= 0 && s.label_conf <= 1))
        err << "stixel " << s.stixel_id << ": label_conf outside [0,1]";
    return err.str();
}

std::string validate(const DetectionBox& b) {
    std::ostringstream err;
    if (!(b.u_tl < b.u_br)) err << "box: u_tl >= u_br";
    else if (!(b.v_tl < b.v_br)) err << "box: v_tl >= v_br";
    else if (!(b.box_conf >= 0 && b.box_conf <= 1)) err << "box: box_conf outside [0,1]";
    return err.str();
}

std::string validate(const StixelFrame& f) {
    if (f.width <= 0 || f.height <= 0) return "frame " + f.frame_id + ": nonpositive image size";
    std::set<int> ids;
    for (const Stixel& s : f.stixels) {
        if (auto e = validate(s); !e.empty()) return "frame " + f.frame_id + ": " + e;
        if (s.u_tl < 0 || s.v_tl < 0 || s.u_br > f.width || s.v_br > f.height)
            return "frame " + f.frame_id + ": stixel " + std::to_string(s.stixel_id) +
                   " outside image bounds";
        if (!ids.insert(s.stixel_id).second)
            return "frame " + f.frame_id + ": duplicate stixel_id " + std::to_string(s.stixel_id);
    }
    for (std::size_t i = 1; i < f.stixels.size(); ++i)
        if (f.stixels[i - 1].stixel_id > f.stixels[i].stixel_id)
            return "frame " + f.frame_id + ": stixels not sorted by stixel_id";
    return "";
}

std::string validate(const ClassTable& t) {
    if (t.classes.empty()) return "class table: empty";
    if (t.merge.size() != t.classes.size()) return "class table: merge map size mismatch";
    for (int i = 0; i < t.size(); ++i) {
        const int m = t.merge[i];
        if (m < 0 || m >= t.size()) return "class table: merge target out of range";
        if (t.merge[m] != m) return "class table: merge map not idempotent";
    }
    return "";
}

}  // namespace stixelpn
