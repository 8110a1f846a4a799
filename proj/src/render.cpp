#include "stixelpn/render.h"

#include <cstdio>
#include <cstdint>
#include <sstream>

namespace stixelpn::render {
namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void rect_svg(std::ostringstream& out, const Rect& r, const std::string& fill) {
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.6g\" y=\"%.6g\" width=\"%.6g\" height=\"%.6g\" fill=\"%s\" "
                  "stroke=\"#000\" stroke-width=\"0.4\" fill-opacity=\"0.92\"/>\n",
                  r.u_tl, r.v_tl, r.u_br - r.u_tl, r.v_br - r.v_tl, fill.c_str());
    out << buf;
}

}  // namespace

std::string svg_color(const InstanceId& id) {
    if (id.is_background()) return "#808080";
    const std::uint64_t h =
        mix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(id.cls)) << 32) |
              static_cast<std::uint32_t>(id.num));
    const unsigned hue = static_cast<unsigned>(h % 360);
    const unsigned sat = 60 + static_cast<unsigned>((h >> 9) % 30);
    const unsigned light = 42 + static_cast<unsigned>((h >> 17) % 18);
    char buf[40];
    std::snprintf(buf, sizeof buf, "hsl(%u,%u%%,%u%%)", hue, sat, light);
    return buf;
}

std::string frame_svg(const StixelFrame& frame, const InstanceLabeling& labeling,
                      const std::vector<DetectionBox>* boxes) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  frame.width, frame.height, frame.width, frame.height);
    out << buf;
    std::snprintf(buf, sizeof buf, "<rect width=\"%d\" height=\"%d\" fill=\"#14141c\"/>\n",
                  frame.width, frame.height);
    out << buf;
    for (const Stixel& s : frame.stixels) {
        const auto it = labeling.labels.find(s.stixel_id);
        const InstanceId inst = it != labeling.labels.end() ? it->second : InstanceId::background();
        rect_svg(out, s.rect(), svg_color(inst));
    }
    if (boxes != nullptr)
        for (const DetectionBox& b : *boxes) {
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.6g\" y=\"%.6g\" width=\"%.6g\" height=\"%.6g\" "
                          "fill=\"none\" stroke=\"#fff\" stroke-width=\"1\" "
                          "stroke-dasharray=\"4 2\"/>\n",
                          b.u_tl, b.v_tl, b.u_br - b.u_tl, b.v_br - b.v_tl);
            out << buf;
        }
    out << "</svg>\n";
    return out.str();
}

}  // namespace stixelpn::render
