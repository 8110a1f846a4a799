#include "stixelpn/ingest.h"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace stixelpn::ingest {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string read_text(const fs::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) fail("cannot open " + file.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    if (!is.good() && !is.eof()) fail("read error on " + file.string());
    return buf.str();
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream os(file, std::ios::binary);
    if (!os) fail("cannot open " + file.string() + " for writing");
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.flush();
    if (!os.good()) fail("write error on " + file.string());
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

std::string loc(const fs::path& file, std::size_t lineno) {
    return file.string() + ":" + std::to_string(lineno);
}

json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(where + ": " + e.what());
    }
}

double as_number(const json& v, const std::string& what) {
    if (!v.is_number()) fail(what + ": expected a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& what) {
    if (!v.is_number_integer()) fail(what + ": expected an integer");
    return v.get<int>();
}

const json& field(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) fail(where + ": missing field \"" + key + "\"");
    return *it;
}

bool safe_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
            return false;
    return true;
}

// ---- checkpoint byte codecs (explicit little-endian) ----

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

void put_f64_array(std::vector<unsigned char>& b, const std::vector<double>& a) {
    for (double v : a) put_f64(b, v);
}

struct Cursor {
    const unsigned char* p;
    std::size_t n;
    std::size_t off = 0;
    std::string where;

    void need(std::size_t k) {
        if (n - off < k) fail(where + ": truncated checkpoint payload");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[off + i]) << (8 * i);
        off += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[off + i]) << (8 * i);
        off += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint8_t u8() {
        need(1);
        return p[off++];
    }
    std::vector<double> f64_array(std::size_t count) {
        need(count * 8);
        std::vector<double> a(count);
        for (std::size_t i = 0; i < count; ++i) a[i] = f64();
        return a;
    }
};

constexpr char kCkptMagic[8] = {'S', 'P', 'N', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCkptVersion = 1;
constexpr char kManifestFormat[] = "stixelpn-dataset-v1";

} // namespace

// ---- JSONL codecs ----

std::string frame_to_json_line(const StixelFrame& frame) {
    json j;
    j["frame"] = frame.frame_id;
    j["width"] = frame.width;
    j["height"] = frame.height;
    json arr = json::array();
    for (const Stixel& s : frame.stixels)
        arr.push_back(json::array({s.x, s.y, s.z, s.w, s.h, s.u_tl, s.v_tl, s.u_br, s.v_br,
                                   s.label, s.label_conf, s.stixel_id}));
    j["stixels"] = std::move(arr);
    return j.dump();
}

StixelFrame frame_from_json_line(const std::string& line) {
    const json j = parse_json(line, "frame record");
    StixelFrame f;
    f.frame_id = field(j, "frame", "frame record").get<std::string>();
    const std::string where = "frame " + f.frame_id;
    f.width = as_int(field(j, "width", where), where + ".width");
    f.height = as_int(field(j, "height", where), where + ".height");
    const json& arr = field(j, "stixels", where);
    if (!arr.is_array()) fail(where + ": \"stixels\" must be an array");
    for (const json& e : arr) {
        if (!e.is_array() || e.size() != 12) fail(where + ": stixel entry must have 12 fields");
        Stixel s;
        s.x = as_number(e[0], where);
        s.y = as_number(e[1], where);
        s.z = as_number(e[2], where);
        s.w = as_number(e[3], where);
        s.h = as_number(e[4], where);
        s.u_tl = as_number(e[5], where);
        s.v_tl = as_number(e[6], where);
        s.u_br = as_number(e[7], where);
        s.v_br = as_number(e[8], where);
        s.label = as_int(e[9], where);
        s.label_conf = as_number(e[10], where);
        s.stixel_id = as_int(e[11], where);
        f.stixels.push_back(s);
    }
    return f;
}

std::string detections_to_json_line(const std::string& frame_id, const std::vector<DetectionBox>& boxes) {
    json j;
    j["frame"] = frame_id;
    json arr = json::array();
    for (const DetectionBox& b : boxes)
        arr.push_back(json::array({b.u_tl, b.v_tl, b.u_br, b.v_br, b.box_label, b.box_conf}));
    j["boxes"] = std::move(arr);
    return j.dump();
}

std::pair<std::string, std::vector<DetectionBox>> detections_from_json_line(const std::string& line) {
    const json j = parse_json(line, "detection record");
    std::pair<std::string, std::vector<DetectionBox>> out;
    out.first = field(j, "frame", "detection record").get<std::string>();
    const std::string where = "detections for frame " + out.first;
    const json& arr = field(j, "boxes", where);
    if (!arr.is_array()) fail(where + ": \"boxes\" must be an array");
    for (const json& e : arr) {
        if (!e.is_array() || e.size() != 6) fail(where + ": box entry must have 6 fields");
        DetectionBox b;
        b.u_tl = as_number(e[0], where);
        b.v_tl = as_number(e[1], where);
        b.u_br = as_number(e[2], where);
        b.v_br = as_number(e[3], where);
        b.box_label = as_int(e[4], where);
        b.box_conf = as_number(e[5], where);
        out.second.push_back(b);
    }
    return out;
}

std::string labeling_to_json_line(const PredictedLabeling& labeling) {
    json j;
    j["frame"] = labeling.labeling.frame_id;
    json arr = json::array();
    for (const auto& [sid, inst] : labeling.labeling.labels)
        arr.push_back(json::array({sid, to_string(inst)}));
    j["labels"] = std::move(arr);
    if (!labeling.confidence.empty()) {
        json conf = json::object();
        for (const auto& [inst, c] : labeling.confidence) conf[to_string(inst)] = c;
        j["conf"] = std::move(conf);
    }
    return j.dump();
}

PredictedLabeling labeling_from_json_line(const std::string& line) {
    const json j = parse_json(line, "labeling record");
    PredictedLabeling out;
    out.labeling.frame_id = field(j, "frame", "labeling record").get<std::string>();
    const std::string where = "labeling for frame " + out.labeling.frame_id;
    const json& arr = field(j, "labels", where);
    if (!arr.is_array()) fail(where + ": \"labels\" must be an array");
    for (const json& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[1].is_string())
            fail(where + ": label entry must be [stixel_id, instance]");
        const int sid = as_int(e[0], where);
        if (!out.labeling.labels.emplace(sid, instance_id_from_string(e[1].get<std::string>())).second)
            fail(where + ": duplicate stixel_id " + std::to_string(sid));
    }
    if (auto it = j.find("conf"); it != j.end()) {
        if (!it->is_object()) fail(where + ": \"conf\" must be an object");
        for (const auto& [key, val] : it->items())
            out.confidence[instance_id_from_string(key)] = as_number(val, where + ".conf");
    }
    return out;
}

void save_labelings(const std::vector<PredictedLabeling>& labelings, const fs::path& file) {
    std::string text;
    for (const PredictedLabeling& l : labelings) {
        text += labeling_to_json_line(l);
        text += '\n';
    }
    write_text(file, text);
}

std::vector<PredictedLabeling> load_labelings(const fs::path& file) {
    const auto lines = split_lines(read_text(file));
    std::vector<PredictedLabeling> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            out.push_back(labeling_from_json_line(lines[i]));
        } catch (const std::exception& e) {
            fail(loc(file, i + 1) + ": " + e.what());
        }
    }
    return out;
}

// ---- datasets ----

void save_dataset(const Dataset& ds, const fs::path& dir) {
    if (auto e = validate(ds.classes); !e.empty()) fail("dataset " + ds.name + ": " + e);
    bool any_mask = false;
    std::set<std::string> ids;
    for (const DatasetEntry& entry : ds.entries) {
        const StixelFrame& f = entry.frame;
        if (auto e = validate(f); !e.empty()) fail(e);
        if (!safe_id(f.frame_id)) fail("frame id not filesystem-safe: \"" + f.frame_id + "\"");
        if (!ids.insert(f.frame_id).second) fail("duplicate frame id " + f.frame_id);
        for (const Stixel& s : f.stixels)
            if (s.label >= ds.classes.size())
                fail("frame " + f.frame_id + ": stixel label out of class-table range");
        for (const DetectionBox& b : entry.detections) {
            if (auto e = validate(b); !e.empty()) fail("frame " + f.frame_id + ": " + e);
            if (b.box_label < 0 || b.box_label >= ds.classes.size())
                fail("frame " + f.frame_id + ": box label out of class-table range");
        }
        if (entry.gt.frame_id != f.frame_id) fail("frame " + f.frame_id + ": labeling frame id mismatch");
        if (entry.gt.labels.size() != f.stixels.size())
            fail("frame " + f.frame_id + ": labeling does not cover all stixels");
        for (const Stixel& s : f.stixels)
            if (!entry.gt.labels.count(s.stixel_id))
                fail("frame " + f.frame_id + ": stixel " + std::to_string(s.stixel_id) + " unlabeled");
        if (entry.mask) {
            if (!entry.mask->valid()) fail("frame " + f.frame_id + ": malformed mask");
            if (entry.mask->width != f.width || entry.mask->height != f.height)
                fail("frame " + f.frame_id + ": mask size differs from frame size");
            any_mask = true;
        }
    }
    if (any_mask)
        for (const DatasetEntry& entry : ds.entries)
            if (!entry.mask) fail("frame " + entry.frame.frame_id + ": mask missing while others have one");

    fs::create_directories(dir);
    json manifest;
    manifest["format"] = kManifestFormat;
    manifest["name"] = ds.name;
    manifest["seed"] = ds.seed;
    manifest["frames"] = ds.entries.size();
    manifest["masks"] = any_mask;
    json classes = json::array();
    for (int i = 0; i < ds.classes.size(); ++i) {
        json c;
        c["name"] = ds.classes.name(i);
        c["mask_id"] = ds.classes.classes[i].mask_id;
        c["evaluated"] = ds.classes.is_evaluated(i);
        c["merge"] = ds.classes.name(ds.classes.merged(i));
        classes.push_back(std::move(c));
    }
    manifest["classes"] = std::move(classes);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::string frames_text, dets_text, labels_text;
    for (const DatasetEntry& entry : ds.entries) {
        frames_text += frame_to_json_line(entry.frame);
        frames_text += '\n';
        dets_text += detections_to_json_line(entry.frame.frame_id, entry.detections);
        dets_text += '\n';
        labels_text += labeling_to_json_line({entry.gt, {}});
        labels_text += '\n';
    }
    write_text(dir / "data.frames.jsonl", frames_text);
    write_text(dir / "data.dets.jsonl", dets_text);
    write_text(dir / "data.labels.jsonl", labels_text);

    if (any_mask) {
        fs::create_directories(dir / "masks");
        for (const DatasetEntry& entry : ds.entries)
            write_instance_mask(*entry.mask, dir / "masks" / (entry.frame.frame_id + ".pgm"));
    }
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path manifest_file = dir / "manifest.json";
    const json manifest = parse_json(read_text(manifest_file), manifest_file.string());
    if (field(manifest, "format", "manifest").get<std::string>() != kManifestFormat)
        fail(manifest_file.string() + ": unknown format tag");

    Dataset ds;
    ds.name = field(manifest, "name", "manifest").get<std::string>();
    const json& seed = field(manifest, "seed", "manifest");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) fail("manifest: seed must be an integer");
    ds.seed = seed.get<std::uint64_t>();
    const json& classes = field(manifest, "classes", "manifest");
    if (!classes.is_array() || classes.empty()) fail("manifest: \"classes\" must be a non-empty array");
    std::vector<std::string> merge_names;
    for (const json& c : classes) {
        ClassInfo info;
        info.name = field(c, "name", "manifest class").get<std::string>();
        info.mask_id = as_int(field(c, "mask_id", "manifest class"), "manifest class mask_id");
        const json& ev = field(c, "evaluated", "manifest class");
        if (!ev.is_boolean()) fail("manifest class: \"evaluated\" must be a boolean");
        info.evaluated = ev.get<bool>();
        merge_names.push_back(field(c, "merge", "manifest class").get<std::string>());
        ds.classes.classes.push_back(std::move(info));
    }
    for (const std::string& m : merge_names) {
        const int idx = ds.classes.index_of_name(m);
        if (idx < 0) fail("manifest: merge target \"" + m + "\" is not a class");
        ds.classes.merge.push_back(idx);
    }
    if (auto e = validate(ds.classes); !e.empty()) fail(manifest_file.string() + ": " + e);

    const std::size_t n_frames = field(manifest, "frames", "manifest").get<std::size_t>();
    const json& masks_flag = field(manifest, "masks", "manifest");
    if (!masks_flag.is_boolean()) fail("manifest: \"masks\" must be a boolean");
    const bool has_masks = masks_flag.get<bool>();

    const fs::path frames_file = dir / "data.frames.jsonl";
    const fs::path dets_file = dir / "data.dets.jsonl";
    const fs::path labels_file = dir / "data.labels.jsonl";
    const auto frame_lines = split_lines(read_text(frames_file));
    const auto det_lines = split_lines(read_text(dets_file));
    const auto label_lines = split_lines(read_text(labels_file));
    if (frame_lines.size() != n_frames || det_lines.size() != n_frames || label_lines.size() != n_frames)
        fail(dir.string() + ": line counts disagree with manifest frame count");

    for (std::size_t i = 0; i < n_frames; ++i) {
        DatasetEntry entry;
        try {
            entry.frame = frame_from_json_line(frame_lines[i]);
        } catch (const std::exception& e) {
            fail(loc(frames_file, i + 1) + ": " + e.what());
        }
        try {
            auto [fid, boxes] = detections_from_json_line(det_lines[i]);
            if (fid != entry.frame.frame_id) fail("frame id differs from frames file");
            entry.detections = std::move(boxes);
        } catch (const std::exception& e) {
            fail(loc(dets_file, i + 1) + ": " + e.what());
        }
        try {
            PredictedLabeling l = labeling_from_json_line(label_lines[i]);
            if (!l.confidence.empty()) fail("ground-truth labeling carries confidences");
            if (l.labeling.frame_id != entry.frame.frame_id) fail("frame id differs from frames file");
            entry.gt = std::move(l.labeling);
        } catch (const std::exception& e) {
            fail(loc(labels_file, i + 1) + ": " + e.what());
        }

        if (auto e = validate(entry.frame); !e.empty()) fail(loc(frames_file, i + 1) + ": " + e);
        for (const Stixel& s : entry.frame.stixels) {
            if (s.label >= ds.classes.size())
                fail(loc(frames_file, i + 1) + ": stixel label out of class-table range");
            if (!entry.gt.labels.count(s.stixel_id))
                fail(loc(labels_file, i + 1) + ": stixel " + std::to_string(s.stixel_id) + " unlabeled");
        }
        if (entry.gt.labels.size() != entry.frame.stixels.size())
            fail(loc(labels_file, i + 1) + ": labeling names unknown stixels");
        for (const DetectionBox& b : entry.detections) {
            if (auto e = validate(b); !e.empty()) fail(loc(dets_file, i + 1) + ": " + e);
            if (b.box_label < 0 || b.box_label >= ds.classes.size())
                fail(loc(dets_file, i + 1) + ": box label out of class-table range");
        }

        if (has_masks) {
            const fs::path mask_file = dir / "masks" / (entry.frame.frame_id + ".pgm");
            InstanceMask m = import_instance_mask(mask_file, "id1000");
            if (m.width != entry.frame.width || m.height != entry.frame.height)
                fail(mask_file.string() + ": mask size differs from frame size");
            entry.mask = std::move(m);
        }
        ds.entries.push_back(std::move(entry));
    }
    return ds;
}

// ---- masks ----

void write_instance_mask(const InstanceMask& mask, const fs::path& file) {
    if (!mask.valid()) fail("malformed mask");
    std::string out = "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n65535\n";
    out.reserve(out.size() + mask.codes.size() * 2);
    for (std::uint16_t code : mask.codes) {
        out.push_back(static_cast<char>(code >> 8));
        out.push_back(static_cast<char>(code & 0xff));
    }
    write_text(file, out);
}

namespace {

// Tokenizer over PGM headers: whitespace-separated fields, '#' comments.
struct PgmHeader {
    const std::string& text;
    std::size_t off = 0;

    std::string token(const fs::path& file) {
        while (off < text.size()) {
            const char c = text[off];
            if (c == '#') {
                while (off < text.size() && text[off] != '\n') ++off;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++off;
            } else {
                break;
            }
        }
        const std::size_t start = off;
        while (off < text.size() && !std::isspace(static_cast<unsigned char>(text[off])) &&
               text[off] != '#')
            ++off;
        if (start == off) fail(file.string() + ": truncated header");
        return text.substr(start, off - start);
    }
    int number(const fs::path& file) {
        const std::string t = token(file);
        try {
            std::size_t used = 0;
            const int v = std::stoi(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            fail(file.string() + ": bad number \"" + t + "\" in header");
        }
    }
};

} // namespace

InstanceMask import_instance_mask(const fs::path& file, const std::string& encoding) {
    if (encoding != "id1000")
        fail(file.string() + ": unknown mask encoding \"" + encoding + "\"");
    const std::string text = read_text(file);
    PgmHeader hdr{text};
    const std::string magic = hdr.token(file);
    if (magic != "P5" && magic != "P2") fail(file.string() + ": not a PGM file");
    InstanceMask mask;
    mask.width = hdr.number(file);
    mask.height = hdr.number(file);
    const int maxval = hdr.number(file);
    if (mask.width <= 0 || mask.height <= 0) fail(file.string() + ": nonpositive image size");
    if (maxval != 65535) fail(file.string() + ": expected 16-bit maxval 65535");
    const std::size_t count = static_cast<std::size_t>(mask.width) * mask.height;
    mask.codes.resize(count);
    if (magic == "P5") {
        if (hdr.off >= text.size() || !std::isspace(static_cast<unsigned char>(text[hdr.off])))
            fail(file.string() + ": missing sample separator");
        const std::size_t data = hdr.off + 1;
        if (text.size() - data != count * 2) fail(file.string() + ": sample count mismatch");
        for (std::size_t i = 0; i < count; ++i) {
            const auto hi = static_cast<unsigned char>(text[data + 2 * i]);
            const auto lo = static_cast<unsigned char>(text[data + 2 * i + 1]);
            mask.codes[i] = static_cast<std::uint16_t>((hi << 8) | lo);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const int v = hdr.number(file);
            if (v < 0 || v > maxval) fail(file.string() + ": sample outside [0, maxval]");
            mask.codes[i] = static_cast<std::uint16_t>(v);
        }
    }
    for (std::uint16_t& code : mask.codes)
        if (code > 0 && code < 1000) code = 0;
    return mask;
}

// ---- checkpoints ----

} // namespace stixelpn::ingest

namespace stixelpn {

std::string NetworkCheckpoint::validate() const {
    if (input_width <= 0) return "checkpoint: input width must be positive";
    if (extractor_widths.empty()) return "checkpoint: empty extractor";
    if (head_widths.empty()) return "checkpoint: empty head";
    for (int w : extractor_widths)
        if (w <= 0) return "checkpoint: nonpositive extractor width";
    for (int w : head_widths)
        if (w <= 0) return "checkpoint: nonpositive head width";
    if (head_tap_stage < 1 || head_tap_stage > static_cast<int>(extractor_widths.size()))
        return "checkpoint: head tap stage out of range";
    if (batch_size < 0) return "checkpoint: negative batch size";

    const std::size_t layers = layer_count();
    if (weights.size() != layers || biases.size() != layers)
        return "checkpoint: layer array count mismatch";

    std::vector<std::size_t> in_widths;
    int in = input_width;
    for (int w : extractor_widths) {
        in_widths.push_back(static_cast<std::size_t>(in));
        in = w;
    }
    in = extractor_widths[head_tap_stage - 1] + extractor_widths.back();
    for (int w : head_widths) {
        in_widths.push_back(static_cast<std::size_t>(in));
        in = w;
    }
    std::vector<int> out_widths = extractor_widths;
    out_widths.insert(out_widths.end(), head_widths.begin(), head_widths.end());

    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t want_w = in_widths[l] * static_cast<std::size_t>(out_widths[l]);
        if (weights[l].size() != want_w) return "checkpoint: weight size mismatch at layer " + std::to_string(l);
        if (biases[l].size() != static_cast<std::size_t>(out_widths[l]))
            return "checkpoint: bias size mismatch at layer " + std::to_string(l);
    }
    if (has_moments) {
        if (m_w.size() != layers || v_w.size() != layers || m_b.size() != layers || v_b.size() != layers)
            return "checkpoint: moment array count mismatch";
        for (std::size_t l = 0; l < layers; ++l)
            if (m_w[l].size() != weights[l].size() || v_w[l].size() != weights[l].size() ||
                m_b[l].size() != biases[l].size() || v_b[l].size() != biases[l].size())
                return "checkpoint: moment size mismatch at layer " + std::to_string(l);
    } else if (!m_w.empty() || !v_w.empty() || !m_b.empty() || !v_b.empty()) {
        return "checkpoint: moments present but unflagged";
    }
    if (has_feature_stats) {
        if (feature_mean.size() != static_cast<std::size_t>(input_width) ||
            feature_std.size() != static_cast<std::size_t>(input_width))
            return "checkpoint: feature stats size mismatch";
        for (double s : feature_std)
            if (!(s > 0)) return "checkpoint: nonpositive feature std";
    } else if (!feature_mean.empty() || !feature_std.empty()) {
        return "checkpoint: feature stats present but unflagged";
    }
    return "";
}

} // namespace stixelpn

namespace stixelpn::ingest {

void save_checkpoint(const NetworkCheckpoint& ckpt, const fs::path& file) {
    if (auto e = ckpt.validate(); !e.empty()) fail(e);
    std::vector<unsigned char> payload;
    put_u32(payload, static_cast<std::uint32_t>(ckpt.input_width));
    put_u32(payload, static_cast<std::uint32_t>(ckpt.extractor_widths.size()));
    for (int w : ckpt.extractor_widths) put_u32(payload, static_cast<std::uint32_t>(w));
    put_u32(payload, static_cast<std::uint32_t>(ckpt.head_widths.size()));
    for (int w : ckpt.head_widths) put_u32(payload, static_cast<std::uint32_t>(w));
    put_u32(payload, static_cast<std::uint32_t>(ckpt.head_tap_stage));
    put_u64(payload, ckpt.seed);
    put_f64(payload, ckpt.learning_rate);
    put_u32(payload, static_cast<std::uint32_t>(ckpt.batch_size));
    put_f64(payload, ckpt.beta1);
    put_f64(payload, ckpt.beta2);
    put_f64(payload, ckpt.epsilon);
    put_u64(payload, ckpt.step);
    put_u64(payload, ckpt.epochs_done);
    payload.push_back(ckpt.has_feature_stats ? 1 : 0);
    if (ckpt.has_feature_stats) {
        put_f64_array(payload, ckpt.feature_mean);
        put_f64_array(payload, ckpt.feature_std);
    }
    payload.push_back(ckpt.has_moments ? 1 : 0);
    for (std::size_t l = 0; l < ckpt.layer_count(); ++l) {
        put_u64(payload, ckpt.weights[l].size());
        put_f64_array(payload, ckpt.weights[l]);
        put_u64(payload, ckpt.biases[l].size());
        put_f64_array(payload, ckpt.biases[l]);
        if (ckpt.has_moments) {
            put_f64_array(payload, ckpt.m_w[l]);
            put_f64_array(payload, ckpt.v_w[l]);
            put_f64_array(payload, ckpt.m_b[l]);
            put_f64_array(payload, ckpt.v_b[l]);
        }
    }

    std::vector<unsigned char> bytes;
    bytes.reserve(payload.size() + 20);
    bytes.insert(bytes.end(), kCkptMagic, kCkptMagic + 8);
    put_u32(bytes, kCkptVersion);
    put_u64(bytes, payload.size());
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    write_text(file, std::string(bytes.begin(), bytes.end()));
}

NetworkCheckpoint load_checkpoint(const fs::path& file) {
    const std::string text = read_text(file);
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    if (text.size() < 20 || std::memcmp(bytes, kCkptMagic, 8) != 0)
        fail(file.string() + ": not a checkpoint file");
    Cursor cur{bytes + 8, text.size() - 8, 0, file.string()};
    const std::uint32_t version = cur.u32();
    if (version != kCkptVersion)
        fail(file.string() + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t payload_len = cur.u64();
    if (payload_len != text.size() - 20) fail(file.string() + ": payload length mismatch");

    NetworkCheckpoint ckpt;
    ckpt.version = version;
    ckpt.input_width = static_cast<int>(cur.u32());
    const std::uint32_t n_ext = cur.u32();
    if (n_ext > 64) fail(file.string() + ": implausible extractor depth");
    for (std::uint32_t i = 0; i < n_ext; ++i) ckpt.extractor_widths.push_back(static_cast<int>(cur.u32()));
    const std::uint32_t n_head = cur.u32();
    if (n_head > 64) fail(file.string() + ": implausible head depth");
    for (std::uint32_t i = 0; i < n_head; ++i) ckpt.head_widths.push_back(static_cast<int>(cur.u32()));
    ckpt.head_tap_stage = static_cast<int>(cur.u32());
    ckpt.seed = cur.u64();
    ckpt.learning_rate = cur.f64();
    ckpt.batch_size = static_cast<int>(cur.u32());
    ckpt.beta1 = cur.f64();
    ckpt.beta2 = cur.f64();
    ckpt.epsilon = cur.f64();
    ckpt.step = cur.u64();
    ckpt.epochs_done = cur.u64();
    ckpt.has_feature_stats = cur.u8() != 0;
    if (ckpt.has_feature_stats) {
        ckpt.feature_mean = cur.f64_array(static_cast<std::size_t>(ckpt.input_width));
        ckpt.feature_std = cur.f64_array(static_cast<std::size_t>(ckpt.input_width));
    }
    ckpt.has_moments = cur.u8() != 0;
    const std::size_t layers = ckpt.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::uint64_t wn = cur.u64();
        if (wn > (std::uint64_t(1) << 28)) fail(file.string() + ": implausible weight count");
        ckpt.weights.push_back(cur.f64_array(static_cast<std::size_t>(wn)));
        const std::uint64_t bn = cur.u64();
        if (bn > (std::uint64_t(1) << 20)) fail(file.string() + ": implausible bias count");
        ckpt.biases.push_back(cur.f64_array(static_cast<std::size_t>(bn)));
        if (ckpt.has_moments) {
            ckpt.m_w.push_back(cur.f64_array(static_cast<std::size_t>(wn)));
            ckpt.v_w.push_back(cur.f64_array(static_cast<std::size_t>(wn)));
            ckpt.m_b.push_back(cur.f64_array(static_cast<std::size_t>(bn)));
            ckpt.v_b.push_back(cur.f64_array(static_cast<std::size_t>(bn)));
        }
    }
    if (cur.off != cur.n) fail(file.string() + ": trailing bytes after payload");
    if (auto e = ckpt.validate(); !e.empty()) fail(file.string() + ": " + e);
    return ckpt;
}

} // namespace stixelpn::ingest
