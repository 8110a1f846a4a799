#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stixelpn/core.h"

namespace stixelpn {

// Row-major image of instance codes. Code 0 is background; any other value
// encodes mask_id * 1000 + per-class counter ("id1000" encoding).
struct InstanceMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> codes;

    std::uint16_t at(int ix, int iy) const { return codes[static_cast<std::size_t>(iy) * width + ix]; }
    std::uint16_t& at(int ix, int iy) { return codes[static_cast<std::size_t>(iy) * width + ix]; }
    bool valid() const {
        return width > 0 && height > 0 &&
               codes.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
};

struct DatasetEntry {
    StixelFrame frame;
    std::vector<DetectionBox> detections;
    InstanceLabeling gt;
    std::optional<InstanceMask> mask;
};

struct Dataset {
    std::string name;
    std::uint64_t seed = 0;
    ClassTable classes;
    std::vector<DatasetEntry> entries;
};

// Serialized training state. Layer arrays run extractor first, then head;
// weights are row-major [in x out]. ADAM moments are either present for every
// layer or absent entirely.
struct NetworkCheckpoint {
    std::uint32_t version = 1;
    int input_width = 0;
    std::vector<int> extractor_widths;
    std::vector<int> head_widths;
    int head_tap_stage = 0;

    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    int batch_size = 0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double epsilon = 0.0;
    std::uint64_t step = 0;
    std::uint64_t epochs_done = 0;

    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    bool has_moments = false;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

    bool has_feature_stats = false;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;

    std::size_t layer_count() const { return extractor_widths.size() + head_widths.size(); }
    // Empty string when structurally consistent.
    std::string validate() const;
};

namespace ingest {

// Datasets occupy a directory: manifest.json plus data.frames.jsonl,
// data.dets.jsonl, data.labels.jsonl and masks/<frame_id>.pgm when masks are
// present. All text output is canonical, so save -> load -> save is
// byte-identical.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Standalone labeling files (ground truth or predictions). Confidence maps
// are omitted from a line when empty.
void save_labelings(const std::vector<PredictedLabeling>& labelings, const std::filesystem::path& file);
std::vector<PredictedLabeling> load_labelings(const std::filesystem::path& file);

// Single-frame JSONL codecs, exposed for streaming writers.
std::string frame_to_json_line(const StixelFrame& frame);
StixelFrame frame_from_json_line(const std::string& line);
std::string detections_to_json_line(const std::string& frame_id, const std::vector<DetectionBox>& boxes);
std::pair<std::string, std::vector<DetectionBox>> detections_from_json_line(const std::string& line);
std::string labeling_to_json_line(const PredictedLabeling& labeling);
PredictedLabeling labeling_from_json_line(const std::string& line);

// 16-bit PGM, big-endian sample order per the format. Readers accept binary
// P5 and plain P2; only maxval 65535 is supported.
void write_instance_mask(const InstanceMask& mask, const std::filesystem::path& file);
// `encoding` names the code layout and must be "id1000"; anything else is an
// error rather than a silent misread. Codes in (0, 1000) do not decompose
// into (mask_id, counter) and are normalized to background on import.
InstanceMask import_instance_mask(const std::filesystem::path& file, const std::string& encoding);

void save_checkpoint(const NetworkCheckpoint& ckpt, const std::filesystem::path& file);
NetworkCheckpoint load_checkpoint(const std::filesystem::path& file);

} // namespace ingest
} // namespace stixelpn
