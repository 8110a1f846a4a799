#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stixelpn/core.h"
#include "stixelpn/ingest.h"
#include "stixelpn/pointnet.h"

// Instance-segmentation scoring (stixel-level on rectangle unions,
// mask-level on pixels) plus the component runtime benchmark.

namespace stixelpn::eval {

inline constexpr int kIouThresholds = 10;  // 0.50, 0.55, ..., 0.95
double iou_threshold(int index);

// Exact IoU of the two pixel regions formed by unioning each set's stixel
// rectangles (coordinate-compressed cell decomposition, no rasterization).
double instance_iou(const std::vector<int>& a, const std::vector<int>& b,
                    const StixelFrame& frame);

struct MatchResult {
    std::vector<std::pair<InstanceId, InstanceId>> matches;  // pred, gt
    std::vector<InstanceId> false_positives;
    std::vector<InstanceId> false_negatives;
};

// Greedy per-frame matching: predictions in descending confidence (area,
// then id break ties) claim the unmatched same-merged-class GT instance
// with the highest IoU strictly above the threshold.
MatchResult match_instances(const StixelFrame& frame, const PredictedLabeling& pred,
                            const InstanceLabeling& gt, double threshold,
                            const ClassTable& classes);

struct MatchCounts {
    int tp = 0, fp = 0, fn = 0;
};

struct ClassAp {
    double ap = 0.0;
    double ap50 = 0.0;
    bool excluded = false;  // no predictions and no GT anywhere
    std::array<MatchCounts, kIouThresholds> counts{};
};

struct ApReport {
    std::map<int, ClassAp> per_class;  // merged class index
    double mean_ap = 0.0;
    double mean_ap50 = 0.0;
};

struct EvalEntry {
    const StixelFrame* frame = nullptr;
    const InstanceLabeling* gt = nullptr;
    const PredictedLabeling* pred = nullptr;
};

// Cityscapes-style AP: per class and IoU threshold, one PR curve over
// confidence-ranked predictions pooled across frames, all-point
// interpolation; class AP averages the ten thresholds.
ApReport average_precision(const std::vector<EvalEntry>& entries, const ClassTable& classes);

struct MaskEvalEntry {
    const StixelFrame* frame = nullptr;
    const InstanceMask* mask = nullptr;
    const PredictedLabeling* pred = nullptr;
};

// Same protocol with pixel-level IoU: predictions rasterize their stixel
// rectangles; GT instances are the mask's code regions.
ApReport mask_average_precision(const std::vector<MaskEvalEntry>& entries,
                                const ClassTable& classes);

std::string ap_csv(const ApReport& report, const ClassTable& classes);
std::string ap_table(const ApReport& report, const ClassTable& classes);

struct BenchRow {
    int n_stixels = 0;
    int n_boxes = 0;
    int n_features = 0;
    int n_rois = 0;        // RoIs surviving capture
    long n_rows = 0;       // total captured stixel rows through the model
    double filtering_ms = 0.0;
    double model_ms = 0.0;
    double bps_ms = 0.0;
    double overall_ms = 0.0;
    double fps = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    int runs = 0;
};

// Times filtering, f32 model forward, and BPS in isolation plus the composed
// pipeline, averaged over `runs` after 10 warmups, on the deterministic
// synthetic workload. Feature widths beyond the base ten cycle the base
// columns.
BenchRow run_benchmark(const pointnet::ModelStateF32& model, int n_stixels, int n_boxes,
                       int runs, std::uint64_t seed);

std::string bench_csv(const BenchReport& report);
std::string bench_table(const BenchReport& report);

}  // namespace stixelpn::eval
