#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stixelpn/core.h"
#include "stixelpn/ingest.h"

namespace stixelpn::gtgen {

// Overlap bookkeeping for one stixel: every instance code found under its
// rectangle with the fraction of rectangle pixels it covers, plus the winner
// after thresholding (background unless the best fraction exceeds t_ov).
struct OverlapAssignment {
    int stixel_id = 0;
    std::vector<std::pair<std::uint16_t, double>> fractions;  // code -> fraction, code ascending
    InstanceId winner = InstanceId::background();
    std::uint16_t winner_code = 0;  // 0 when background
};

// Fraction of the stixel rectangle's pixels carrying `code`. The rectangle is
// rasterized by pixel centers with half-open bounds; a rectangle thinner than
// a pixel step may cover zero centers, which counts as fraction 0.
double overlap_fraction(const Stixel& stixel, const InstanceMask& mask, std::uint16_t code);

// Winner by maximum overlap, background unless the maximum exceeds t_ov
// strictly; equal fractions resolve to the smaller instance code. The
// InstanceId's class index comes from the class table (code / 1000 is the
// mask id); its counter is the raw code remainder, not yet densified.
OverlapAssignment assign_stixel(const Stixel& stixel, const InstanceMask& mask, double t_ov,
                                const ClassTable& classes);

// assign_stixel over the frame, then instance counters re-densified per class
// in ascending mask-code order.
InstanceLabeling generate_gt(const StixelFrame& frame, const InstanceMask& mask, double t_ov,
                             const ClassTable& classes);

// Scores produced by the sweep evaluator: mean AP over the threshold ladder,
// AP at IoU 0.50, and per-class AP keyed by merged class name.
struct SweepScore {
    double mean_ap = 0;
    double mean_ap50 = 0;
    std::map<std::string, double> per_class_ap;
};

// Evaluates one threshold's generated GT, presented as predictions with
// confidence 1, against whatever reference the closure carries (typically
// the pixel-level masks).
using SweepEvaluator = std::function<SweepScore(const std::vector<PredictedLabeling>&)>;

struct SweepRow {
    double t_ov = 0;
    SweepScore score;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double best_t_ov = 0;  // argmax of the chosen criterion; ties -> smaller threshold
};

// Generates GT at each threshold for every (frame, mask) pair and scores it.
// `select_by_ap50` switches the argmax criterion from mean AP to AP50.
SweepResult sweep_t_ov(const std::vector<std::pair<const StixelFrame*, const InstanceMask*>>& data,
                       const std::vector<double>& thresholds, const ClassTable& classes,
                       const SweepEvaluator& evaluator, bool select_by_ap50 = false);

// threshold, ap, ap50, then one column per evaluated merged class.
std::string sweep_csv(const SweepResult& result, const ClassTable& classes);

} // namespace stixelpn::gtgen
