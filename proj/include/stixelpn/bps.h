#pragma once

#include <map>
#include <string>
#include <vector>

#include "stixelpn/core.h"
#include "stixelpn/filter.h"
#include "stixelpn/pointnet.h"

// Best Prediction Selection: fuses per-RoI binary segmentations into one
// frame-wide instance labeling. A stixel seen by no RoI stays background;
// seen by one RoI it joins that RoI's instance iff pc exceeds t_conf; seen by
// several it goes to the passing vote with the highest w_bb*c_bb + w_pc*pc.

namespace stixelpn::bps {

struct Vote {
    int stixel_id = 0;
    int roi_index = 0;  // position after the confidence pre-sort
    double pc = 0.0;
    double c_bb = 0.0;
    int box_label = 0;
};

struct BpsConfig {
    double t_conf = 0.5;
    double w_bb = 0.75;
    double w_pc = 0.25;
};
std::string validate(const BpsConfig& cfg);

// RoIs are reordered by descending box confidence (stable) before indexing,
// so vote tie-breaks toward the lower index favor the more confident box.
// preds[i] must hold one pc per rois[i].captured entry.
std::map<int, std::vector<Vote>> collect_votes(const StixelFrame& frame,
                                               const std::vector<filter::RoiSample>& rois,
                                               const std::vector<pointnet::RoiPrediction>& preds);

// Resolves votes to an instance labeling covering every frame stixel.
// Instance ids carry the winning RoI's box label and a dense per-class
// counter over surviving RoIs in sorted order; RoIs winning no stixel emit
// no instance. Instance confidence is the source RoI's box confidence.
PredictedLabeling select(const StixelFrame& frame, const std::map<int, std::vector<Vote>>& votes,
                         const BpsConfig& cfg);

PredictedLabeling segment_frame(const StixelFrame& frame,
                                const std::vector<filter::RoiSample>& rois,
                                const std::vector<pointnet::RoiPrediction>& preds,
                                const BpsConfig& cfg);

}  // namespace stixelpn::bps
