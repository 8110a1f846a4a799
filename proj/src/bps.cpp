#include "stixelpn/bps.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stixelpn::bps {

std::string validate(const BpsConfig& cfg) {
    std::ostringstream err;
    if (!(cfg.t_conf >= 0.0 && cfg.t_conf <= 1.0)) err << "t_conf must lie in [0,1]; ";
    if (cfg.w_bb < 0.0 || cfg.w_pc < 0.0) err << "weights must be nonnegative; ";
    if (std::abs(cfg.w_bb + cfg.w_pc - 1.0) > 1e-12) err << "weights must sum to 1; ";
    return err.str();
}

std::map<int, std::vector<Vote>> collect_votes(const StixelFrame& frame,
                                               const std::vector<filter::RoiSample>& rois,
                                               const std::vector<pointnet::RoiPrediction>& preds) {
    if (rois.size() != preds.size())
        throw std::invalid_argument("collect_votes: one prediction per RoI");
    std::vector<int> order(rois.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rois[a].roi.source.box_conf > rois[b].roi.source.box_conf;
    });

    std::map<int, std::vector<Vote>> votes;
    for (const Stixel& s : frame.stixels) votes[s.stixel_id];
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const filter::RoiSample& roi = rois[order[rank]];
        const pointnet::RoiPrediction& pred = preds[order[rank]];
        if (pred.pc.size() != roi.captured.size())
            throw std::invalid_argument("collect_votes: one pc per captured stixel");
        for (std::size_t i = 0; i < roi.captured.size(); ++i) {
            const auto it = votes.find(roi.captured[i]);
            if (it == votes.end())
                throw std::invalid_argument("collect_votes: captured stixel not in frame");
            Vote v;
            v.stixel_id = roi.captured[i];
            v.roi_index = static_cast<int>(rank);
            v.pc = pred.pc[i];
            v.c_bb = roi.roi.source.box_conf;
            v.box_label = roi.roi.source.box_label;
            it->second.push_back(v);
        }
    }
    return votes;
}

PredictedLabeling select(const StixelFrame& frame, const std::map<int, std::vector<Vote>>& votes,
                         const BpsConfig& cfg) {
    const std::string err = validate(cfg);
    if (!err.empty()) throw std::invalid_argument("select: " + err);

    // winning RoI per stixel; votes are stored in ascending roi_index order
    // so the strict comparison breaks score ties toward the lower index
    std::map<int, int> winner;
    for (const auto& [sid, list] : votes) {
        int best_roi = -1;
        double best_score = 0.0;
        for (const Vote& v : list) {
            if (!(v.pc > cfg.t_conf)) continue;
            const double score = cfg.w_bb * v.c_bb + cfg.w_pc * v.pc;
            if (best_roi < 0 || score > best_score) {
                best_roi = v.roi_index;
                best_score = score;
            }
        }
        winner[sid] = best_roi;
    }

    // surviving RoIs become instances, numbered densely per class in sorted
    // RoI order; the instance inherits the box confidence
    std::map<int, Vote> roi_info;
    for (const auto& [sid, list] : votes)
        for (const Vote& v : list) roi_info.emplace(v.roi_index, v);
    std::map<int, InstanceId> roi_instance;
    std::map<int, int> class_counter;
    PredictedLabeling out;
    out.labeling.frame_id = frame.frame_id;
    for (const auto& [roi, info] : roi_info) {
        bool survives = false;
        for (const auto& [sid, w] : winner)
            if (w == roi) {
                survives = true;
                break;
            }
        if (!survives) continue;
        const InstanceId inst{info.box_label, ++class_counter[info.box_label]};
        roi_instance[roi] = inst;
        out.confidence[inst] = info.c_bb;
    }

    for (const Stixel& s : frame.stixels) {
        const auto it = winner.find(s.stixel_id);
        out.labeling.labels[s.stixel_id] = it != winner.end() && it->second >= 0
                                               ? roi_instance.at(it->second)
                                               : InstanceId::background();
    }
    return out;
}

PredictedLabeling segment_frame(const StixelFrame& frame,
                                const std::vector<filter::RoiSample>& rois,
                                const std::vector<pointnet::RoiPrediction>& preds,
                                const BpsConfig& cfg) {
    return select(frame, collect_votes(frame, rois, preds), cfg);
}

}  // namespace stixelpn::bps
