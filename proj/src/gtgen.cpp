#include "stixelpn/gtgen.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stixelpn::gtgen {
namespace {

struct PixelSpan {
    int u0, u1, v0, v1;  // half-open pixel index ranges
};

// Pixel (u, v) belongs to the rectangle iff its center (u+.5, v+.5) lies in
// the half-open rect.
PixelSpan rasterize(const Rect& r) {
    PixelSpan s;
    s.u0 = static_cast<int>(std::ceil(r.u_tl - 0.5));
    s.u1 = static_cast<int>(std::ceil(r.u_br - 0.5));
    s.v0 = static_cast<int>(std::ceil(r.v_tl - 0.5));
    s.v1 = static_cast<int>(std::ceil(r.v_br - 0.5));
    return s;
}

std::vector<std::pair<std::uint16_t, double>> count_codes(const Stixel& stixel,
                                                          const InstanceMask& mask) {
    if (rect_area(stixel.rect()) <= 0) throw std::invalid_argument("zero-area stixel");
    PixelSpan s = rasterize(stixel.rect());
    if (s.u0 < 0 || s.v0 < 0 || s.u1 > mask.width || s.v1 > mask.height)
        throw std::invalid_argument("stixel rectangle outside mask bounds");

    std::map<std::uint16_t, long> counts;
    long total = 0;
    for (int v = s.v0; v < s.v1; ++v)
        for (int u = s.u0; u < s.u1; ++u) {
            ++total;
            const std::uint16_t code = mask.at(u, v);
            if (code != 0) ++counts[code];
        }

    std::vector<std::pair<std::uint16_t, double>> fractions;
    for (const auto& [code, n] : counts)
        fractions.emplace_back(code, total > 0 ? static_cast<double>(n) / total : 0.0);
    return fractions;
}

} // namespace

double overlap_fraction(const Stixel& stixel, const InstanceMask& mask, std::uint16_t code) {
    if (code == 0) throw std::invalid_argument("background has no overlap fraction");
    for (const auto& [c, f] : count_codes(stixel, mask))
        if (c == code) return f;
    return 0.0;
}

OverlapAssignment assign_stixel(const Stixel& stixel, const InstanceMask& mask, double t_ov,
                                const ClassTable& classes) {
    if (!(t_ov > 0) || t_ov > 1) throw std::invalid_argument("t_ov outside (0,1]");
    OverlapAssignment a;
    a.stixel_id = stixel.stixel_id;
    a.fractions = count_codes(stixel, mask);

    double best = 0;
    std::uint16_t best_code = 0;
    for (const auto& [code, f] : a.fractions)
        if (f > best) {  // map order is code-ascending, so ties keep the smaller code
            best = f;
            best_code = code;
        }
    if (best_code != 0 && best > t_ov) {
        const int cls = classes.index_of_mask_id(best_code / 1000);
        if (cls < 0)
            throw std::invalid_argument("mask code " + std::to_string(best_code) +
                                        " has no class in the table");
        a.winner = InstanceId{cls, best_code % 1000};
        a.winner_code = best_code;
    }
    return a;
}

InstanceLabeling generate_gt(const StixelFrame& frame, const InstanceMask& mask, double t_ov,
                             const ClassTable& classes) {
    if (frame.width != mask.width || frame.height != mask.height)
        throw std::invalid_argument("frame and mask dimensions disagree");

    std::vector<OverlapAssignment> assignments;
    assignments.reserve(frame.stixels.size());
    for (const Stixel& s : frame.stixels)
        assignments.push_back(assign_stixel(s, mask, t_ov, classes));

    // densify counters per class over the surviving codes, ascending
    std::map<std::uint16_t, InstanceId> rename;
    for (const OverlapAssignment& a : assignments)
        if (a.winner_code != 0) rename.emplace(a.winner_code, InstanceId::background());
    std::map<int, int> next_counter;
    for (auto& [code, id] : rename) {
        const int cls = classes.index_of_mask_id(code / 1000);
        id = InstanceId{cls, ++next_counter[cls]};
    }

    InstanceLabeling out;
    out.frame_id = frame.frame_id;
    for (const OverlapAssignment& a : assignments)
        out.labels[a.stixel_id] =
            a.winner_code != 0 ? rename.at(a.winner_code) : InstanceId::background();
    return out;
}

SweepResult sweep_t_ov(const std::vector<std::pair<const StixelFrame*, const InstanceMask*>>& data,
                       const std::vector<double>& thresholds, const ClassTable& classes,
                       const SweepEvaluator& evaluator, bool select_by_ap50) {
    if (data.empty()) throw std::invalid_argument("sweep needs at least one frame");
    if (thresholds.empty()) throw std::invalid_argument("empty threshold list");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0) || thresholds[i] > 1)
            throw std::invalid_argument("threshold outside (0,1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw std::invalid_argument("thresholds must be strictly increasing");
    }

    SweepResult result;
    double best = -1;
    for (const double t : thresholds) {
        std::vector<PredictedLabeling> preds;
        preds.reserve(data.size());
        for (const auto& [frame, mask] : data) {
            PredictedLabeling p;
            p.labeling = generate_gt(*frame, *mask, t, classes);
            for (const auto& [sid, inst] : p.labeling.labels)
                if (!inst.is_background()) p.confidence.emplace(inst, 1.0);
            preds.push_back(std::move(p));
        }
        SweepRow row;
        row.t_ov = t;
        row.score = evaluator(preds);
        const double criterion = select_by_ap50 ? row.score.mean_ap50 : row.score.mean_ap;
        if (criterion > best) {
            best = criterion;
            result.best_t_ov = t;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string sweep_csv(const SweepResult& result, const ClassTable& classes) {
    std::vector<std::string> class_columns;
    for (int i = 0; i < classes.size(); ++i)
        if (classes.is_evaluated(i) && classes.merged(i) == i)
            class_columns.push_back(classes.name(i));

    std::ostringstream os;
    os << "t_ov,ap,ap50";
    for (const std::string& name : class_columns) os << ",ap_" << name;
    os << "\n";
    for (const SweepRow& row : result.rows) {
        os << row.t_ov << "," << row.score.mean_ap << "," << row.score.mean_ap50;
        for (const std::string& name : class_columns) {
            const auto it = row.score.per_class_ap.find(name);
            os << ",";
            if (it != row.score.per_class_ap.end()) os << it->second;
        }
        os << "\n";
    }
    return os.str();
}

} // namespace stixelpn::gtgen
