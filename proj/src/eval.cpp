#include "stixelpn/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stixelpn/bps.h"
#include "stixelpn/filter.h"
#include "stixelpn/synth.h"

namespace stixelpn::eval {

double iou_threshold(int index) {
    if (index < 0 || index >= kIouThresholds)
        throw std::out_of_range("iou_threshold: bad index");
    return static_cast<double>(50 + 5 * index) / 100.0;
}

namespace {

std::vector<Rect> rects_of(const std::vector<int>& ids, const StixelFrame& frame) {
    std::vector<Rect> rects;
    rects.reserve(ids.size());
    for (int id : ids) {
        const Stixel* s = frame.find(id);
        if (s == nullptr) throw std::invalid_argument("instance_iou: stixel not in frame");
        rects.push_back(s->rect());
    }
    return rects;
}

// cell decomposition over the union of both edge sets; every cell lies
// entirely inside or outside each rectangle
void union_areas(const std::vector<Rect>& a, const std::vector<Rect>& b, double* area_a,
                 double* area_b, double* inter) {
    std::vector<double> us, vs;
    for (const auto* rects : {&a, &b})
        for (const Rect& r : *rects) {
            us.push_back(r.u_tl);
            us.push_back(r.u_br);
            vs.push_back(r.v_tl);
            vs.push_back(r.v_br);
        }
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    if (us.size() < 2 || vs.size() < 2) {
        *area_a = *area_b = *inter = 0.0;
        return;
    }
    const int nu = static_cast<int>(us.size()) - 1;
    const int nv = static_cast<int>(vs.size()) - 1;
    std::vector<char> in_a(static_cast<std::size_t>(nu) * nv, 0);
    std::vector<char> in_b(in_a.size(), 0);
    auto mark = [&](const std::vector<Rect>& rects, std::vector<char>& grid) {
        for (const Rect& r : rects) {
            const int u0 = static_cast<int>(std::lower_bound(us.begin(), us.end(), r.u_tl) -
                                            us.begin());
            const int u1 = static_cast<int>(std::lower_bound(us.begin(), us.end(), r.u_br) -
                                            us.begin());
            const int v0 = static_cast<int>(std::lower_bound(vs.begin(), vs.end(), r.v_tl) -
                                            vs.begin());
            const int v1 = static_cast<int>(std::lower_bound(vs.begin(), vs.end(), r.v_br) -
                                            vs.begin());
            for (int i = u0; i < u1; ++i)
                for (int j = v0; j < v1; ++j) grid[static_cast<std::size_t>(i) * nv + j] = 1;
        }
    };
    mark(a, in_a);
    mark(b, in_b);
    *area_a = *area_b = *inter = 0.0;
    for (int i = 0; i < nu; ++i) {
        const double du = us[i + 1] - us[i];
        for (int j = 0; j < nv; ++j) {
            const double cell = du * (vs[j + 1] - vs[j]);
            const std::size_t k = static_cast<std::size_t>(i) * nv + j;
            if (in_a[k]) *area_a += cell;
            if (in_b[k]) *area_b += cell;
            if (in_a[k] && in_b[k]) *inter += cell;
        }
    }
}

struct Region {
    InstanceId id;
    double conf = 1.0;
    double area = 0.0;
    int merged_cls = 0;
    std::vector<int> stixels;
};

std::vector<Region> regions_of(const StixelFrame& frame, const InstanceLabeling& labeling,
                               const std::map<InstanceId, double>* confidence,
                               const ClassTable& classes) {
    std::map<InstanceId, Region> by_id;
    for (const auto& [sid, inst] : labeling.labels) {
        if (inst.is_background()) continue;
        Region& r = by_id[inst];
        r.id = inst;
        r.merged_cls = classes.merged(inst.cls);
        r.stixels.push_back(sid);
    }
    std::vector<Region> out;
    for (auto& [id, r] : by_id) {
        if (confidence != nullptr) {
            const auto it = confidence->find(id);
            r.conf = it != confidence->end() ? it->second : 1.0;
        }
        double other = 0.0, inter = 0.0;
        union_areas(rects_of(r.stixels, frame), {}, &r.area, &other, &inter);
        out.push_back(std::move(r));
    }
    // confidence-descending order with deterministic tie-breaks
    std::sort(out.begin(), out.end(), [](const Region& a, const Region& b) {
        if (a.conf != b.conf) return a.conf > b.conf;
        if (a.area != b.area) return a.area > b.area;
        return a.id < b.id;
    });
    return out;
}

// per frame and class: ranked predictions with IoUs against that class's GT
struct PredEntry {
    double conf = 0.0;
    double area = 0.0;
    InstanceId id;
    std::vector<std::pair<int, double>> iou;  // (gt index within class, iou)
};

struct ClassFrame {
    std::vector<PredEntry> preds;
    int n_gt = 0;
};

using FrameTable = std::map<int, ClassFrame>;

// greedy matching at one threshold; returns per-pred TP flags and counts
std::vector<char> match_class(const ClassFrame& cf, double threshold, MatchCounts* counts) {
    std::vector<char> taken(cf.n_gt, 0);
    std::vector<char> tp(cf.preds.size(), 0);
    for (std::size_t p = 0; p < cf.preds.size(); ++p) {
        int best_gt = -1;
        double best_iou = threshold;
        for (const auto& [g, iou] : cf.preds[p].iou)
            if (!taken[g] && iou > best_iou) {
                best_iou = iou;
                best_gt = g;
            }
        if (best_gt >= 0) {
            taken[best_gt] = 1;
            tp[p] = 1;
        }
    }
    if (counts != nullptr) {
        const int n_tp = static_cast<int>(std::count(tp.begin(), tp.end(), 1));
        counts->tp += n_tp;
        counts->fp += static_cast<int>(tp.size()) - n_tp;
        counts->fn += cf.n_gt - n_tp;
    }
    return tp;
}

double ap_all_point(std::vector<std::pair<double, char>> ranked, long n_gt) {
    if (n_gt == 0) return 0.0;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> precision, recall;
    long tp = 0, fp = 0;
    for (const auto& [conf, is_tp] : ranked) {
        if (is_tp)
            ++tp;
        else
            ++fp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }
    double ap = 0.0, envelope = 0.0;
    for (long k = static_cast<long>(ranked.size()) - 1; k >= 0; --k) {
        envelope = std::max(envelope, precision[k]);
        const double prev = k > 0 ? recall[k - 1] : 0.0;
        ap += (recall[k] - prev) * envelope;
    }
    return ap;
}

ApReport report_from_tables(const std::vector<FrameTable>& tables, const ClassTable& classes) {
    std::set<int> report_classes;
    for (int c = 0; c < classes.size(); ++c)
        if (classes.is_evaluated(c)) report_classes.insert(classes.merged(c));

    ApReport report;
    int included = 0;
    for (int cls : report_classes) {
        ClassAp row;
        long n_gt = 0;
        long n_pred = 0;
        for (const FrameTable& table : tables) {
            const auto it = table.find(cls);
            if (it == table.end()) continue;
            n_gt += it->second.n_gt;
            n_pred += static_cast<long>(it->second.preds.size());
        }
        row.excluded = n_gt == 0 && n_pred == 0;
        if (!row.excluded) {
            double sum = 0.0;
            for (int t = 0; t < kIouThresholds; ++t) {
                std::vector<std::pair<double, char>> ranked;
                for (const FrameTable& table : tables) {
                    const auto it = table.find(cls);
                    if (it == table.end()) continue;
                    const auto tp = match_class(it->second, iou_threshold(t), &row.counts[t]);
                    for (std::size_t p = 0; p < tp.size(); ++p)
                        ranked.emplace_back(it->second.preds[p].conf, tp[p]);
                }
                const double ap_t = ap_all_point(std::move(ranked), n_gt);
                sum += ap_t;
                if (t == 0) row.ap50 = ap_t;
            }
            row.ap = sum / kIouThresholds;
            report.mean_ap += row.ap;
            report.mean_ap50 += row.ap50;
            ++included;
        }
        report.per_class[cls] = row;
    }
    if (included > 0) {
        report.mean_ap /= included;
        report.mean_ap50 /= included;
    }
    return report;
}

}  // namespace

double instance_iou(const std::vector<int>& a, const std::vector<int>& b,
                    const StixelFrame& frame) {
    double area_a = 0.0, area_b = 0.0, inter = 0.0;
    union_areas(rects_of(a, frame), rects_of(b, frame), &area_a, &area_b, &inter);
    const double denom = area_a + area_b - inter;
    return denom > 0.0 ? inter / denom : 0.0;
}

MatchResult match_instances(const StixelFrame& frame, const PredictedLabeling& pred,
                            const InstanceLabeling& gt, double threshold,
                            const ClassTable& classes) {
    const auto preds = regions_of(frame, pred.labeling, &pred.confidence, classes);
    const auto gts = regions_of(frame, gt, nullptr, classes);
    std::vector<char> taken(gts.size(), 0);
    MatchResult result;
    for (const Region& p : preds) {
        int best = -1;
        double best_iou = threshold;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g] || gts[g].merged_cls != p.merged_cls) continue;
            const double iou = instance_iou(p.stixels, gts[g].stixels, frame);
            if (iou > best_iou || (best >= 0 && iou == best_iou && gts[g].id < gts[best].id)) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            taken[best] = 1;
            result.matches.emplace_back(p.id, gts[best].id);
        } else {
            result.false_positives.push_back(p.id);
        }
    }
    for (std::size_t g = 0; g < gts.size(); ++g)
        if (!taken[g]) result.false_negatives.push_back(gts[g].id);
    return result;
}

ApReport average_precision(const std::vector<EvalEntry>& entries, const ClassTable& classes) {
    std::vector<FrameTable> tables;
    tables.reserve(entries.size());
    for (const EvalEntry& e : entries) {
        if (e.frame == nullptr || e.gt == nullptr || e.pred == nullptr)
            throw std::invalid_argument("average_precision: null entry");
        const auto preds = regions_of(*e.frame, e.pred->labeling, &e.pred->confidence, classes);
        const auto gts = regions_of(*e.frame, *e.gt, nullptr, classes);
        FrameTable table;
        std::map<int, std::vector<int>> gt_by_class;  // class -> indices into gts
        for (std::size_t g = 0; g < gts.size(); ++g) {
            gt_by_class[gts[g].merged_cls].push_back(static_cast<int>(g));
            ++table[gts[g].merged_cls].n_gt;
        }
        // id-ascending GT order so equal-IoU ties resolve like match_instances
        for (auto& [cls, ids] : gt_by_class)
            std::sort(ids.begin(), ids.end(),
                      [&](int a, int b) { return gts[a].id < gts[b].id; });
        for (const Region& p : preds) {
            PredEntry entry;
            entry.conf = p.conf;
            entry.area = p.area;
            entry.id = p.id;
            const auto it = gt_by_class.find(p.merged_cls);
            if (it != gt_by_class.end())
                for (std::size_t local = 0; local < it->second.size(); ++local) {
                    const double iou =
                        instance_iou(p.stixels, gts[it->second[local]].stixels, *e.frame);
                    if (iou > 0.0) entry.iou.emplace_back(static_cast<int>(local), iou);
                }
            table[p.merged_cls].preds.push_back(std::move(entry));
        }
        tables.push_back(std::move(table));
    }
    return report_from_tables(tables, classes);
}

ApReport mask_average_precision(const std::vector<MaskEvalEntry>& entries,
                                const ClassTable& classes) {
    std::vector<FrameTable> tables;
    tables.reserve(entries.size());
    for (const MaskEvalEntry& e : entries) {
        if (e.frame == nullptr || e.mask == nullptr || e.pred == nullptr)
            throw std::invalid_argument("mask_average_precision: null entry");
        const InstanceMask& mask = *e.mask;
        const auto preds = regions_of(*e.frame, e.pred->labeling, &e.pred->confidence, classes);

        // rasterize predicted regions into a pixel grid (pixel-center rule)
        std::vector<int> grid(static_cast<std::size_t>(mask.width) * mask.height, -1);
        for (std::size_t p = 0; p < preds.size(); ++p)
            for (int sid : preds[p].stixels) {
                const Stixel* s = e.frame->find(sid);
                if (s == nullptr)
                    throw std::invalid_argument("mask_average_precision: stixel not in frame");
                const int u0 = std::max(0, static_cast<int>(std::ceil(s->u_tl - 0.5)));
                const int u1 = std::min(mask.width, static_cast<int>(std::ceil(s->u_br - 0.5)));
                const int v0 = std::max(0, static_cast<int>(std::ceil(s->v_tl - 0.5)));
                const int v1 = std::min(mask.height, static_cast<int>(std::ceil(s->v_br - 0.5)));
                for (int v = v0; v < v1; ++v)
                    for (int u = u0; u < u1; ++u)
                        grid[static_cast<std::size_t>(v) * mask.width + u] =
                            static_cast<int>(p);
            }

        // pixel counts per predicted region, GT code, and joint pair
        std::vector<long> pred_pix(preds.size(), 0);
        std::map<std::uint16_t, long> gt_pix;
        std::map<std::pair<int, std::uint16_t>, long> joint;
        for (int v = 0; v < mask.height; ++v)
            for (int u = 0; u < mask.width; ++u) {
                const int p = grid[static_cast<std::size_t>(v) * mask.width + u];
                const std::uint16_t code = mask.at(u, v);
                if (p >= 0) ++pred_pix[p];
                if (code != 0) ++gt_pix[code];
                if (p >= 0 && code != 0) ++joint[{p, code}];
            }

        FrameTable table;
        std::map<int, std::vector<std::uint16_t>> gt_by_class;
        for (const auto& [code, pix] : gt_pix) {
            const int raw = classes.index_of_mask_id(code / 1000);
            if (raw < 0) throw std::invalid_argument("mask_average_precision: unknown mask class");
            const int cls = classes.merged(raw);
            gt_by_class[cls].push_back(code);
            ++table[cls].n_gt;
        }
        for (std::size_t p = 0; p < preds.size(); ++p) {
            PredEntry entry;
            entry.conf = preds[p].conf;
            entry.area = preds[p].area;
            entry.id = preds[p].id;
            const int cls = preds[p].merged_cls;
            const auto it = gt_by_class.find(cls);
            if (it != gt_by_class.end())
                for (std::size_t local = 0; local < it->second.size(); ++local) {
                    const std::uint16_t code = it->second[local];
                    const auto jt = joint.find({static_cast<int>(p), code});
                    if (jt == joint.end()) continue;
                    const double inter = static_cast<double>(jt->second);
                    const double denom =
                        static_cast<double>(pred_pix[p]) + static_cast<double>(gt_pix[code]) -
                        inter;
                    if (denom > 0.0) entry.iou.emplace_back(static_cast<int>(local), inter / denom);
                }
            table[cls].preds.push_back(std::move(entry));
        }
        tables.push_back(std::move(table));
    }
    return report_from_tables(tables, classes);
}

std::string ap_csv(const ApReport& report, const ClassTable& classes) {
    std::string out = "class,ap,ap50,excluded\n";
    char line[128];
    for (const auto& [cls, row] : report.per_class) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%d\n", classes.name(cls).c_str(),
                      row.ap, row.ap50, row.excluded ? 1 : 0);
        out += line;
    }
    std::snprintf(line, sizeof line, "mean,%.17g,%.17g,0\n", report.mean_ap, report.mean_ap50);
    out += line;
    return out;
}

std::string ap_table(const ApReport& report, const ClassTable& classes) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-12s %8s %8s %6s %6s %6s\n", "class", "AP", "AP50",
                  "TP50", "FP50", "FN50");
    out << line;
    for (const auto& [cls, row] : report.per_class) {
        if (row.excluded) {
            std::snprintf(line, sizeof line, "%-12s %8s %8s\n", classes.name(cls).c_str(), "-",
                          "-");
        } else {
            std::snprintf(line, sizeof line, "%-12s %8.3f %8.3f %6d %6d %6d\n",
                          classes.name(cls).c_str(), row.ap, row.ap50, row.counts[0].tp,
                          row.counts[0].fp, row.counts[0].fn);
        }
        out << line;
    }
    std::snprintf(line, sizeof line, "%-12s %8.3f %8.3f\n", "mean", report.mean_ap,
                  report.mean_ap50);
    out << line;
    return out.str();
}

namespace {

template <typename F>
double time_ms(F&& body, int runs) {
    for (int i = 0; i < 10; ++i) body();  // warmup
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < runs; ++i) body();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / runs;
}

}  // namespace

BenchRow run_benchmark(const pointnet::ModelStateF32& model, int n_stixels, int n_boxes,
                       int runs, std::uint64_t seed) {
    if (runs < 1) throw std::invalid_argument("run_benchmark: runs must be >= 1");
    const ClassTable classes = ClassTable::cityscapes_with_background();
    const auto [frame, boxes] = synth::benchmark_workload(n_stixels, n_boxes, seed);
    const filter::FilterParams params;
    const bps::BpsConfig bps_cfg;
    const int width = model.arch.input_width;

    BenchRow row;
    row.n_stixels = n_stixels;
    row.n_boxes = n_boxes;
    row.n_features = width;

    std::vector<filter::RoiSample> samples;
    row.filtering_ms = time_ms(
        [&] { samples = filter::build_frame_samples(frame, boxes, params, classes); }, runs);
    row.n_rois = static_cast<int>(samples.size());
    for (const auto& s : samples) row.n_rows += s.count();

    // widen the base features by cycling columns, once per workload
    auto widen = [&](const filter::RoiSample& s) {
        std::vector<float> out(static_cast<std::size_t>(s.count()) * width);
        for (int r = 0; r < s.count(); ++r)
            for (int c = 0; c < width; ++c)
                out[static_cast<std::size_t>(r) * width + c] = static_cast<float>(
                    s.features[static_cast<std::size_t>(r) * filter::kFeatureCount +
                               c % filter::kFeatureCount]);
        return out;
    };
    std::vector<std::vector<float>> inputs;
    inputs.reserve(samples.size());
    for (const auto& s : samples) inputs.push_back(widen(s));

    pointnet::WorkspaceF32 ws;
    std::vector<pointnet::RoiPrediction> preds(samples.size());
    auto model_pass = [&] {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const int n = samples[i].count();
            pointnet::forward_f32(model, inputs[i].data(), n, ws, ExecMode::serial);
            preds[i].pc.assign(ws.pc.begin(), ws.pc.begin() + n);
            preds[i].decision.resize(n);
            for (int r = 0; r < n; ++r) preds[i].decision[r] = preds[i].pc[r] > 0.5 ? 1 : 0;
        }
    };
    row.model_ms = time_ms(model_pass, runs);

    PredictedLabeling labeling;
    row.bps_ms = time_ms([&] { labeling = bps::segment_frame(frame, samples, preds, bps_cfg); },
                         runs);

    row.overall_ms = time_ms(
        [&] {
            auto s = filter::build_frame_samples(frame, boxes, params, classes);
            std::vector<pointnet::RoiPrediction> p(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) {
                const auto in = widen(s[i]);
                const int n = s[i].count();
                pointnet::forward_f32(model, in.data(), n, ws, ExecMode::serial);
                p[i].pc.assign(ws.pc.begin(), ws.pc.begin() + n);
                p[i].decision.resize(n);
                for (int r = 0; r < n; ++r) p[i].decision[r] = p[i].pc[r] > 0.5 ? 1 : 0;
            }
            labeling = bps::segment_frame(frame, s, p, bps_cfg);
        },
        runs);
    row.fps = 1000.0 / row.overall_ms;
    return row;
}

std::string bench_csv(const BenchReport& report) {
    std::string out = "stixels,boxes,features,rois,rows,filtering_ms,model_ms,bps_ms,overall_ms,fps\n";
    char line[192];
    for (const BenchRow& r : report.rows) {
        std::snprintf(line, sizeof line, "%d,%d,%d,%d,%ld,%.4f,%.4f,%.4f,%.4f,%.2f\n",
                      r.n_stixels, r.n_boxes, r.n_features, r.n_rois, r.n_rows, r.filtering_ms,
                      r.model_ms, r.bps_ms, r.overall_ms, r.fps);
        out += line;
    }
    return out;
}

std::string bench_table(const BenchReport& report) {
    std::ostringstream out;
    char line[192];
    std::snprintf(line, sizeof line, "%8s %6s %9s %6s %6s %10s %9s %8s %10s %7s\n", "stixels",
                  "boxes", "features", "rois", "rows", "filter_ms", "model_ms", "bps_ms",
                  "overall_ms", "fps");
    out << line;
    for (const BenchRow& r : report.rows) {
        std::snprintf(line, sizeof line, "%8d %6d %9d %6d %6ld %10.3f %9.3f %8.3f %10.3f %7.1f\n",
                      r.n_stixels, r.n_boxes, r.n_features, r.n_rois, r.n_rows, r.filtering_ms,
                      r.model_ms, r.bps_ms, r.overall_ms, r.fps);
        out << line;
    }
    out << "averaged over " << report.runs << " runs\n";
    return out.str();
}

}  // namespace stixelpn::eval
