#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "stixelpn/core.h"
#include "stixelpn/eval.h"
#include "stixelpn/pointnet.h"
#include "stixelpn/rng.h"
#include "stixelpn/synth.h"

using namespace stixelpn;

namespace {

Stixel stx(int id, double u0, double v0, double u1, double v1) {
    Stixel s;
    s.stixel_id = id;
    s.u_tl = u0;
    s.v_tl = v0;
    s.u_br = u1;
    s.v_br = v1;
    return s;
}

StixelFrame frame_of(std::vector<Stixel> stixels, int width = 512, int height = 256) {
    std::sort(stixels.begin(), stixels.end(),
              [](const Stixel& a, const Stixel& b) { return a.stixel_id < b.stixel_id; });
    StixelFrame f;
    f.frame_id = "test";
    f.width = width;
    f.height = height;
    f.stixels = std::move(stixels);
    return f;
}

// pixel-counting IoU for integer-coordinate rectangles
double pixel_iou(const std::vector<int>& a, const std::vector<int>& b, const StixelFrame& frame,
                 int grid) {
    std::vector<char> in_a(static_cast<std::size_t>(grid) * grid, 0);
    std::vector<char> in_b(in_a.size(), 0);
    auto mark = [&](const std::vector<int>& ids, std::vector<char>& g) {
        for (int id : ids) {
            const Stixel* s = frame.find(id);
            for (int v = static_cast<int>(s->v_tl); v < static_cast<int>(s->v_br); ++v)
                for (int u = static_cast<int>(s->u_tl); u < static_cast<int>(s->u_br); ++u)
                    g[static_cast<std::size_t>(v) * grid + u] = 1;
        }
    };
    mark(a, in_a);
    mark(b, in_b);
    long na = 0, nb = 0, ni = 0;
    for (std::size_t k = 0; k < in_a.size(); ++k) {
        na += in_a[k];
        nb += in_b[k];
        ni += in_a[k] && in_b[k];
    }
    const long denom = na + nb - ni;
    return denom > 0 ? static_cast<double>(ni) / static_cast<double>(denom) : 0.0;
}

// independent all-point-interpolation AP over pooled ranked flags
double oracle_ap(std::vector<std::pair<double, char>> ranked, long n_gt) {
    if (n_gt == 0) return 0.0;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> p, r;
    long tp = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        tp += ranked[k].second;
        p.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
        r.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }
    double ap = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        double pmax = 0.0;
        for (std::size_t j = k; j < ranked.size(); ++j) pmax = std::max(pmax, p[j]);
        ap += (r[k] - prev) * pmax;
        prev = r[k];
    }
    return ap;
}

// exhaustive per-frame greedy matcher over explicit IoU tables; GT lists are
// id-ascending so ties pick the earlier entry
struct OraclePred {
    double conf = 0.0;
    std::vector<double> iou;
};

std::vector<std::pair<double, char>> oracle_match(const std::vector<OraclePred>& preds, int n_gt,
                                                  double threshold) {
    std::vector<char> taken(n_gt, 0);
    std::vector<std::pair<double, char>> out;
    for (const OraclePred& p : preds) {
        int best = -1;
        double best_iou = threshold;
        for (int g = 0; g < n_gt; ++g)
            if (!taken[g] && p.iou[g] > best_iou) {
                best_iou = p.iou[g];
                best = g;
            }
        if (best >= 0) taken[best] = 1;
        out.emplace_back(p.conf, best >= 0 ? 1 : 0);
    }
    return out;
}

bool reports_equal(const eval::ApReport& a, const eval::ApReport& b) {
    if (a.per_class.size() != b.per_class.size()) return false;
    for (const auto& [cls, row] : a.per_class) {
        const auto it = b.per_class.find(cls);
        if (it == b.per_class.end()) return false;
        if (row.ap != it->second.ap || row.ap50 != it->second.ap50 ||
            row.excluded != it->second.excluded)
            return false;
    }
    return a.mean_ap == b.mean_ap && a.mean_ap50 == b.mean_ap50;
}

}  // namespace

TEST_CASE("iou thresholds cover 0.50 to 0.95 in 0.05 steps") {
    CHECK(eval::kIouThresholds == 10);
    CHECK(eval::iou_threshold(0) == 0.5);
    CHECK(eval::iou_threshold(5) == 0.75);
    CHECK(eval::iou_threshold(9) == 0.95);
    CHECK_THROWS_AS(eval::iou_threshold(-1), std::out_of_range);
    CHECK_THROWS_AS(eval::iou_threshold(10), std::out_of_range);
}

TEST_CASE("instance iou: identity, disjoint, and hand-computed overlap") {
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 5, 0, 15, 10),
                                 stx(3, 100, 100, 110, 110), stx(4, 0, 0, 15, 10)});
    CHECK(eval::instance_iou({1}, {1}, frame) == 1.0);
    CHECK(eval::instance_iou({1}, {3}, frame) == 0.0);
    CHECK(eval::instance_iou({1}, {2}, frame) == doctest::Approx(50.0 / 150.0));
    // overlapping members union to the same region as the single wide rect
    CHECK(eval::instance_iou({1, 2}, {4}, frame) == 1.0);
    CHECK_THROWS_AS(eval::instance_iou({9}, {1}, frame), std::invalid_argument);
}

TEST_CASE("instance iou equals a pixel-counting oracle on integer rects") {
    Rng rng(404);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Stixel> stixels;
        for (int id = 0; id < 6; ++id) {
            const int u0 = rng.uniform_int(0, 24);
            const int v0 = rng.uniform_int(0, 24);
            stixels.push_back(stx(id, u0, v0, u0 + rng.uniform_int(1, 8),
                                  v0 + rng.uniform_int(1, 8)));
        }
        const auto frame = frame_of(stixels, 32, 32);
        std::vector<int> a, b;
        for (int id = 0; id < 6; ++id) {
            if (rng.bernoulli(0.5)) a.push_back(id);
            if (rng.bernoulli(0.5)) b.push_back(id);
        }
        if (a.empty() || b.empty()) continue;
        const double got = eval::instance_iou(a, b, frame);
        CHECK(got == pixel_iou(a, b, frame, 32));
        CHECK(got == eval::instance_iou(b, a, frame));
    }
}

TEST_CASE("matching: perfect prediction has no errors") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 20, 0, 30, 10)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    gt.labels[2] = {car, 2};
    PredictedLabeling pred;
    pred.labeling = gt;
    const auto res = eval::match_instances(frame, pred, gt, 0.5, classes);
    CHECK(res.matches.size() == 2);
    CHECK(res.false_positives.empty());
    CHECK(res.false_negatives.empty());
    for (const auto& [p, g] : res.matches) CHECK(p == g);
}

TEST_CASE("matching: empty sides become pure false negatives or positives") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const auto frame = frame_of({stx(1, 0, 0, 10, 10)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    PredictedLabeling none;
    auto res = eval::match_instances(frame, none, gt, 0.5, classes);
    CHECK(res.matches.empty());
    CHECK(res.false_negatives.size() == 1);
    PredictedLabeling pred;
    pred.labeling = gt;
    res = eval::match_instances(frame, pred, InstanceLabeling{}, 0.5, classes);
    CHECK(res.false_positives.size() == 1);
    CHECK(res.false_negatives.empty());
}

TEST_CASE("matching threshold is strict") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    // prediction covers exactly half of the GT region
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 0, 0, 10, 5)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    PredictedLabeling pred;
    pred.labeling.labels[2] = {car, 1};
    CHECK(eval::match_instances(frame, pred, gt, 0.5, classes).matches.empty());
    CHECK(eval::match_instances(frame, pred, gt, 0.49, classes).matches.size() == 1);
}

TEST_CASE("matching: higher confidence claims the ground truth first") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 0, 0, 10, 8), stx(3, 0, 0, 10, 6)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    PredictedLabeling pred;
    pred.labeling.labels[2] = {car, 1};
    pred.labeling.labels[3] = {car, 2};
    pred.confidence[{car, 1}] = 0.4;  // iou 0.8 but outranked
    pred.confidence[{car, 2}] = 0.9;  // iou 0.6
    const auto res = eval::match_instances(frame, pred, gt, 0.5, classes);
    REQUIRE(res.matches.size() == 1);
    CHECK(res.matches[0].first == InstanceId{car, 2});
    CHECK(res.false_positives.size() == 1);
    CHECK(res.false_positives[0] == InstanceId{car, 1});
}

TEST_CASE("matching: equal confidence ranks larger area first") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 0, 0, 10, 8), stx(3, 0, 0, 10, 6)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    PredictedLabeling pred;
    pred.labeling.labels[2] = {car, 5};  // area 80
    pred.labeling.labels[3] = {car, 4};  // area 60
    pred.confidence[{car, 5}] = 0.7;
    pred.confidence[{car, 4}] = 0.7;
    const auto res = eval::match_instances(frame, pred, gt, 0.5, classes);
    REQUIRE(res.matches.size() == 1);
    CHECK(res.matches[0].first == InstanceId{car, 5});
}

TEST_CASE("matching never crosses merged classes") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const int person = classes.index_of_name("person");
    const int train = classes.index_of_name("train");
    const int bus = classes.index_of_name("bus");
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 0, 0, 10, 10)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    PredictedLabeling pred;
    pred.labeling.labels[2] = {person, 1};
    auto res = eval::match_instances(frame, pred, gt, 0.5, classes);
    CHECK(res.matches.empty());
    CHECK(res.false_positives.size() == 1);
    CHECK(res.false_negatives.size() == 1);
    // train merges into bus, so a train prediction matches a bus GT
    gt.labels[1] = {bus, 1};
    pred.labeling.labels[2] = {train, 1};
    res = eval::match_instances(frame, pred, gt, 0.5, classes);
    CHECK(res.matches.size() == 1);
}

TEST_CASE("matching: equal-iou tie goes to the smaller GT id") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const auto frame =
        frame_of({stx(1, 0, 0, 10, 10), stx(2, 10, 0, 20, 10), stx(3, 5, 0, 15, 10)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 7};
    gt.labels[2] = {car, 2};
    PredictedLabeling pred;
    pred.labeling.labels[3] = {car, 1};  // iou 1/3 with both GT instances
    const auto res = eval::match_instances(frame, pred, gt, 0.25, classes);
    REQUIRE(res.matches.size() == 1);
    CHECK(res.matches[0].second == InstanceId{car, 2});
}

TEST_CASE("average precision: hand case with one interleaved false positive") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const int person = classes.index_of_name("person");
    const auto frame = frame_of(
        {stx(1, 0, 0, 10, 10), stx(2, 20, 0, 30, 10), stx(3, 40, 0, 50, 10)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    gt.labels[2] = {car, 2};
    PredictedLabeling pred;
    pred.labeling.labels[1] = {car, 1};
    pred.labeling.labels[2] = {car, 2};
    pred.labeling.labels[3] = {car, 3};
    pred.confidence[{car, 1}] = 0.9;  // TP
    pred.confidence[{car, 3}] = 0.8;  // FP, disjoint from all GT
    pred.confidence[{car, 2}] = 0.7;  // TP
    const auto report =
        eval::average_precision({{&frame, &gt, &pred}}, classes);
    // ranked TP, FP, TP over 2 GT: precision envelope 1 then 2/3
    const double expect = 0.5 * (2.0 / 3.0) + 0.5;
    CHECK(report.per_class.at(car).ap50 == expect);
    CHECK(report.per_class.at(car).ap == doctest::Approx(expect));
    CHECK(report.per_class.at(car).counts[0].tp == 2);
    CHECK(report.per_class.at(car).counts[0].fp == 1);
    CHECK(report.per_class.at(car).counts[0].fn == 0);
    CHECK(report.per_class.at(person).excluded);
    CHECK(report.mean_ap50 == expect);  // only one class included
}

TEST_CASE("average precision pools ranked predictions across frames") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const auto f0 = frame_of({stx(1, 0, 0, 10, 10), stx(2, 40, 0, 50, 10)});
    const auto f1 = frame_of({stx(1, 0, 0, 10, 10)});
    InstanceLabeling gt0, gt1;
    gt0.labels[1] = {car, 1};
    gt1.labels[1] = {car, 1};
    PredictedLabeling p0, p1;
    p0.labeling.labels[1] = {car, 1};
    p0.labeling.labels[2] = {car, 2};
    p0.confidence[{car, 1}] = 0.9;  // TP
    p0.confidence[{car, 2}] = 0.8;  // FP
    p1.labeling.labels[1] = {car, 1};
    p1.confidence[{car, 1}] = 0.7;  // TP, ranked after the other frame's FP
    const auto report =
        eval::average_precision({{&f0, &gt0, &p0}, {&f1, &gt1, &p1}}, classes);
    CHECK(report.per_class.at(car).ap50 == 0.5 * (2.0 / 3.0) + 0.5);
}

TEST_CASE("average precision: GT with no predictions scores zero, absent class is excluded") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const int person = classes.index_of_name("person");
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 20, 0, 30, 10)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    gt.labels[2] = {person, 1};
    PredictedLabeling pred;
    pred.labeling.labels[1] = {car, 1};
    pred.confidence[{car, 1}] = 0.9;
    const auto report = eval::average_precision({{&frame, &gt, &pred}}, classes);
    CHECK(report.per_class.at(car).ap == 1.0);
    CHECK(report.per_class.at(person).ap == 0.0);
    CHECK_FALSE(report.per_class.at(person).excluded);
    CHECK(report.per_class.at(classes.index_of_name("bicycle")).excluded);
    // mean over the two included classes
    CHECK(report.mean_ap == doctest::Approx(0.5));
    CHECK(report.mean_ap50 == doctest::Approx(0.5));
}

TEST_CASE("average precision equals an exhaustive oracle on mixed hand frames") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    // three frames: clean hit, partial overlaps, duplicate predictions
    const auto f0 = frame_of({stx(1, 0, 0, 10, 10), stx(2, 0, 0, 10, 7)});
    const auto f1 = frame_of(
        {stx(1, 0, 0, 10, 10), stx(2, 12, 0, 22, 10), stx(3, 0, 0, 10, 6), stx(4, 12, 0, 22, 8)});
    const auto f2 = frame_of({stx(1, 0, 0, 10, 10), stx(2, 0, 0, 10, 9), stx(3, 0, 0, 10, 8)});
    InstanceLabeling g0, g1, g2;
    g0.labels[1] = {car, 1};
    g1.labels[1] = {car, 1};
    g1.labels[2] = {car, 2};
    g2.labels[1] = {car, 1};
    PredictedLabeling p0, p1, p2;
    p0.labeling.labels[2] = {car, 1};
    p0.confidence[{car, 1}] = 0.95;  // iou 0.7
    p1.labeling.labels[3] = {car, 1};
    p1.labeling.labels[4] = {car, 2};
    p1.confidence[{car, 1}] = 0.85;  // iou 0.6 with g1/1
    p1.confidence[{car, 2}] = 0.55;  // iou 0.8 with g1/2
    p2.labeling.labels[2] = {car, 1};
    p2.labeling.labels[3] = {car, 2};
    p2.confidence[{car, 1}] = 0.75;  // iou 0.9, duplicate of the same GT as below
    p2.confidence[{car, 2}] = 0.65;  // iou 0.8, GT already taken
    const auto report = eval::average_precision(
        {{&f0, &g0, &p0}, {&f1, &g1, &p1}, {&f2, &g2, &p2}}, classes);

    // oracle: explicit IoU tables per frame, GT id-ascending
    const std::vector<std::vector<OraclePred>> frames = {
        {{0.95, {0.7}}},
        {{0.85, {0.6, 0.0}}, {0.55, {0.0, 0.8}}},
        {{0.75, {0.9}}, {0.65, {0.8}}},
    };
    const std::vector<int> n_gt = {1, 2, 1};
    double sum = 0.0;
    for (int t = 0; t < eval::kIouThresholds; ++t) {
        std::vector<std::pair<double, char>> pooled;
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const auto flags = oracle_match(frames[f], n_gt[f], eval::iou_threshold(t));
            pooled.insert(pooled.end(), flags.begin(), flags.end());
        }
        const double ap_t = oracle_ap(pooled, 1 + 2 + 1);
        sum += ap_t;
        if (t == 0) CHECK(report.per_class.at(car).ap50 == doctest::Approx(ap_t).epsilon(1e-12));
    }
    CHECK(report.per_class.at(car).ap == doctest::Approx(sum / 10).epsilon(1e-12));
}

TEST_CASE("average precision invariants on randomized frames") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const int person = classes.index_of_name("person");
    Rng rng(505);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<StixelFrame> frames;
        std::vector<InstanceLabeling> gts;
        std::vector<PredictedLabeling> preds;
        for (int f = 0; f < 3; ++f) {
            std::vector<Stixel> stixels;
            for (int id = 0; id < 12; ++id)
                stixels.push_back(stx(id, (id % 6) * 10, (id / 6) * 10, (id % 6) * 10 + 10,
                                      (id / 6) * 10 + 10));
            frames.push_back(frame_of(stixels, 60, 20));
            InstanceLabeling gt;
            PredictedLabeling pred;
            int conf_rank = 0;
            for (int inst = 1; inst <= 3; ++inst) {
                const int cls = rng.bernoulli(0.5) ? car : person;
                for (int id = 0; id < 12; ++id)
                    if (rng.bernoulli(0.2)) gt.labels[id] = {cls, inst};
                const int pcls = rng.bernoulli(0.5) ? car : person;
                const InstanceId pid{pcls, inst};
                bool any = false;
                for (int id = 0; id < 12; ++id)
                    if (rng.bernoulli(0.2)) {
                        pred.labeling.labels[id] = pid;
                        any = true;
                    }
                if (any) pred.confidence[pid] = 0.9 - 0.1 * conf_rank++ - 0.01 * f;
            }
            gts.push_back(std::move(gt));
            preds.push_back(std::move(pred));
        }
        std::vector<eval::EvalEntry> entries;
        for (int f = 0; f < 3; ++f) entries.push_back({&frames[f], &gts[f], &preds[f]});
        const auto report = eval::average_precision(entries, classes);
        // deterministic
        CHECK(reports_equal(report, eval::average_precision(entries, classes)));
        // averaging over stricter thresholds can only lose precision
        for (const auto& [cls, row] : report.per_class)
            if (!row.excluded) CHECK(row.ap <= row.ap50 + 1e-12);
        // order-preserving confidence rescaling changes nothing
        auto scaled = preds;
        for (auto& p : scaled)
            for (auto& [id, c] : p.confidence) c *= 0.25;
        std::vector<eval::EvalEntry> entries2;
        for (int f = 0; f < 3; ++f) entries2.push_back({&frames[f], &gts[f], &scaled[f]});
        CHECK(reports_equal(report, eval::average_precision(entries2, classes)));
    }
}

TEST_CASE("average precision rejects null entries") {
    const ClassTable classes = ClassTable::cityscapes();
    CHECK_THROWS_AS(eval::average_precision({eval::EvalEntry{}}, classes),
                    std::invalid_argument);
    const auto empty = eval::average_precision({}, classes);
    CHECK(empty.mean_ap == 0.0);
    for (const auto& [cls, row] : empty.per_class) CHECK(row.excluded);
}

TEST_CASE("ground truth evaluated against itself scores a perfect AP") {
    const ClassTable classes = ClassTable::cityscapes_with_background();
    std::vector<synth::GeneratedFrame> gen;
    for (std::uint64_t seed : {11u, 12u, 13u})
        gen.push_back(synth::generate_frame(SceneConfig::defaults(), seed));
    std::vector<PredictedLabeling> preds(gen.size());
    std::vector<eval::EvalEntry> entries;
    std::vector<eval::MaskEvalEntry> mask_entries;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        preds[i].labeling = gen[i].gt;
        entries.push_back({&gen[i].frame, &gen[i].gt, &preds[i]});
        mask_entries.push_back({&gen[i].frame, &gen[i].mask, &preds[i]});
    }
    const auto report = eval::average_precision(entries, classes);
    CHECK(report.mean_ap == 1.0);
    CHECK(report.mean_ap50 == 1.0);
    // stixels tile each instance's mask region exactly, so pixel IoU is 1 too
    const auto mask_report = eval::mask_average_precision(mask_entries, classes);
    CHECK(mask_report.mean_ap == 1.0);
    CHECK(mask_report.mean_ap50 == 1.0);
    for (const auto& [cls, row] : mask_report.per_class) {
        CHECK(row.excluded == report.per_class.at(cls).excluded);
        if (!row.excluded) CHECK(row.counts[0].fp == 0);
    }
}

TEST_CASE("mask AP penalizes a prediction that misses pixels") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    // GT mask: 20x10 car block; prediction covers only the left half
    InstanceMask mask;
    mask.width = 64;
    mask.height = 32;
    mask.codes.assign(static_cast<std::size_t>(64) * 32, 0);
    const std::uint16_t code = static_cast<std::uint16_t>(
        classes.classes[car].mask_id * 1000 + 1);
    for (int v = 0; v < 10; ++v)
        for (int u = 0; u < 20; ++u) mask.at(u, v) = code;
    const auto frame = frame_of({stx(1, 0, 0, 10, 10), stx(2, 0, 0, 20, 10)}, 64, 32);
    PredictedLabeling half, full;
    half.labeling.labels[1] = {car, 1};
    half.confidence[{car, 1}] = 0.9;
    full.labeling.labels[2] = {car, 1};
    full.confidence[{car, 1}] = 0.9;
    const auto r_half = eval::mask_average_precision({{&frame, &mask, &half}}, classes);
    const auto r_full = eval::mask_average_precision({{&frame, &mask, &full}}, classes);
    CHECK(r_full.per_class.at(car).ap == 1.0);
    // pixel IoU 0.5 fails every threshold strictly
    CHECK(r_half.per_class.at(car).ap == 0.0);
    CHECK(r_half.per_class.at(car).counts[0].fp == 1);
    CHECK(r_half.per_class.at(car).counts[0].fn == 1);
}

TEST_CASE("report serializers include every class and a mean row") {
    const ClassTable classes = ClassTable::cityscapes();
    const int car = classes.index_of_name("car");
    const auto frame = frame_of({stx(1, 0, 0, 10, 10)});
    InstanceLabeling gt;
    gt.labels[1] = {car, 1};
    PredictedLabeling pred;
    pred.labeling = gt;
    const auto report = eval::average_precision({{&frame, &gt, &pred}}, classes);
    const std::string csv = eval::ap_csv(report, classes);
    CHECK(csv.starts_with("class,ap,ap50,excluded\n"));
    CHECK(csv.find("car,1,1,0") != std::string::npos);
    CHECK(csv.find("mean,") != std::string::npos);
    const std::string table = eval::ap_table(report, classes);
    CHECK(table.find("car") != std::string::npos);
    CHECK(table.find("mean") != std::string::npos);
}

TEST_CASE("benchmark rows are structurally sound and workload-deterministic") {
    const auto arch = pointnet::ArchitectureSpec::compact();
    const auto model = pointnet::ModelStateF32::from(pointnet::ModelState::init(arch, 7));
    const auto row = eval::run_benchmark(model, 300, 20, 1, 42);
    CHECK(row.n_stixels == 300);
    CHECK(row.n_boxes == 20);
    CHECK(row.n_features == 10);
    CHECK(row.n_rois > 0);
    CHECK(row.n_rows > 0);
    CHECK(row.filtering_ms > 0.0);
    CHECK(row.model_ms > 0.0);
    CHECK(row.bps_ms > 0.0);
    CHECK(row.overall_ms > 0.0);
    CHECK(row.fps == 1000.0 / row.overall_ms);
    const auto again = eval::run_benchmark(model, 300, 20, 1, 42);
    CHECK(again.n_rois == row.n_rois);
    CHECK(again.n_rows == row.n_rows);
    CHECK_THROWS_AS(eval::run_benchmark(model, 300, 20, 0, 42), std::invalid_argument);
}

TEST_CASE("benchmark cycles base features into wider model inputs") {
    auto arch = pointnet::ArchitectureSpec::compact();
    arch.input_width = 20;
    const auto model = pointnet::ModelStateF32::from(pointnet::ModelState::init(arch, 7));
    const auto row = eval::run_benchmark(model, 200, 10, 1, 42);
    CHECK(row.n_features == 20);
    CHECK(row.overall_ms > 0.0);
}

TEST_CASE("benchmark serializers carry one line per row") {
    const auto arch = pointnet::ArchitectureSpec::compact();
    const auto model = pointnet::ModelStateF32::from(pointnet::ModelState::init(arch, 7));
    eval::BenchReport report;
    report.runs = 1;
    report.rows.push_back(eval::run_benchmark(model, 200, 10, 1, 42));
    const std::string csv = eval::bench_csv(report);
    CHECK(csv.starts_with("stixels,boxes,features,rois,rows,"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    const std::string table = eval::bench_table(report);
    CHECK(table.find("fps") != std::string::npos);
    CHECK(table.find("averaged over 1 runs") != std::string::npos);
}
