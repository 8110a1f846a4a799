#include <doctest.h>

#include <set>

#include "stixelpn/filter.h"
#include "stixelpn/rng.h"
#include "stixelpn/synth.h"

using namespace stixelpn;
using filter::kFeatureCount;

namespace {

const ClassTable kClasses = ClassTable::cityscapes_with_background();

DetectionBox make_box(double u0, double v0, double u1, double v1, int label = 3,
                      double conf = 0.9) {
    DetectionBox b;
    b.u_tl = u0;
    b.v_tl = v0;
    b.u_br = u1;
    b.v_br = v1;
    b.box_label = label;
    b.box_conf = conf;
    return b;
}

Stixel make_stixel(int id, double u0, double v0, double u1, double v1, int label = 3) {
    Stixel s;
    s.x = 0.25 * id;
    s.y = 1.5;
    s.z = 12.0 + id;
    s.w = 0.3;
    s.h = 1.6;
    s.u_tl = u0;
    s.v_tl = v0;
    s.u_br = u1;
    s.v_br = v1;
    s.label = label;
    s.stixel_id = id;
    return s;
}

StixelFrame frame_of(std::vector<Stixel> stixels, int w = 100, int h = 60) {
    StixelFrame f;
    f.frame_id = "t";
    f.width = w;
    f.height = h;
    f.stixels = std::move(stixels);
    return f;
}

} // namespace

TEST_CASE("scale_box scales about the center and clamps") {
    const DetectionBox det = make_box(10, 10, 30, 30);

    const filter::RoiBox same = filter::scale_box(det, 1.0, 100, 100);
    CHECK(same.rect.u_tl == 10);
    CHECK(same.rect.v_tl == 10);
    CHECK(same.rect.u_br == 30);
    CHECK(same.rect.v_br == 30);

    const filter::RoiBox wide = filter::scale_box(det, 1.4, 100, 100);
    CHECK(wide.rect.u_tl == doctest::Approx(6.0));
    CHECK(wide.rect.v_tl == doctest::Approx(6.0));
    CHECK(wide.rect.u_br == doctest::Approx(34.0));
    CHECK(wide.rect.v_br == doctest::Approx(34.0));
    CHECK(wide.scale == 1.4);
    CHECK(wide.source.box_conf == det.box_conf);

    const filter::RoiBox edge = filter::scale_box(make_box(0, 0, 20, 20), 2.0, 100, 50);
    CHECK(edge.rect.u_tl == 0.0);  // clamped
    CHECK(edge.rect.v_tl == 0.0);
    CHECK(edge.rect.u_br == 30.0);
    CHECK(edge.rect.v_br == 30.0);

    CHECK_THROWS(filter::scale_box(det, 0.9, 100, 100));
}

TEST_CASE("capture is strict and ordered by stixel id") {
    // stixel 0 fully inside; stixel 1 with exactly 10% inside; stixel 2 with
    // 12.5%; stixel 3 with 5%; stixel 4 disjoint
    const StixelFrame f = frame_of({
        make_stixel(0, 25, 22, 29, 38),   // inside
        make_stixel(1, 16, 20, 26, 40),   // 10x20, 2x10=20 px inside right half
        make_stixel(2, 12, 20, 28, 30),   // 16x10, 8x2.5... see below
        make_stixel(3, 0, 20, 40, 30),    // 40x10 = 400, 20 px inside
        make_stixel(4, 60, 10, 70, 50),
    });
    filter::RoiBox roi;
    roi.rect = {24, 20, 40, 40};

    // fractions: s0 = 1.0; s1 = (26-24)*20/200 = 0.20; s2 = (28-24)*10/160 = 0.25;
    // s3 = (40-24)*10/400 = 0.40 -- adjust t to slice between them
    CHECK(filter::capture(f, roi, 0.5) == std::vector<int>{0});
    CHECK(filter::capture(f, roi, 0.25) == std::vector<int>{0, 3});       // 0.25 not > 0.25
    CHECK(filter::capture(f, roi, 0.2499) == std::vector<int>{0, 2, 3});  // strict threshold
    CHECK(filter::capture(f, roi, 0.1) == std::vector<int>{0, 1, 2, 3});
    CHECK(filter::capture(f, roi, 1.0) == std::vector<int>{});  // nothing exceeds 1.0
    CHECK_THROWS(filter::capture(f, roi, 0.0));
    CHECK_THROWS(filter::capture(f, roi, 1.1));
}

TEST_CASE("capture equals a pixel-counting oracle on integer geometry") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Stixel> stixels;
        for (int i = 0; i < 30; ++i) {
            const int u0 = rng.uniform_int(0, 90), v0 = rng.uniform_int(0, 50);
            stixels.push_back(make_stixel(i, u0, v0, u0 + rng.uniform_int(1, 100 - u0),
                                          v0 + rng.uniform_int(1, 60 - v0)));
        }
        const StixelFrame f = frame_of(std::move(stixels));
        filter::RoiBox roi;
        const int ru0 = rng.uniform_int(0, 60), rv0 = rng.uniform_int(0, 30);
        roi.rect = {static_cast<double>(ru0), static_cast<double>(rv0),
                    static_cast<double>(ru0 + rng.uniform_int(8, 100 - ru0)),
                    static_cast<double>(rv0 + rng.uniform_int(8, 60 - rv0))};
        const double t_roi = rng.uniform(0.05, 0.6);

        std::vector<int> oracle;
        for (const Stixel& s : f.stixels) {
            long inside = 0, total = 0;
            for (int v = static_cast<int>(s.v_tl); v < static_cast<int>(s.v_br); ++v)
                for (int u = static_cast<int>(s.u_tl); u < static_cast<int>(s.u_br); ++u) {
                    ++total;
                    const double uc = u + 0.5, vc = v + 0.5;
                    inside += uc > roi.rect.u_tl && uc < roi.rect.u_br && vc > roi.rect.v_tl &&
                              vc < roi.rect.v_br;
                }
            if (static_cast<double>(inside) / total > t_roi) oracle.push_back(s.stixel_id);
        }
        REQUIRE(filter::capture(f, roi, t_roi) == oracle);
    }
}

TEST_CASE("feature rows encode normalized geometry and classes") {
    const int car = kClasses.index_of_name("car");
    const StixelFrame f = frame_of({
        make_stixel(0, 48, 20, 52, 40, car),  // centered in the roi, full height
        make_stixel(1, 40, 20, 42, 25, car),  // top-left corner region
    });
    filter::RoiBox roi;
    roi.rect = {40, 20, 60, 40};
    roi.source = make_box(40, 20, 60, 40, car);

    const auto sample = filter::build_sample(f, roi, {0, 1}, kClasses);
    REQUIRE(sample.has_value());
    REQUIRE(sample->count() == 2);
    const double* r0 = sample->features.data();
    CHECK(r0[0] == 0.0);   // x
    CHECK(r0[2] == 12.0);  // z
    CHECK(r0[5] == doctest::Approx(0.5));  // u'
    CHECK(r0[6] == doctest::Approx(0.5));  // v'
    CHECK(r0[7] == doctest::Approx(1.0));  // h'
    const double l_car = static_cast<double>(car) / (kClasses.size() - 1);
    CHECK(r0[8] == doctest::Approx(l_car));
    CHECK(r0[9] == doctest::Approx(l_car));

    const double* r1 = sample->features.data() + kFeatureCount;
    CHECK(r1[5] == doctest::Approx(0.05));
    CHECK(r1[6] == doctest::Approx(0.125));
    CHECK(r1[7] == doctest::Approx(0.25));
}

TEST_CASE("train stixels and train boxes share the merged class encoding") {
    const int train = kClasses.index_of_name("train");
    const int bus = kClasses.index_of_name("bus");
    const StixelFrame f = frame_of({make_stixel(0, 10, 10, 14, 30, train)});
    filter::RoiBox roi;
    roi.rect = {8, 8, 32, 32};
    roi.source = make_box(8, 8, 32, 32, train);
    const auto sample = filter::build_sample(f, roi, {0}, kClasses);
    REQUIRE(sample.has_value());
    const double want = static_cast<double>(bus) / (kClasses.size() - 1);
    CHECK(sample->features[8] == doctest::Approx(want));
    CHECK(sample->features[9] == doctest::Approx(want));
}

TEST_CASE("normalized coordinates are clamped to [-0.5, 1.5]") {
    // a stixel mostly outside a small roi: center far left of the roi
    const StixelFrame f = frame_of({make_stixel(0, 0, 0, 80, 10)});
    filter::RoiBox roi;
    roi.rect = {70, 0, 80, 10};
    roi.source = make_box(70, 0, 80, 10);
    const auto sample = filter::build_sample(f, roi, {0}, kClasses);
    REQUIRE(sample.has_value());
    CHECK(sample->features[5] == -0.5);  // raw would be (40-70)/10 = -3
    CHECK(sample->features[7] == 1.0);   // height ratio 10/10
}

TEST_CASE("empty capture signals skip rather than failing") {
    const StixelFrame f = frame_of({make_stixel(0, 0, 0, 4, 10)});
    filter::RoiBox roi;
    roi.rect = {50, 20, 70, 40};
    roi.source = make_box(50, 20, 70, 40);
    CHECK_FALSE(filter::build_sample(f, roi, {}, kClasses).has_value());

    // whole-frame path drops the empty RoI and keeps the covering one
    const auto samples = filter::build_frame_samples(
        f, {make_box(50, 20, 70, 40), make_box(0, 0, 10, 10)}, {}, kClasses);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].captured == std::vector<int>{0});
}

TEST_CASE("feature matrix matches an independent recomputation on synthetic data") {
    const SceneConfig cfg = SceneConfig::defaults();
    const auto g = synth::generate_frame(cfg, 71);
    const auto boxes =
        synth::simulate_detections(g.frame, g.gt, cfg.classes, DetectorNoise::realistic(), 72);
    const filter::FilterParams params;
    const auto samples = filter::build_frame_samples(g.frame, boxes, params, cfg.classes);
    REQUIRE(!samples.empty());

    for (const filter::RoiSample& sample : samples) {
        const Rect roi = sample.roi.rect;
        for (int i = 0; i < sample.count(); ++i) {
            const Stixel* s = g.frame.find(sample.captured[i]);
            REQUIRE(s != nullptr);
            const double* row = sample.features.data() + static_cast<std::size_t>(i) * kFeatureCount;
            CHECK(row[0] == s->x);
            CHECK(row[1] == s->y);
            CHECK(row[2] == s->z);
            CHECK(row[3] == s->w);
            CHECK(row[4] == s->h);
            const double uc = 0.5 * (s->u_tl + s->u_br), vc = 0.5 * (s->v_tl + s->v_br);
            CHECK(row[5] == std::clamp((uc - roi.u_tl) / (roi.u_br - roi.u_tl), -0.5, 1.5));
            CHECK(row[6] == std::clamp((vc - roi.v_tl) / (roi.v_br - roi.v_tl), -0.5, 1.5));
            CHECK(row[7] == std::clamp((s->v_br - s->v_tl) / (roi.v_br - roi.v_tl), -0.5, 1.5));
            CHECK(row[8] == cfg.classes.merged(s->label) / (cfg.classes.size() - 1.0));
            CHECK(row[9] ==
                  cfg.classes.merged(sample.roi.source.box_label) / (cfg.classes.size() - 1.0));
        }
    }
}

TEST_CASE("capture sets grow with sc_roi and shrink with t_roi") {
    Rng rng(43);
    const SceneConfig cfg = SceneConfig::defaults();
    const auto g = synth::generate_frame(cfg, 73);
    for (int trial = 0; trial < 20; ++trial) {
        const DetectionBox det = make_box(rng.uniform(0.0, 400.0), rng.uniform(0.0, 200.0),
                                          rng.uniform(420.0, 512.0), rng.uniform(220.0, 256.0));
        std::vector<int> prev;
        for (double sc : {1.0, 1.2, 1.5, 2.0}) {
            const auto roi = filter::scale_box(det, sc, g.frame.width, g.frame.height);
            const auto cur = filter::capture(g.frame, roi, 0.1);
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            prev = cur;
        }
        const auto roi = filter::scale_box(det, 1.0, g.frame.width, g.frame.height);
        std::vector<int> looser = filter::capture(g.frame, roi, 0.05);
        for (double t : {0.1, 0.3, 0.6, 0.9}) {
            const auto cur = filter::capture(g.frame, roi, t);
            CHECK(std::includes(looser.begin(), looser.end(), cur.begin(), cur.end()));
            looser = cur;
        }
    }
}

TEST_CASE("normalized features are translation consistent") {
    const std::vector<Stixel> base = {make_stixel(0, 10, 10, 14, 30), make_stixel(1, 14, 12, 18, 28)};
    std::vector<Stixel> shifted = base;
    for (Stixel& s : shifted) {
        s.u_tl += 16;
        s.u_br += 16;
        s.v_tl += 8;
        s.v_br += 8;
    }
    const StixelFrame f1 = frame_of(base);
    const StixelFrame f2 = frame_of(std::move(shifted));
    const DetectionBox b1 = make_box(8, 8, 20, 32);
    const DetectionBox b2 = make_box(24, 16, 36, 40);

    const auto s1 = filter::build_frame_samples(f1, {b1}, {}, kClasses);
    const auto s2 = filter::build_frame_samples(f2, {b2}, {}, kClasses);
    REQUIRE(s1.size() == 1);
    REQUIRE(s2.size() == 1);
    CHECK(s1[0].captured == s2[0].captured);
    CHECK(s1[0].features == s2[0].features);
}

TEST_CASE("standardization shifts and scales every column") {
    const StixelFrame f = frame_of({make_stixel(0, 10, 10, 14, 30)});
    filter::RoiBox roi;
    roi.rect = {8, 8, 20, 32};
    roi.source = make_box(8, 8, 20, 32);

    filter::FeatureStats stats;
    stats.mean.assign(kFeatureCount, 1.0);
    stats.std.assign(kFeatureCount, 2.0);
    const auto plain = filter::build_sample(f, roi, {0}, kClasses);
    const auto standardized = filter::build_sample(f, roi, {0}, kClasses, &stats);
    REQUIRE(plain.has_value());
    REQUIRE(standardized.has_value());
    for (int c = 0; c < kFeatureCount; ++c)
        CHECK(standardized->features[c] == doctest::Approx((plain->features[c] - 1.0) / 2.0));

    filter::FeatureStats bad = stats;
    bad.std[3] = 0.0;
    CHECK_THROWS(filter::build_sample(f, roi, {0}, kClasses, &bad));
}

TEST_CASE("filter params validate") {
    filter::FilterParams p;
    CHECK(filter::validate(p).empty());
    p.sc_roi = 0.5;
    CHECK_FALSE(filter::validate(p).empty());
    p = {};
    p.t_roi = 0.0;
    CHECK_FALSE(filter::validate(p).empty());
}
