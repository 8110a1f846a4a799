#include <doctest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "stixelpn/core.h"
#include "stixelpn/ingest.h"

using namespace stixelpn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("stixelpn_ingest_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& file) {
    std::ifstream is(file, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

void spit(const fs::path& file, const std::string& text) {
    std::ofstream os(file, std::ios::binary);
    os << text;
}

Stixel make_stixel(int id, double u0, double v0, double u1, double v1, int label) {
    Stixel s;
    s.x = 0.1 * id;
    s.y = 1.25;
    s.z = 7.5 + id;
    s.w = 0.4;
    s.h = 1.6;
    s.u_tl = u0;
    s.v_tl = v0;
    s.u_br = u1;
    s.v_br = v1;
    s.label = label;
    s.label_conf = 0.875;
    s.stixel_id = id;
    return s;
}

Dataset make_dataset(bool with_masks) {
    Dataset ds;
    ds.name = "toy";
    ds.seed = 424242;
    ds.classes = ClassTable::cityscapes_with_background();

    for (int k = 0; k < 2; ++k) {
        DatasetEntry entry;
        StixelFrame& f = entry.frame;
        f.frame_id = "f" + std::to_string(k);
        f.width = 8;
        f.height = 6;
        f.stixels = {make_stixel(0, 0, 0, 4, 6, 3), make_stixel(1, 4, 2, 8, 6, 0)};

        DetectionBox b;
        b.u_tl = 0.5;
        b.v_tl = 0.25;
        b.u_br = 5;
        b.v_br = 6;
        b.box_label = 3;
        b.box_conf = 0.625;
        entry.detections = {b};

        entry.gt.frame_id = f.frame_id;
        entry.gt.labels[0] = InstanceId{3, 1};
        entry.gt.labels[1] = InstanceId::background();

        if (with_masks) {
            InstanceMask m;
            m.width = f.width;
            m.height = f.height;
            m.codes.assign(static_cast<std::size_t>(m.width) * m.height, 0);
            for (int v = 0; v < 6; ++v)
                for (int u = 0; u < 4; ++u) m.at(u, v) = 27 * 1000 + 1;
            entry.mask = m;
        }
        ds.entries.push_back(std::move(entry));
    }
    return ds;
}

} // namespace

TEST_CASE("frame jsonl codec round trips") {
    StixelFrame f;
    f.frame_id = "frame_007";
    f.width = 640;
    f.height = 480;
    f.stixels = {make_stixel(3, 12, 100, 16, 220, 2), make_stixel(11, 16, 90, 20, 230, 4)};

    const std::string line = ingest::frame_to_json_line(f);
    const StixelFrame g = ingest::frame_from_json_line(line);
    CHECK(g.frame_id == f.frame_id);
    CHECK(g.width == f.width);
    CHECK(g.height == f.height);
    REQUIRE(g.stixels.size() == 2);
    CHECK(g.stixels[1].x == f.stixels[1].x);
    CHECK(g.stixels[1].label == 4);
    CHECK(g.stixels[1].stixel_id == 11);
    // canonical serialization: parse and re-emit is the identity on bytes
    CHECK(ingest::frame_to_json_line(g) == line);
}

TEST_CASE("detection jsonl codec round trips") {
    DetectionBox b;
    b.u_tl = 1.5;
    b.v_tl = 2.25;
    b.u_br = 70;
    b.v_br = 121.125;
    b.box_label = 6;
    b.box_conf = 0.333984375;
    const std::string line = ingest::detections_to_json_line("fX", {b});
    auto [fid, boxes] = ingest::detections_from_json_line(line);
    CHECK(fid == "fX");
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].u_br == 70);
    CHECK(boxes[0].box_conf == b.box_conf);
    CHECK(ingest::detections_to_json_line(fid, boxes) == line);
}

TEST_CASE("labeling jsonl codec round trips with and without confidence") {
    PredictedLabeling p;
    p.labeling.frame_id = "fY";
    p.labeling.labels[0] = InstanceId{2, 1};
    p.labeling.labels[4] = InstanceId::background();
    p.labeling.labels[9] = InstanceId{2, 2};

    SUBCASE("ground truth style, no confidence") {
        const std::string line = ingest::labeling_to_json_line(p);
        CHECK(line.find("conf") == std::string::npos);
        const PredictedLabeling q = ingest::labeling_from_json_line(line);
        CHECK(q.labeling.labels == p.labeling.labels);
        CHECK(q.confidence.empty());
        CHECK(ingest::labeling_to_json_line(q) == line);
    }
    SUBCASE("prediction style") {
        p.confidence[InstanceId{2, 1}] = 0.75;
        p.confidence[InstanceId{2, 2}] = 0.5;
        const std::string line = ingest::labeling_to_json_line(p);
        const PredictedLabeling q = ingest::labeling_from_json_line(line);
        CHECK(q.confidence == p.confidence);
        CHECK(ingest::labeling_to_json_line(q) == line);
    }
}

TEST_CASE("labeling file loader reports the offending line") {
    const fs::path dir = temp_dir("lines");
    const fs::path file = dir / "bad.labels.jsonl";
    PredictedLabeling ok;
    ok.labeling.frame_id = "f0";
    ok.labeling.labels[0] = InstanceId::background();
    spit(file, ingest::labeling_to_json_line(ok) + "\n{\"frame\":\"f1\",\"labels\":[[0]]}\n");
    try {
        ingest::load_labelings(file);
        FAIL("expected a parse error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("dataset save/load round trips byte-identically") {
    const bool with_masks = true;
    const Dataset ds = make_dataset(with_masks);
    const fs::path dir_a = temp_dir("ds_a");
    const fs::path dir_b = temp_dir("ds_b");

    ingest::save_dataset(ds, dir_a);
    const Dataset loaded = ingest::load_dataset(dir_a);
    CHECK(loaded.name == ds.name);
    CHECK(loaded.seed == ds.seed);
    CHECK(loaded.classes.size() == ds.classes.size());
    CHECK(loaded.classes.merge == ds.classes.merge);
    REQUIRE(loaded.entries.size() == ds.entries.size());
    CHECK(loaded.entries[0].frame.stixels[0].z == ds.entries[0].frame.stixels[0].z);
    CHECK(loaded.entries[1].gt.labels.at(0) == InstanceId{3, 1});
    REQUIRE(loaded.entries[0].mask.has_value());
    CHECK(loaded.entries[0].mask->at(2, 3) == 27001);
    CHECK(loaded.entries[0].mask->at(5, 3) == 0);

    ingest::save_dataset(loaded, dir_b);
    for (const char* name : {"manifest.json", "data.frames.jsonl", "data.dets.jsonl", "data.labels.jsonl"})
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    CHECK(slurp(dir_a / "masks" / "f0.pgm") == slurp(dir_b / "masks" / "f0.pgm"));
}

TEST_CASE("dataset loader rejects inconsistencies") {
    const Dataset ds = make_dataset(false);
    const fs::path dir = temp_dir("ds_bad");
    ingest::save_dataset(ds, dir);

    SUBCASE("frame count mismatch") {
        std::string frames = slurp(dir / "data.frames.jsonl");
        frames += frames;
        spit(dir / "data.frames.jsonl", frames);
        CHECK_THROWS(ingest::load_dataset(dir));
    }
    SUBCASE("unlabeled stixel") {
        PredictedLabeling l;
        l.labeling.frame_id = "f1";
        l.labeling.labels[0] = InstanceId{3, 1};  // stixel 1 missing
        std::string labels = slurp(dir / "data.labels.jsonl");
        const auto pos = labels.find('\n');
        spit(dir / "data.labels.jsonl", labels.substr(0, pos + 1) + ingest::labeling_to_json_line(l) + "\n");
        CHECK_THROWS(ingest::load_dataset(dir));
    }
    SUBCASE("unknown format tag") {
        std::string manifest = slurp(dir / "manifest.json");
        const auto pos = manifest.find("stixelpn-dataset-v1");
        manifest.replace(pos, 19, "stixelpn-dataset-v9");
        spit(dir / "manifest.json", manifest);
        CHECK_THROWS(ingest::load_dataset(dir));
    }
}

TEST_CASE("mask pgm round trips") {
    InstanceMask m;
    m.width = 5;
    m.height = 3;
    m.codes = {0,     24001, 24002, 33001, 0,      //
               65535, 26010, 0,     0,     31001,  //
               0,     0,     27001, 27001, 27001};
    const fs::path dir = temp_dir("pgm");
    ingest::write_instance_mask(m, dir / "m.pgm");
    const InstanceMask r = ingest::import_instance_mask(dir / "m.pgm", "id1000");
    CHECK(r.width == 5);
    CHECK(r.height == 3);
    CHECK(r.codes == m.codes);
}

TEST_CASE("mask import accepts plain P2 and normalizes stray codes") {
    const fs::path dir = temp_dir("p2");
    // comment line, 2x2, one code below 1000 that cannot split into id*1000+counter
    spit(dir / "m.pgm", "P2\n# caption\n2 2\n65535\n0 999\n24001 65535\n");
    const InstanceMask m = ingest::import_instance_mask(dir / "m.pgm", "id1000");
    CHECK(m.at(0, 0) == 0);
    CHECK(m.at(1, 0) == 0);  // 999 is not a valid id1000 code
    CHECK(m.at(0, 1) == 24001);
    CHECK(m.at(1, 1) == 65535);
}

TEST_CASE("mask import rejects bad inputs") {
    const fs::path dir = temp_dir("pgm_bad");
    spit(dir / "m8.pgm", "P5\n2 2\n255\n    ");
    CHECK_THROWS(ingest::import_instance_mask(dir / "m8.pgm", "id1000"));

    spit(dir / "short.pgm", "P5\n2 2\n65535\n\0\0\0");
    CHECK_THROWS(ingest::import_instance_mask(dir / "short.pgm", "id1000"));

    spit(dir / "notpgm.pgm", "JUNK\n");
    CHECK_THROWS(ingest::import_instance_mask(dir / "notpgm.pgm", "id1000"));

    InstanceMask m;
    m.width = 1;
    m.height = 1;
    m.codes = {0};
    ingest::write_instance_mask(m, dir / "ok.pgm");
    CHECK_THROWS(ingest::import_instance_mask(dir / "ok.pgm", "png16"));
}

namespace {

NetworkCheckpoint make_checkpoint() {
    NetworkCheckpoint c;
    c.input_width = 3;
    c.extractor_widths = {4, 5};
    c.head_widths = {6, 2};
    c.head_tap_stage = 1;
    c.seed = 0xDEADBEEFCAFEF00DULL;
    c.learning_rate = 3e-3;
    c.batch_size = 32;
    c.beta1 = 0.9;
    c.beta2 = 0.999;
    c.epsilon = 1e-8;
    c.step = 1234;
    c.epochs_done = 7;

    const std::vector<std::pair<std::size_t, std::size_t>> shapes = {
        {3, 4}, {4, 5}, {9, 6}, {6, 2}};  // head input = tap(4) + global(5)
    double v = 0.0;
    for (auto [in, out] : shapes) {
        std::vector<double> w(in * out), b(out);
        for (double& x : w) x = (v += 0.125);
        for (double& x : b) x = -(v += 0.25);
        c.weights.push_back(std::move(w));
        c.biases.push_back(std::move(b));
    }
    c.weights[0][0] = -0.0;
    c.weights[0][1] = std::numeric_limits<double>::denorm_min();
    c.has_moments = true;
    c.m_w = c.weights;
    c.v_w = c.weights;
    c.m_b = c.biases;
    c.v_b = c.biases;
    return c;
}

} // namespace

TEST_CASE("checkpoint round trips bit-exactly") {
    const NetworkCheckpoint c = make_checkpoint();
    REQUIRE(c.validate().empty());
    const fs::path dir = temp_dir("ckpt");
    ingest::save_checkpoint(c, dir / "a.ckpt");
    const NetworkCheckpoint r = ingest::load_checkpoint(dir / "a.ckpt");

    CHECK(r.extractor_widths == c.extractor_widths);
    CHECK(r.head_widths == c.head_widths);
    CHECK(r.head_tap_stage == c.head_tap_stage);
    CHECK(r.seed == c.seed);
    CHECK(r.learning_rate == c.learning_rate);
    CHECK(r.batch_size == c.batch_size);
    CHECK(r.step == c.step);
    CHECK(r.epochs_done == c.epochs_done);
    CHECK(r.has_moments);
    CHECK(r.m_w == c.m_w);
    CHECK(r.v_b == c.v_b);
    REQUIRE(r.weights.size() == c.weights.size());
    for (std::size_t l = 0; l < c.weights.size(); ++l) {
        REQUIRE(r.weights[l].size() == c.weights[l].size());
        for (std::size_t i = 0; i < c.weights[l].size(); ++i)
            CHECK(std::bit_cast<std::uint64_t>(r.weights[l][i]) ==
                  std::bit_cast<std::uint64_t>(c.weights[l][i]));
        CHECK(r.biases[l] == c.biases[l]);
    }

    // saving the loaded state reproduces the file bytes
    ingest::save_checkpoint(r, dir / "b.ckpt");
    CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
}

TEST_CASE("checkpoint with feature stats round trips") {
    NetworkCheckpoint c = make_checkpoint();
    c.has_feature_stats = true;
    c.feature_mean = {0.5, -1.0, 2.0};
    c.feature_std = {1.0, 0.25, 3.0};
    REQUIRE(c.validate().empty());
    const fs::path dir = temp_dir("ckpt_stats");
    ingest::save_checkpoint(c, dir / "s.ckpt");
    const NetworkCheckpoint r = ingest::load_checkpoint(dir / "s.ckpt");
    CHECK(r.has_feature_stats);
    CHECK(r.feature_mean == c.feature_mean);
    CHECK(r.feature_std == c.feature_std);
}

TEST_CASE("checkpoint loader rejects damage without partial state") {
    const NetworkCheckpoint c = make_checkpoint();
    const fs::path dir = temp_dir("ckpt_bad");
    ingest::save_checkpoint(c, dir / "ok.ckpt");
    const std::string bytes = slurp(dir / "ok.ckpt");

    SUBCASE("bad magic") {
        std::string buf = bytes;
        buf[0] = 'X';
        spit(dir / "bad.ckpt", buf);
        CHECK_THROWS(ingest::load_checkpoint(dir / "bad.ckpt"));
    }
    SUBCASE("unsupported version") {
        std::string buf = bytes;
        buf[8] = 9;
        spit(dir / "bad.ckpt", buf);
        CHECK_THROWS(ingest::load_checkpoint(dir / "bad.ckpt"));
    }
    SUBCASE("truncation") {
        spit(dir / "bad.ckpt", bytes.substr(0, bytes.size() - 11));
        CHECK_THROWS(ingest::load_checkpoint(dir / "bad.ckpt"));
    }
    SUBCASE("corrupted length field") {
        std::string buf = bytes;
        buf[12] = static_cast<char>(buf[12] + 1);
        spit(dir / "bad.ckpt", buf);
        CHECK_THROWS(ingest::load_checkpoint(dir / "bad.ckpt"));
    }
    SUBCASE("trailing garbage") {
        spit(dir / "bad.ckpt", bytes + "zzz");
        CHECK_THROWS(ingest::load_checkpoint(dir / "bad.ckpt"));
    }
}

TEST_CASE("checkpoint validation catches shape mismatches") {
    NetworkCheckpoint c = make_checkpoint();
    c.weights[2].pop_back();
    CHECK_FALSE(c.validate().empty());

    NetworkCheckpoint tap = make_checkpoint();
    tap.head_tap_stage = 3;
    CHECK_FALSE(tap.validate().empty());

    NetworkCheckpoint stats = make_checkpoint();
    stats.has_feature_stats = true;
    stats.feature_mean = {0, 0, 0};
    stats.feature_std = {1, 1};
    CHECK_FALSE(stats.validate().empty());
}
