#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stixelpn/baselines.h"
#include "stixelpn/bps.h"
#include "stixelpn/core.h"
#include "stixelpn/eval.h"
#include "stixelpn/filter.h"
#include "stixelpn/gtgen.h"
#include "stixelpn/ingest.h"
#include "stixelpn/parallel.h"
#include "stixelpn/pointnet.h"
#include "stixelpn/render.h"
#include "stixelpn/synth.h"

namespace {

using namespace stixelpn;
namespace fs = std::filesystem;

// flag problems detected after parsing; mapped to exit code 2 like CLI11's own
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
}

// Experiment config file: a flat JSON object whose keys mirror long flag
// names. Values fill in options the command line left unset.
class ConfigBinding {
  public:
    template <typename T>
    void bind(CLI::Option* opt, const std::string& key, T& var) {
        setters_.push_back([opt, key, &var](const nlohmann::json& j) {
            if (opt->count() == 0 && j.contains(key)) var = j.at(key).get<T>();
        });
    }
    void apply(const std::string& path) const {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read config " + path);
        nlohmann::json j;
        in >> j;
        if (!j.is_object()) throw std::runtime_error("config must be a JSON object: " + path);
        for (const auto& s : setters_) s(j);
    }

  private:
    std::vector<std::function<void(const nlohmann::json&)>> setters_;
};

std::vector<double> parse_sweep(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo = 0, hi = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(text);
        if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw UsageError("bad sweep range, expected lo:hi:step");
        for (double t = lo; t <= hi + 1e-9; t += step) out.push_back(t);
    } else {
        std::istringstream in(text);
        std::string item;
        while (std::getline(in, item, ',')) out.push_back(std::stod(item));
    }
    if (out.empty()) throw UsageError("empty sweep list");
    return out;
}

pointnet::ArchitectureSpec arch_by_name(const std::string& name) {
    if (name == "default") return pointnet::ArchitectureSpec::defaults();
    if (name == "compact") return pointnet::ArchitectureSpec::compact();
    throw UsageError("unknown arch: " + name);
}

std::optional<filter::FeatureStats> checkpoint_stats(const NetworkCheckpoint& ckpt) {
    if (!ckpt.has_feature_stats) return std::nullopt;
    return filter::FeatureStats{ckpt.feature_mean, ckpt.feature_std};
}

baselines::HacConfig hac_config(double default_mu, const std::vector<std::string>& overrides) {
    baselines::HacConfig cfg;
    if (default_mu > 0) cfg.default_mu = default_mu;
    for (const std::string& text : overrides) {
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw UsageError("bad --mu entry, expected class=value");
        cfg.mu[text.substr(0, eq)] = std::stod(text.substr(eq + 1));
    }
    const std::string err = baselines::validate(cfg);
    if (!err.empty()) throw UsageError(err);
    return cfg;
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
    std::string out, config;
    std::string name = "synth";
    std::string noise = "realistic";
    int frames = 10;
    std::uint64_t seed = 1;
    double stixel_jitter = SceneConfig{}.stixel_jitter;
    double occlusion = SceneConfig{}.occlusion_prob;
    double grouping = SceneConfig{}.group_prob;
};

void run_synth(const SynthArgs& a) {
    SceneConfig scene = SceneConfig::defaults();
    scene.stixel_jitter = a.stixel_jitter;
    scene.occlusion_prob = a.occlusion;
    scene.group_prob = a.grouping;
    const DetectorNoise noise =
        a.noise == "none" ? DetectorNoise::none() : DetectorNoise::realistic();
    const Dataset ds = synth::generate_dataset(scene, noise, a.frames, a.seed, a.name);
    ingest::save_dataset(ds, a.out);
    std::cout << "dataset " << ds.name << ": " << ds.entries.size() << " frames, seed "
              << ds.seed << ", noise " << a.noise << " -> " << a.out << "\n";
}

struct MakeGtArgs {
    std::string data, out, sweep, config;
    double t_ov = 0.35;
    bool select_ap50 = false;
};

void run_make_gt(const MakeGtArgs& a) {
    const Dataset ds = ingest::load_dataset(a.data);
    std::vector<std::pair<const StixelFrame*, const InstanceMask*>> pairs;
    for (const DatasetEntry& e : ds.entries) {
        if (!e.mask.has_value())
            throw std::runtime_error("frame " + e.frame.frame_id + " has no instance mask");
        pairs.emplace_back(&e.frame, &*e.mask);
    }
    if (!a.sweep.empty()) {
        const auto thresholds = parse_sweep(a.sweep);
        const auto evaluator = [&](const std::vector<PredictedLabeling>& labelings) {
            std::vector<eval::MaskEvalEntry> entries;
            for (std::size_t i = 0; i < pairs.size(); ++i)
                entries.push_back({pairs[i].first, pairs[i].second, &labelings[i]});
            const eval::ApReport r = eval::mask_average_precision(entries, ds.classes);
            gtgen::SweepScore score;
            score.mean_ap = r.mean_ap;
            score.mean_ap50 = r.mean_ap50;
            for (const auto& [cls, row] : r.per_class)
                if (!row.excluded) score.per_class_ap[ds.classes.name(cls)] = row.ap;
            return score;
        };
        const gtgen::SweepResult result =
            gtgen::sweep_t_ov(pairs, thresholds, ds.classes, evaluator, a.select_ap50);
        write_text(a.out, gtgen::sweep_csv(result, ds.classes));
        std::cout << "sweep over " << thresholds.size() << " thresholds -> " << a.out
                  << "\nbest t_ov " << result.best_t_ov << "\n";
        return;
    }
    std::vector<PredictedLabeling> labelings;
    for (const auto& [frame, mask] : pairs) {
        try {
            PredictedLabeling out;
            out.labeling = gtgen::generate_gt(*frame, *mask, a.t_ov, ds.classes);
            labelings.push_back(std::move(out));
        } catch (const std::exception& e) {
            throw std::runtime_error("frame " + frame->frame_id + ": " + e.what());
        }
    }
    ingest::save_labelings(labelings, a.out);
    std::cout << labelings.size() << " labelings at t_ov " << a.t_ov << " -> " << a.out << "\n";
}

struct TrainArgs {
    std::string data, out, loss_csv, resume, config;
    std::string arch = "default";
    pointnet::TrainConfig cfg;
    filter::FilterParams params;
    bool no_standardize = false;
};

void run_train(const TrainArgs& a) {
    const Dataset ds = ingest::load_dataset(a.data);
    pointnet::TrainConfig cfg = a.cfg;
    cfg.standardize = !a.no_standardize;
    std::optional<NetworkCheckpoint> resume;
    if (!a.resume.empty()) resume = ingest::load_checkpoint(a.resume);
    const pointnet::TrainResult result =
        pointnet::train(ds, arch_by_name(a.arch), cfg, a.params, default_exec_mode(),
                        resume ? &*resume : nullptr);
    ingest::save_checkpoint(result.checkpoint, a.out);
    if (!a.loss_csv.empty()) write_text(a.loss_csv, pointnet::loss_csv(result.log));
    std::cout << "trained " << result.log.size() << " epochs on " << ds.entries.size()
              << " frames, seed " << cfg.seed;
    if (!result.log.empty()) std::cout << ", final loss " << result.log.back().mean_loss;
    std::cout << " -> " << a.out << "\n";
}

struct InferArgs {
    std::string data, out, method, checkpoint, percent_data, config;
    std::string metric = "l2";
    bps::BpsConfig bps_cfg;
    filter::FilterParams params;
    double default_mu = 0.0;
    std::vector<std::string> mu_overrides;
};

void run_infer(const InferArgs& a) {
    const Dataset ds = ingest::load_dataset(a.data);
    std::vector<PredictedLabeling> out;
    out.reserve(ds.entries.size());

    if (a.method == "stxpn") {
        if (a.checkpoint.empty()) throw UsageError("--method stxpn requires --checkpoint");
        const NetworkCheckpoint ckpt = ingest::load_checkpoint(a.checkpoint);
        const pointnet::ModelState model = pointnet::ModelState::from_checkpoint(ckpt);
        const auto stats = checkpoint_stats(ckpt);
        pointnet::Workspace ws;
        for (const DatasetEntry& e : ds.entries) {
            const auto samples = filter::build_frame_samples(e.frame, e.detections, a.params,
                                                             ds.classes, stats ? &*stats : nullptr);
            std::vector<pointnet::RoiPrediction> preds;
            preds.reserve(samples.size());
            for (const auto& s : samples)
                preds.push_back(pointnet::predict(model, s, ws, default_exec_mode()));
            out.push_back(bps::segment_frame(e.frame, samples, preds, a.bps_cfg));
        }
    } else if (a.method == "statistical") {
        const Dataset pd =
            a.percent_data.empty() ? ds : ingest::load_dataset(a.percent_data);
        const baselines::ClassPercentages pc = baselines::estimate_percentages(pd, a.params);
        const auto metric =
            a.metric == "l1" ? baselines::DistanceMetric::l1 : baselines::DistanceMetric::l2;
        for (const DatasetEntry& e : ds.entries) {
            const auto samples =
                filter::build_frame_samples(e.frame, e.detections, a.params, ds.classes);
            std::vector<pointnet::RoiPrediction> preds;
            for (const auto& s : samples) {
                const double p = pc.at(ds.classes.merged(s.roi.source.box_label));
                preds.push_back(
                    baselines::to_prediction(baselines::statistical_segment(e.frame, s, p, metric)));
            }
            out.push_back(bps::segment_frame(e.frame, samples, preds, a.bps_cfg));
        }
    } else if (a.method == "hac-roi") {
        const baselines::HacConfig cfg = hac_config(a.default_mu, a.mu_overrides);
        for (const DatasetEntry& e : ds.entries) {
            const auto samples =
                filter::build_frame_samples(e.frame, e.detections, a.params, ds.classes);
            std::vector<pointnet::RoiPrediction> preds;
            for (const auto& s : samples)
                preds.push_back(
                    baselines::to_prediction(baselines::hac_roi(e.frame, s, ds.classes, cfg)));
            out.push_back(bps::segment_frame(e.frame, samples, preds, a.bps_cfg));
        }
    } else if (a.method == "hac-img") {
        const baselines::HacConfig cfg = hac_config(a.default_mu, a.mu_overrides);
        for (const DatasetEntry& e : ds.entries)
            out.push_back(baselines::hac_img(e.frame, ds.classes, cfg));
    } else if (a.method == "oracle") {
        for (const DatasetEntry& e : ds.entries) {
            const auto samples =
                filter::build_frame_samples(e.frame, e.detections, a.params, ds.classes);
            std::vector<pointnet::RoiPrediction> preds;
            for (const auto& s : samples) {
                const auto targets = pointnet::target_assignment(s, e.gt, ds.classes);
                pointnet::RoiPrediction p;
                p.pc.assign(targets.begin(), targets.end());
                p.decision = targets;
                preds.push_back(std::move(p));
            }
            out.push_back(bps::segment_frame(e.frame, samples, preds, a.bps_cfg));
        }
    } else {
        throw UsageError("unknown method: " + a.method);
    }
    ingest::save_labelings(out, a.out);
    std::cout << a.method << " predictions for " << out.size() << " frames -> " << a.out << "\n";
}

struct EvalArgs {
    std::string data, pred, gt, out, config;
    bool mask_level = false;
};

void run_eval(const EvalArgs& a) {
    const Dataset ds = ingest::load_dataset(a.data);
    const auto preds = ingest::load_labelings(a.pred);
    std::map<std::string, const PredictedLabeling*> by_id;
    for (const auto& p : preds) by_id[p.labeling.frame_id] = &p;
    auto pred_for = [&](const std::string& frame_id) {
        const auto it = by_id.find(frame_id);
        if (it == by_id.end())
            throw std::runtime_error("no prediction for frame " + frame_id);
        return it->second;
    };

    std::vector<PredictedLabeling> gt_files;
    std::map<std::string, const InstanceLabeling*> gt_by_id;
    if (!a.gt.empty()) {
        gt_files = ingest::load_labelings(a.gt);
        for (const auto& g : gt_files) gt_by_id[g.labeling.frame_id] = &g.labeling;
    }
    auto gt_for = [&](const DatasetEntry& e) -> const InstanceLabeling& {
        if (a.gt.empty()) return e.gt;
        const auto it = gt_by_id.find(e.frame.frame_id);
        if (it == gt_by_id.end())
            throw std::runtime_error("no ground truth for frame " + e.frame.frame_id);
        return *it->second;
    };

    eval::ApReport report;
    if (a.mask_level) {
        std::vector<eval::MaskEvalEntry> entries;
        for (const DatasetEntry& e : ds.entries) {
            if (!e.mask.has_value())
                throw std::runtime_error("frame " + e.frame.frame_id + " has no instance mask");
            entries.push_back({&e.frame, &*e.mask, pred_for(e.frame.frame_id)});
        }
        report = eval::mask_average_precision(entries, ds.classes);
    } else {
        std::vector<eval::EvalEntry> entries;
        for (const DatasetEntry& e : ds.entries)
            entries.push_back({&e.frame, &gt_for(e), pred_for(e.frame.frame_id)});
        report = eval::average_precision(entries, ds.classes);
    }
    std::cout << eval::ap_table(report, ds.classes);
    if (!a.out.empty()) write_text(a.out, eval::ap_csv(report, ds.classes));
}

struct BenchArgs {
    std::string checkpoint, out, config;
    std::vector<int> stixels{753};
    std::vector<int> boxes{50};
    std::vector<int> features{10};
    int runs = 20;
    std::uint64_t seed = 1;
};

void run_bench(const BenchArgs& a) {
    std::vector<std::pair<int, int>> sizes;
    if (a.stixels.size() == a.boxes.size()) {
        for (std::size_t i = 0; i < a.stixels.size(); ++i)
            sizes.emplace_back(a.stixels[i], a.boxes[i]);
    } else if (a.boxes.size() == 1) {
        for (int s : a.stixels) sizes.emplace_back(s, a.boxes[0]);
    } else {
        throw UsageError("--stixels and --boxes need equal lengths (or one box count)");
    }
    eval::BenchReport report;
    report.runs = a.runs;
    for (int width : a.features) {
        pointnet::ModelStateF32 model;
        if (!a.checkpoint.empty()) {
            model = pointnet::ModelStateF32::from(
                pointnet::ModelState::from_checkpoint(ingest::load_checkpoint(a.checkpoint)));
            if (model.arch.input_width != width && a.features.size() > 1)
                throw UsageError("--features is fixed by --checkpoint");
        } else {
            pointnet::ArchitectureSpec arch = pointnet::ArchitectureSpec::defaults();
            arch.input_width = width;
            model = pointnet::ModelStateF32::from(pointnet::ModelState::init(arch, a.seed));
        }
        for (const auto& [n_stixels, n_boxes] : sizes)
            report.rows.push_back(
                eval::run_benchmark(model, n_stixels, n_boxes, a.runs, a.seed));
    }
    std::cout << eval::bench_table(report);
    std::cout << "seed " << a.seed << "\n";
    if (!a.out.empty()) write_text(a.out, eval::bench_csv(report));
}

struct RenderArgs {
    std::string data, labels, out, config;
    bool boxes = false;
};

void run_render(const RenderArgs& a) {
    const Dataset ds = ingest::load_dataset(a.data);
    std::map<std::string, const InstanceLabeling*> by_id;
    std::vector<PredictedLabeling> files;
    if (!a.labels.empty()) {
        files = ingest::load_labelings(a.labels);
        for (const auto& p : files) by_id[p.labeling.frame_id] = &p.labeling;
    }
    fs::create_directories(a.out);
    const InstanceLabeling empty;
    for (const DatasetEntry& e : ds.entries) {
        const InstanceLabeling* labeling = &e.gt;
        if (!a.labels.empty()) {
            const auto it = by_id.find(e.frame.frame_id);
            labeling = it != by_id.end() ? it->second : &empty;
        }
        const std::string svg =
            render::frame_svg(e.frame, *labeling, a.boxes ? &e.detections : nullptr);
        write_text(fs::path(a.out) / (e.frame.frame_id + ".svg"), svg);
    }
    std::cout << ds.entries.size() << " SVG files -> " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    init_threads_from_env();
    CLI::App app{"stixel-level instance segmentation pipeline"};
    app.require_subcommand(1);

    auto sy = std::make_shared<SynthArgs>();
    auto sy_bind = std::make_shared<ConfigBinding>();
    {
        CLI::App* cmd = app.add_subcommand("synth", "generate a synthetic dataset");
        cmd->add_option("--config", sy->config, "experiment config JSON; flags win");
        sy_bind->bind(cmd->add_option("--frames", sy->frames, "frame count"), "frames",
                      sy->frames);
        sy_bind->bind(cmd->add_option("--seed", sy->seed, "master seed"), "seed", sy->seed);
        sy_bind->bind(cmd->add_option("--name", sy->name, "dataset name"), "name", sy->name);
        sy_bind->bind(cmd->add_option("--noise", sy->noise, "detector noise: none|realistic")
                          ->check(CLI::IsMember({"none", "realistic"})),
                      "noise", sy->noise);
        sy_bind->bind(cmd->add_option("--stixel-jitter", sy->stixel_jitter,
                                      "stddev of stixel edge jitter, px"),
                      "stixel_jitter", sy->stixel_jitter);
        sy_bind->bind(cmd->add_option("--occlusion", sy->occlusion, "occluded placement rate"),
                      "occlusion", sy->occlusion);
        sy_bind->bind(cmd->add_option("--grouping", sy->grouping,
                                      "same-class adjacent placement rate"),
                      "grouping", sy->grouping);
        cmd->add_option("--out", sy->out, "output dataset directory")->required();
        cmd->callback([sy, sy_bind] {
            sy_bind->apply(sy->config);
            run_synth(*sy);
        });
    }

    auto mg = std::make_shared<MakeGtArgs>();
    auto mg_bind = std::make_shared<ConfigBinding>();
    {
        CLI::App* cmd = app.add_subcommand("make-gt", "stixel ground truth from pixel masks");
        cmd->add_option("--config", mg->config, "experiment config JSON; flags win");
        cmd->add_option("--data", mg->data, "dataset directory")->required();
        cmd->add_option("--out", mg->out, "labelings file (or sweep CSV)")->required();
        mg_bind->bind(cmd->add_option("--tov", mg->t_ov, "overlap threshold"), "tov", mg->t_ov);
        mg_bind->bind(cmd->add_option("--sweep", mg->sweep, "thresholds lo:hi:step or a,b,c"),
                      "sweep", mg->sweep);
        mg_bind->bind(cmd->add_flag("--select-ap50", mg->select_ap50,
                                    "pick the sweep argmax by AP50 instead of mean AP"),
                      "select_ap50", mg->select_ap50);
        cmd->callback([mg, mg_bind] {
            mg_bind->apply(mg->config);
            run_make_gt(*mg);
        });
    }

    auto tr = std::make_shared<TrainArgs>();
    auto tr_bind = std::make_shared<ConfigBinding>();
    {
        CLI::App* cmd = app.add_subcommand("train", "train the network on a dataset");
        cmd->add_option("--config", tr->config, "experiment config JSON; flags win");
        cmd->add_option("--data", tr->data, "dataset directory")->required();
        cmd->add_option("--out", tr->out, "checkpoint file")->required();
        cmd->add_option("--loss-csv", tr->loss_csv, "per-epoch loss CSV");
        cmd->add_option("--resume", tr->resume, "checkpoint to continue from");
        tr_bind->bind(cmd->add_option("--arch", tr->arch, "default|compact")
                          ->check(CLI::IsMember({"default", "compact"})),
                      "arch", tr->arch);
        tr_bind->bind(cmd->add_option("--epochs", tr->cfg.epochs, "epochs to run"), "epochs",
                      tr->cfg.epochs);
        tr_bind->bind(cmd->add_option("--lr", tr->cfg.learning_rate, "ADAM learning rate"),
                      "learning_rate", tr->cfg.learning_rate);
        tr_bind->bind(cmd->add_option("--decay", tr->cfg.lr_decay, "per-epoch LR decay factor"),
                      "lr_decay", tr->cfg.lr_decay);
        tr_bind->bind(cmd->add_option("--batch", tr->cfg.batch_size, "batch size in RoIs"),
                      "batch_size", tr->cfg.batch_size);
        tr_bind->bind(cmd->add_option("--seed", tr->cfg.seed, "init and shuffle seed"), "seed",
                      tr->cfg.seed);
        tr_bind->bind(cmd->add_flag("--no-standardize", tr->no_standardize,
                                    "skip per-column feature standardization"),
                      "no_standardize", tr->no_standardize);
        tr_bind->bind(cmd->add_option("--sc-roi", tr->params.sc_roi, "RoI scale factor"),
                      "sc_roi", tr->params.sc_roi);
        tr_bind->bind(cmd->add_option("--t-roi", tr->params.t_roi, "capture threshold"),
                      "t_roi", tr->params.t_roi);
        cmd->callback([tr, tr_bind] {
            tr_bind->apply(tr->config);
            run_train(*tr);
        });
    }

    auto in = std::make_shared<InferArgs>();
    auto in_bind = std::make_shared<ConfigBinding>();
    {
        CLI::App* cmd = app.add_subcommand("infer", "predict instance labelings");
        cmd->add_option("--config", in->config, "experiment config JSON; flags win");
        cmd->add_option("--data", in->data, "dataset directory")->required();
        cmd->add_option("--out", in->out, "output labelings file")->required();
        in_bind->bind(cmd->add_option("--method", in->method,
                                      "stxpn|statistical|hac-roi|hac-img|oracle")
                          ->check(CLI::IsMember(
                              {"stxpn", "statistical", "hac-roi", "hac-img", "oracle"})),
                      "method", in->method);
        cmd->add_option("--checkpoint", in->checkpoint, "trained model (stxpn)");
        cmd->add_option("--percent-data", in->percent_data,
                        "dataset for estimating class percentages (statistical)");
        in_bind->bind(cmd->add_option("--metric", in->metric, "l1|l2 (statistical)")
                          ->check(CLI::IsMember({"l1", "l2"})),
                      "metric", in->metric);
        in_bind->bind(cmd->add_option("--tconf", in->bps_cfg.t_conf, "BPS confidence threshold"),
                      "t_conf", in->bps_cfg.t_conf);
        in_bind->bind(cmd->add_option("--sc-roi", in->params.sc_roi, "RoI scale factor"),
                      "sc_roi", in->params.sc_roi);
        in_bind->bind(cmd->add_option("--t-roi", in->params.t_roi, "capture threshold"),
                      "t_roi", in->params.t_roi);
        in_bind->bind(cmd->add_option("--default-mu", in->default_mu,
                                      "fallback HAC stop distance, m"),
                      "default_mu", in->default_mu);
        cmd->add_option("--mu", in->mu_overrides, "HAC stop distance per class, class=value")
            ->delimiter(',');
        cmd->callback([in, in_bind] {
            in_bind->apply(in->config);
            if (in->method.empty()) throw UsageError("--method is required");
            run_infer(*in);
        });
    }

    auto ev = std::make_shared<EvalArgs>();
    auto ev_bind = std::make_shared<ConfigBinding>();
    {
        CLI::App* cmd = app.add_subcommand("eval", "score predictions with average precision");
        cmd->add_option("--config", ev->config, "experiment config JSON; flags win");
        cmd->add_option("--data", ev->data, "dataset directory")->required();
        cmd->add_option("--pred", ev->pred, "predicted labelings file")->required();
        cmd->add_option("--gt", ev->gt, "reference labelings file (default: dataset GT)");
        cmd->add_option("--out", ev->out, "AP report CSV");
        ev_bind->bind(cmd->add_flag("--mask-level", ev->mask_level,
                                    "score against pixel masks instead of stixel GT"),
                      "mask_level", ev->mask_level);
        cmd->callback([ev, ev_bind] {
            ev_bind->apply(ev->config);
            run_eval(*ev);
        });
    }

    auto be = std::make_shared<BenchArgs>();
    auto be_bind = std::make_shared<ConfigBinding>();
    {
        CLI::App* cmd = app.add_subcommand("bench", "runtime benchmark of the pipeline");
        cmd->add_option("--config", be->config, "experiment config JSON; flags win");
        cmd->add_option("--stixels", be->stixels, "stixel counts")->delimiter(',');
        cmd->add_option("--boxes", be->boxes, "detection counts")->delimiter(',');
        cmd->add_option("--features", be->features, "input feature widths")->delimiter(',');
        be_bind->bind(cmd->add_option("--runs", be->runs, "timed repetitions"), "runs",
                      be->runs);
        be_bind->bind(cmd->add_option("--seed", be->seed, "workload and model seed"), "seed",
                      be->seed);
        cmd->add_option("--checkpoint", be->checkpoint, "time a trained model instead");
        cmd->add_option("--out", be->out, "benchmark CSV");
        cmd->callback([be, be_bind] {
            be_bind->apply(be->config);
            run_bench(*be);
        });
    }

    auto re = std::make_shared<RenderArgs>();
    auto re_bind = std::make_shared<ConfigBinding>();
    {
        CLI::App* cmd = app.add_subcommand("render", "SVG visualization of labelings");
        cmd->add_option("--config", re->config, "experiment config JSON; flags win");
        cmd->add_option("--data", re->data, "dataset directory")->required();
        cmd->add_option("--labels", re->labels, "labelings file (default: dataset GT)");
        cmd->add_option("--out", re->out, "output directory")->required();
        re_bind->bind(cmd->add_flag("--boxes", re->boxes, "outline detection boxes"), "boxes",
                      re->boxes);
        cmd->callback([re, re_bind] {
            re_bind->apply(re->config);
            run_render(*re);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
