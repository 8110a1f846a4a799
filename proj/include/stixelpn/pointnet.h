#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stixelpn/core.h"
#include "stixelpn/filter.h"
#include "stixelpn/ingest.h"
#include "stixelpn/parallel.h"

// Per-stixel segmentation network: shared MLP feature extractor, elementwise
// max-pool global feature, and a segmentation head consuming the
// concatenation of one tapped extractor stage with the global feature. All
// training math is f64; a f32 forward path exists for runtime benchmarks.

namespace stixelpn::pointnet {

struct ArchitectureSpec {
    int input_width = filter::kFeatureCount;
    std::vector<int> extractor_widths{64, 64, 64, 128, 1024};
    std::vector<int> head_widths{512, 256, 128, 2};
    // 1-based extractor stage whose per-stixel output feeds the head
    int head_tap_stage = 2;

    static ArchitectureSpec defaults() { return {}; }
    // small widths for fast desk-scale training runs
    static ArchitectureSpec compact();

    int tap_width() const { return extractor_widths[head_tap_stage - 1]; }
    int global_width() const { return extractor_widths.back(); }
    int head_input_width() const { return tap_width() + global_width(); }
    int layer_count() const {
        return static_cast<int>(extractor_widths.size() + head_widths.size());
    }
};
std::string validate(const ArchitectureSpec& arch);

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 60;
    std::uint64_t seed = 1;
    double lr_decay = 1.0;  // per-epoch multiplicative factor
    bool standardize = true;
};
std::string validate(const TrainConfig& cfg);

struct ModelState {
    ArchitectureSpec arch;
    // extractor stages then head stages; weights row-major [in x out]
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static ModelState init(const ArchitectureSpec& arch, std::uint64_t seed);
    static ModelState from_checkpoint(const NetworkCheckpoint& ckpt);
};

struct Gradients {
    std::vector<std::vector<double>> weights, biases;
    static Gradients like(const ModelState& state);
    void zero();
    void scale(double s);
};

struct AdamState {
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    std::uint64_t step = 0;
    static AdamState like(const ModelState& state);
};

// Scratch reused across forward/backward calls; ensure() grows buffers.
struct Workspace {
    std::vector<std::vector<double>> ext;   // post-ReLU extractor stages [n x width]
    std::vector<double> global_feat;        // column max of the last stage
    std::vector<int> arg_row;               // source row per global component
    std::vector<double> global_head;        // global feature through head layer 1
    std::vector<std::vector<double>> head;  // head stages; last holds raw logits
    std::vector<double> pc;                 // object-class softmax column
    std::vector<std::vector<double>> d_ext, d_head;
    std::vector<double> d_tap, d_global, col_sum, zero_bias, bias_sink;
    void ensure(const ArchitectureSpec& arch, int n);
};

struct RoiPrediction {
    std::vector<double> pc;
    std::vector<int> decision;  // 1 iff pc > 0.5
};

// Fills ws.ext/ws.head/ws.pc; logits land in ws.head.back(). The head's
// first layer runs as a split GEMM: tap rows through the top tap_width()
// weight rows, the global feature once through the rest.
void forward(const ModelState& state, const double* features, int n, Workspace& ws,
             ExecMode mode);
RoiPrediction predict(const ModelState& state, const filter::RoiSample& sample, Workspace& ws,
                      ExecMode mode);

// Mean per-stixel softmax cross-entropy, log-sum-exp stabilized.
double loss(const double* logits, int n, const std::vector<int>& targets);

// Requires a preceding forward() on the same inputs; accumulates exact
// gradients into grads and returns the loss. Max-pool gradient routes to the
// recorded argmax row; the ReLU subgradient at 0 is 0.
double backward(const ModelState& state, const double* features, int n,
                const std::vector<int>& targets, Workspace& ws, Gradients& grads, ExecMode mode);

// Bias-corrected ADAM update; advances opt.step.
void adam_step(ModelState& state, AdamState& opt, const Gradients& grads, const TrainConfig& cfg,
               double lr);

// Binary targets for one RoI sample: the GT instance sharing the box's
// merged class with the most captured stixels wins (ties break toward the
// smaller instance id); no candidate leaves every target 0.
std::vector<int> target_assignment(const filter::RoiSample& sample, const InstanceLabeling& gt,
                                   const ClassTable& classes, InstanceId* chosen = nullptr);

struct TrainingSample {
    std::vector<double> features;  // row-major [count x input width]
    std::vector<int> targets;
    int count = 0;
};

struct EpochStat {
    int epoch = 0;
    double mean_loss = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    NetworkCheckpoint checkpoint;
    std::vector<EpochStat> log;
};

// Runs cfg.epochs additional epochs (fresh init, or resuming state, optimizer
// moments, and epoch numbering from resume_from). Deterministic per seed.
TrainResult train_samples(const std::vector<TrainingSample>& samples,
                          const ArchitectureSpec& arch, const TrainConfig& cfg, ExecMode mode,
                          const NetworkCheckpoint* resume_from = nullptr,
                          const filter::FeatureStats* stats = nullptr);

// Dataset wrapper: captures RoI samples, derives targets from entry GT,
// optionally computes and applies feature standardization.
TrainResult train(const Dataset& data, const ArchitectureSpec& arch, const TrainConfig& cfg,
                  const filter::FilterParams& params, ExecMode mode,
                  const NetworkCheckpoint* resume_from = nullptr);

std::string loss_csv(const std::vector<EpochStat>& log);

struct ModelStateF32 {
    ArchitectureSpec arch;
    std::vector<std::vector<float>> weights, biases;
    static ModelStateF32 from(const ModelState& state);
};

struct WorkspaceF32 {
    std::vector<std::vector<float>> ext;
    std::vector<float> global_feat;
    std::vector<int> arg_row;
    std::vector<float> global_head;
    std::vector<std::vector<float>> head;
    std::vector<float> pc;
    std::vector<float> zero_bias;
    void ensure(const ArchitectureSpec& arch, int n);
};

void forward_f32(const ModelStateF32& state, const float* features, int n, WorkspaceF32& ws,
                 ExecMode mode);

}  // namespace stixelpn::pointnet
