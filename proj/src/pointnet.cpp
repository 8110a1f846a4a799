#include "stixelpn/pointnet.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "stixelpn/kernels.h"
#include "stixelpn/rng.h"

namespace stixelpn::pointnet {

namespace {

// rng stream ids: layers use 1..layer_count, epoch shuffles start here
constexpr std::uint64_t kShuffleStream = 1'000'000;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

template <typename T>
void softmax_object_column(const T* logits, int n, T* pc) {
    for (int r = 0; r < n; ++r) {
        const T z0 = logits[2 * r], z1 = logits[2 * r + 1];
        const T m = std::max(z0, z1);
        const T e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
        pc[r] = e1 / (e0 + e1);
    }
}

template <typename Model, typename Ws, typename T>
void forward_impl(const Model& state, const T* features, int n, Ws& ws, ExecMode mode) {
    const ArchitectureSpec& arch = state.arch;
    require(n >= 1, "forward: need at least one stixel");
    ws.ensure(arch, n);

    const int n_ext = static_cast<int>(arch.extractor_widths.size());
    const T* x = features;
    int in = arch.input_width;
    for (int s = 0; s < n_ext; ++s) {
        const int out = arch.extractor_widths[s];
        kernels::dense_forward(x, n, in, state.weights[s].data(), state.biases[s].data(), out,
                               ws.ext[s].data(), true, mode);
        x = ws.ext[s].data();
        in = out;
    }

    const int gw = arch.global_width();
    kernels::colwise_max(ws.ext[n_ext - 1].data(), n, gw, ws.global_feat.data(),
                         ws.arg_row.data(), mode);

    const int n_head = static_cast<int>(arch.head_widths.size());
    const int tap_w = arch.tap_width();
    const int h0 = arch.head_widths[0];
    const std::vector<T>& w1 = state.weights[n_ext];
    const T* tap = ws.ext[arch.head_tap_stage - 1].data();
    // split GEMM: tap rows hit the top tap_w weight rows, the global feature
    // goes through the remaining gw rows once and is added to every stixel
    kernels::dense_forward(tap, n, tap_w, w1.data(), state.biases[n_ext].data(), h0,
                           ws.head[0].data(), false, mode);
    kernels::dense_forward(ws.global_feat.data(), 1, gw,
                           w1.data() + static_cast<long>(tap_w) * h0, ws.zero_bias.data(), h0,
                           ws.global_head.data(), false, mode);
    const bool relu0 = n_head > 1;
    for (int r = 0; r < n; ++r) {
        T* row = ws.head[0].data() + static_cast<long>(r) * h0;
        for (int j = 0; j < h0; ++j) {
            const T v = row[j] + ws.global_head[j];
            row[j] = relu0 ? std::max(v, T(0)) : v;
        }
    }

    in = h0;
    for (int s = 1; s < n_head; ++s) {
        const int out = arch.head_widths[s];
        kernels::dense_forward(ws.head[s - 1].data(), n, in, state.weights[n_ext + s].data(),
                               state.biases[n_ext + s].data(), out, ws.head[s].data(),
                               s + 1 < n_head, mode);
        in = out;
    }

    softmax_object_column(ws.head[n_head - 1].data(), n, ws.pc.data());
}

std::vector<std::vector<double>> zeros_like(const std::vector<std::vector<double>>& shapes) {
    std::vector<std::vector<double>> out(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) out[i].assign(shapes[i].size(), 0.0);
    return out;
}

}  // namespace

ArchitectureSpec ArchitectureSpec::compact() {
    ArchitectureSpec arch;
    arch.extractor_widths = {32, 32, 32, 64, 256};
    arch.head_widths = {128, 64, 32, 2};
    return arch;
}

std::string validate(const ArchitectureSpec& arch) {
    std::ostringstream err;
    if (arch.input_width < 1) err << "input width must be positive; ";
    if (arch.extractor_widths.empty()) err << "extractor needs at least one stage; ";
    for (int w : arch.extractor_widths)
        if (w < 1) {
            err << "extractor widths must be positive; ";
            break;
        }
    if (arch.head_widths.empty() || arch.head_widths.back() != 2)
        err << "head must end in width 2; ";
    for (int w : arch.head_widths)
        if (w < 1) {
            err << "head widths must be positive; ";
            break;
        }
    if (arch.head_tap_stage < 1 ||
        arch.head_tap_stage > static_cast<int>(arch.extractor_widths.size()))
        err << "head tap stage out of range; ";
    return err.str();
}

std::string validate(const TrainConfig& cfg) {
    std::ostringstream err;
    if (cfg.batch_size < 1) err << "batch size must be >= 1; ";
    if (!(cfg.learning_rate > 0)) err << "learning rate must be positive; ";
    if (!(cfg.beta1 >= 0 && cfg.beta1 < 1)) err << "beta1 must lie in [0,1); ";
    if (!(cfg.beta2 >= 0 && cfg.beta2 < 1)) err << "beta2 must lie in [0,1); ";
    if (!(cfg.epsilon > 0)) err << "epsilon must be positive; ";
    if (cfg.epochs < 0) err << "epochs must be >= 0; ";
    if (!(cfg.lr_decay > 0 && cfg.lr_decay <= 1)) err << "lr decay must lie in (0,1]; ";
    return err.str();
}

ModelState ModelState::init(const ArchitectureSpec& arch, std::uint64_t seed) {
    const std::string err = validate(arch);
    require(err.empty(), "init: " + err);
    ModelState state;
    state.arch = arch;
    const int n_ext = static_cast<int>(arch.extractor_widths.size());
    int in = arch.input_width;
    for (int l = 0; l < arch.layer_count(); ++l) {
        const bool head = l >= n_ext;
        const int layer_in = head && l == n_ext ? arch.head_input_width() : in;
        const int out = head ? arch.head_widths[l - n_ext] : arch.extractor_widths[l];
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(l) + 1));
        const double limit = std::sqrt(6.0 / layer_in);
        std::vector<double> w(static_cast<std::size_t>(layer_in) * out);
        for (double& v : w) v = rng.uniform(-limit, limit);
        state.weights.push_back(std::move(w));
        state.biases.emplace_back(out, 0.0);
        in = out;
    }
    return state;
}

ModelState ModelState::from_checkpoint(const NetworkCheckpoint& ckpt) {
    const std::string err = ckpt.validate();
    require(err.empty(), "from_checkpoint: " + err);
    ModelState state;
    state.arch.input_width = ckpt.input_width;
    state.arch.extractor_widths = ckpt.extractor_widths;
    state.arch.head_widths = ckpt.head_widths;
    state.arch.head_tap_stage = ckpt.head_tap_stage;
    state.weights = ckpt.weights;
    state.biases = ckpt.biases;
    return state;
}

Gradients Gradients::like(const ModelState& state) {
    Gradients g;
    g.weights = zeros_like(state.weights);
    g.biases = zeros_like(state.biases);
    return g;
}

void Gradients::zero() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::scale(double s) {
    for (auto& w : weights)
        for (double& v : w) v *= s;
    for (auto& b : biases)
        for (double& v : b) v *= s;
}

AdamState AdamState::like(const ModelState& state) {
    AdamState a;
    a.m_w = zeros_like(state.weights);
    a.v_w = zeros_like(state.weights);
    a.m_b = zeros_like(state.biases);
    a.v_b = zeros_like(state.biases);
    return a;
}

void Workspace::ensure(const ArchitectureSpec& arch, int n) {
    const std::size_t rows = static_cast<std::size_t>(n);
    const std::size_t n_ext = arch.extractor_widths.size();
    ext.resize(n_ext);
    d_ext.resize(n_ext);
    for (std::size_t s = 0; s < n_ext; ++s) {
        ext[s].resize(rows * arch.extractor_widths[s]);
        d_ext[s].resize(rows * arch.extractor_widths[s]);
    }
    const std::size_t n_head = arch.head_widths.size();
    head.resize(n_head);
    d_head.resize(n_head);
    for (std::size_t s = 0; s < n_head; ++s) {
        head[s].resize(rows * arch.head_widths[s]);
        d_head[s].resize(rows * arch.head_widths[s]);
    }
    global_feat.resize(arch.global_width());
    arg_row.resize(arch.global_width());
    global_head.resize(arch.head_widths[0]);
    pc.resize(rows);
    d_tap.resize(rows * arch.tap_width());
    d_global.resize(arch.global_width());
    col_sum.resize(arch.head_widths[0]);
    zero_bias.assign(arch.head_widths[0], 0.0);
    bias_sink.resize(arch.head_widths[0]);
}

void WorkspaceF32::ensure(const ArchitectureSpec& arch, int n) {
    const std::size_t rows = static_cast<std::size_t>(n);
    ext.resize(arch.extractor_widths.size());
    for (std::size_t s = 0; s < ext.size(); ++s) ext[s].resize(rows * arch.extractor_widths[s]);
    head.resize(arch.head_widths.size());
    for (std::size_t s = 0; s < head.size(); ++s) head[s].resize(rows * arch.head_widths[s]);
    global_feat.resize(arch.global_width());
    arg_row.resize(arch.global_width());
    global_head.resize(arch.head_widths[0]);
    pc.resize(rows);
    zero_bias.assign(arch.head_widths[0], 0.0f);
}

void forward(const ModelState& state, const double* features, int n, Workspace& ws,
             ExecMode mode) {
    forward_impl(state, features, n, ws, mode);
}

void forward_f32(const ModelStateF32& state, const float* features, int n, WorkspaceF32& ws,
                 ExecMode mode) {
    forward_impl(state, features, n, ws, mode);
}

RoiPrediction predict(const ModelState& state, const filter::RoiSample& sample, Workspace& ws,
                      ExecMode mode) {
    require(sample.count() >= 1, "predict: empty sample");
    forward(state, sample.features.data(), sample.count(), ws, mode);
    RoiPrediction pred;
    pred.pc.assign(ws.pc.begin(), ws.pc.begin() + sample.count());
    pred.decision.resize(sample.count());
    for (int i = 0; i < sample.count(); ++i) pred.decision[i] = pred.pc[i] > 0.5 ? 1 : 0;
    return pred;
}

double loss(const double* logits, int n, const std::vector<int>& targets) {
    require(n >= 1 && static_cast<int>(targets.size()) == n, "loss: one target per stixel");
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        const int t = targets[r];
        require(t == 0 || t == 1, "loss: targets must be binary");
        const double z0 = logits[2 * r], z1 = logits[2 * r + 1];
        const double m = std::max(z0, z1);
        const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
        total += lse - (t == 1 ? z1 : z0);
    }
    return total / n;
}

double backward(const ModelState& state, const double* features, int n,
                const std::vector<int>& targets, Workspace& ws, Gradients& grads, ExecMode mode) {
    const ArchitectureSpec& arch = state.arch;
    const double sample_loss = loss(ws.head.back().data(), n, targets);

    const int n_ext = static_cast<int>(arch.extractor_widths.size());
    const int n_head = static_cast<int>(arch.head_widths.size());
    // loss gradient w.r.t. logits: (softmax - onehot) / n
    double* dz = ws.d_head[n_head - 1].data();
    const double* logits = ws.head[n_head - 1].data();
    for (int r = 0; r < n; ++r) {
        const double z0 = logits[2 * r], z1 = logits[2 * r + 1];
        const double m = std::max(z0, z1);
        const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
        const double inv = 1.0 / (e0 + e1);
        dz[2 * r] = (e0 * inv - (targets[r] == 0 ? 1.0 : 0.0)) / n;
        dz[2 * r + 1] = (e1 * inv - (targets[r] == 1 ? 1.0 : 0.0)) / n;
    }

    for (int s = n_head - 1; s >= 1; --s) {
        const int out = arch.head_widths[s];
        const int in = arch.head_widths[s - 1];
        const int layer = n_ext + s;
        kernels::dense_backward_params(ws.head[s - 1].data(), ws.d_head[s].data(), n, in, out,
                                       grads.weights[layer].data(), grads.biases[layer].data(),
                                       mode);
        kernels::dense_backward_input(ws.d_head[s].data(), n, out, state.weights[layer].data(),
                                      in, ws.d_head[s - 1].data(), mode);
        kernels::relu_backward_inplace(ws.head[s - 1].data(), static_cast<long>(n) * in,
                                       ws.d_head[s - 1].data(), mode);
    }

    // head layer 1 splits like the forward: tap rows and a rank-1 global part
    const int tap_w = arch.tap_width();
    const int gw = arch.global_width();
    const int h0 = arch.head_widths[0];
    const double* tap = ws.ext[arch.head_tap_stage - 1].data();
    const double* d0 = ws.d_head[0].data();
    kernels::dense_backward_params(tap, d0, n, tap_w, h0, grads.weights[n_ext].data(),
                                   grads.biases[n_ext].data(), mode);
    std::fill(ws.col_sum.begin(), ws.col_sum.end(), 0.0);
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < h0; ++j) ws.col_sum[j] += d0[static_cast<long>(r) * h0 + j];
    std::fill(ws.bias_sink.begin(), ws.bias_sink.end(), 0.0);
    kernels::dense_backward_params(ws.global_feat.data(), ws.col_sum.data(), 1, gw, h0,
                                   grads.weights[n_ext].data() + static_cast<long>(tap_w) * h0,
                                   ws.bias_sink.data(), mode);
    kernels::dense_backward_input(d0, n, h0, state.weights[n_ext].data(), tap_w, ws.d_tap.data(),
                                  mode);
    kernels::dense_backward_input(ws.col_sum.data(), 1, h0,
                                  state.weights[n_ext].data() + static_cast<long>(tap_w) * h0, gw,
                                  ws.d_global.data(), mode);

    // max-pool routes each global component's gradient to its argmax row
    std::fill(ws.d_ext[n_ext - 1].begin(), ws.d_ext[n_ext - 1].end(), 0.0);
    for (int j = 0; j < gw; ++j)
        ws.d_ext[n_ext - 1][static_cast<long>(ws.arg_row[j]) * gw + j] += ws.d_global[j];
    const int tap_idx = arch.head_tap_stage - 1;
    if (tap_idx == n_ext - 1)
        for (long i = 0; i < static_cast<long>(n) * tap_w; ++i)
            ws.d_ext[n_ext - 1][i] += ws.d_tap[i];

    for (int s = n_ext - 1; s >= 0; --s) {
        const int out = arch.extractor_widths[s];
        const int in = s == 0 ? arch.input_width : arch.extractor_widths[s - 1];
        kernels::relu_backward_inplace(ws.ext[s].data(), static_cast<long>(n) * out,
                                       ws.d_ext[s].data(), mode);
        const double* x = s == 0 ? features : ws.ext[s - 1].data();
        kernels::dense_backward_params(x, ws.d_ext[s].data(), n, in, out,
                                       grads.weights[s].data(), grads.biases[s].data(), mode);
        if (s > 0) {
            kernels::dense_backward_input(ws.d_ext[s].data(), n, out, state.weights[s].data(),
                                          in, ws.d_ext[s - 1].data(), mode);
            if (s - 1 == tap_idx)
                for (long i = 0; i < static_cast<long>(n) * tap_w; ++i)
                    ws.d_ext[s - 1][i] += ws.d_tap[i];
        }
    }
    return sample_loss;
}

void adam_step(ModelState& state, AdamState& opt, const Gradients& grads, const TrainConfig& cfg,
               double lr) {
    const std::uint64_t t = opt.step + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    auto update = [&](std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.epsilon);
        }
    };
    for (std::size_t l = 0; l < state.weights.size(); ++l) {
        update(state.weights[l], opt.m_w[l], opt.v_w[l], grads.weights[l]);
        update(state.biases[l], opt.m_b[l], opt.v_b[l], grads.biases[l]);
    }
    opt.step = t;
}

std::vector<int> target_assignment(const filter::RoiSample& sample, const InstanceLabeling& gt,
                                   const ClassTable& classes, InstanceId* chosen) {
    const int box_class = classes.merged(sample.roi.source.box_label);
    std::map<InstanceId, int> counts;
    for (int sid : sample.captured) {
        const auto it = gt.labels.find(sid);
        if (it == gt.labels.end() || it->second.is_background()) continue;
        if (classes.merged(it->second.cls) != box_class) continue;
        ++counts[it->second];
    }
    InstanceId best = InstanceId::background();
    int best_count = 0;
    for (const auto& [inst, count] : counts)
        if (count > best_count) {
            best = inst;
            best_count = count;
        }
    if (chosen != nullptr) *chosen = best;
    std::vector<int> targets(sample.captured.size(), 0);
    if (!best.is_background())
        for (std::size_t i = 0; i < sample.captured.size(); ++i) {
            const auto it = gt.labels.find(sample.captured[i]);
            if (it != gt.labels.end() && it->second == best) targets[i] = 1;
        }
    return targets;
}

namespace {

NetworkCheckpoint make_checkpoint(const ModelState& state, const TrainConfig& cfg,
                                  const AdamState& opt, int epochs_done,
                                  const filter::FeatureStats* stats) {
    NetworkCheckpoint ckpt;
    ckpt.input_width = state.arch.input_width;
    ckpt.extractor_widths = state.arch.extractor_widths;
    ckpt.head_widths = state.arch.head_widths;
    ckpt.head_tap_stage = state.arch.head_tap_stage;
    ckpt.seed = cfg.seed;
    ckpt.learning_rate = cfg.learning_rate;
    ckpt.batch_size = cfg.batch_size;
    ckpt.beta1 = cfg.beta1;
    ckpt.beta2 = cfg.beta2;
    ckpt.epsilon = cfg.epsilon;
    ckpt.step = opt.step;
    ckpt.epochs_done = epochs_done;
    ckpt.weights = state.weights;
    ckpt.biases = state.biases;
    ckpt.has_moments = true;
    ckpt.m_w = opt.m_w;
    ckpt.v_w = opt.v_w;
    ckpt.m_b = opt.m_b;
    ckpt.v_b = opt.v_b;
    if (stats != nullptr) {
        ckpt.has_feature_stats = true;
        ckpt.feature_mean = stats->mean;
        ckpt.feature_std = stats->std;
    }
    return ckpt;
}

}  // namespace

TrainResult train_samples(const std::vector<TrainingSample>& samples,
                          const ArchitectureSpec& arch, const TrainConfig& cfg, ExecMode mode,
                          const NetworkCheckpoint* resume_from,
                          const filter::FeatureStats* stats) {
    std::string err = validate(arch);
    if (err.empty()) err = validate(cfg);
    require(err.empty(), "train: " + err);
    require(!samples.empty(), "train: empty dataset");
    for (const TrainingSample& s : samples) {
        require(s.count >= 1, "train: sample with no stixels");
        require(s.features.size() ==
                    static_cast<std::size_t>(s.count) * arch.input_width,
                "train: feature width mismatch");
        require(s.targets.size() == static_cast<std::size_t>(s.count),
                "train: one target per stixel");
    }

    ModelState state =
        resume_from != nullptr ? ModelState::from_checkpoint(*resume_from)
                               : ModelState::init(arch, cfg.seed);
    AdamState opt = AdamState::like(state);
    int epochs_done = 0;
    if (resume_from != nullptr) {
        require(state.arch.input_width == arch.input_width &&
                    state.arch.extractor_widths == arch.extractor_widths &&
                    state.arch.head_widths == arch.head_widths &&
                    state.arch.head_tap_stage == arch.head_tap_stage,
                "train: resume architecture mismatch");
        opt.step = resume_from->step;
        epochs_done = resume_from->epochs_done;
        if (resume_from->has_moments) {
            opt.m_w = resume_from->m_w;
            opt.v_w = resume_from->v_w;
            opt.m_b = resume_from->m_b;
            opt.v_b = resume_from->v_b;
        }
    }

    // replay the decay sequence so a resumed run sees identical multipliers
    double epoch_lr = cfg.learning_rate;
    for (int e = 0; e < epochs_done; ++e) epoch_lr *= cfg.lr_decay;

    Workspace ws;
    Gradients grads = Gradients::like(state);
    std::vector<int> order(samples.size());
    TrainResult result;
    for (int e = 0; e < cfg.epochs; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        const int abs_epoch = epochs_done + e;
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle(Rng::derive(cfg.seed, kShuffleStream + static_cast<std::uint64_t>(abs_epoch)));
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[shuffle.uniform_int(0, static_cast<int>(i))]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            grads.zero();
            for (std::size_t k = start; k < stop; ++k) {
                const TrainingSample& s = samples[order[k]];
                forward(state, s.features.data(), s.count, ws, mode);
                epoch_loss += backward(state, s.features.data(), s.count, s.targets, ws, grads,
                                       mode);
            }
            grads.scale(1.0 / static_cast<double>(stop - start));
            adam_step(state, opt, grads, cfg, epoch_lr);
        }
        epoch_lr *= cfg.lr_decay;

        const auto t1 = std::chrono::steady_clock::now();
        EpochStat stat;
        stat.epoch = abs_epoch + 1;
        stat.mean_loss = epoch_loss / static_cast<double>(samples.size());
        stat.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        result.log.push_back(stat);
    }

    result.checkpoint = make_checkpoint(state, cfg, opt, epochs_done + cfg.epochs, stats);
    if (resume_from != nullptr && resume_from->has_feature_stats && stats == nullptr) {
        result.checkpoint.has_feature_stats = true;
        result.checkpoint.feature_mean = resume_from->feature_mean;
        result.checkpoint.feature_std = resume_from->feature_std;
    }
    return result;
}

TrainResult train(const Dataset& data, const ArchitectureSpec& arch, const TrainConfig& cfg,
                  const filter::FilterParams& params, ExecMode mode,
                  const NetworkCheckpoint* resume_from) {
    require(!data.entries.empty(), "train: empty dataset");
    std::vector<TrainingSample> samples;
    for (const DatasetEntry& entry : data.entries) {
        const auto rois =
            filter::build_frame_samples(entry.frame, entry.detections, params, data.classes);
        for (const filter::RoiSample& roi : rois) {
            TrainingSample s;
            s.count = roi.count();
            s.features = roi.features;
            s.targets = target_assignment(roi, entry.gt, data.classes);
            samples.push_back(std::move(s));
        }
    }
    require(!samples.empty(), "train: no RoI samples captured");

    filter::FeatureStats stats;
    bool use_stats = false;
    if (resume_from != nullptr && resume_from->has_feature_stats) {
        stats.mean = resume_from->feature_mean;
        stats.std = resume_from->feature_std;
        use_stats = true;
    } else if (cfg.standardize && resume_from == nullptr) {
        const int width = arch.input_width;
        stats.mean.assign(width, 0.0);
        stats.std.assign(width, 0.0);
        long rows = 0;
        for (const TrainingSample& s : samples) rows += s.count;
        for (const TrainingSample& s : samples)
            for (int r = 0; r < s.count; ++r)
                for (int c = 0; c < width; ++c) stats.mean[c] += s.features[r * width + c];
        for (int c = 0; c < width; ++c) stats.mean[c] /= static_cast<double>(rows);
        for (const TrainingSample& s : samples)
            for (int r = 0; r < s.count; ++r)
                for (int c = 0; c < width; ++c) {
                    const double d = s.features[r * width + c] - stats.mean[c];
                    stats.std[c] += d * d;
                }
        for (int c = 0; c < width; ++c) {
            stats.std[c] = std::sqrt(stats.std[c] / static_cast<double>(rows));
            if (!(stats.std[c] > 1e-12)) stats.std[c] = 1.0;  // constant column
        }
        use_stats = true;
    }
    if (use_stats) {
        const int width = arch.input_width;
        for (TrainingSample& s : samples)
            for (int r = 0; r < s.count; ++r)
                for (int c = 0; c < width; ++c)
                    s.features[r * width + c] =
                        (s.features[r * width + c] - stats.mean[c]) / stats.std[c];
    }

    return train_samples(samples, arch, cfg, mode, resume_from, use_stats ? &stats : nullptr);
}

std::string loss_csv(const std::vector<EpochStat>& log) {
    std::string out = "epoch,mean_loss,wall_time\n";
    char line[96];
    for (const EpochStat& s : log) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.6f\n", s.epoch, s.mean_loss,
                      s.wall_seconds);
        out += line;
    }
    return out;
}

ModelStateF32 ModelStateF32::from(const ModelState& state) {
    ModelStateF32 out;
    out.arch = state.arch;
    out.weights.reserve(state.weights.size());
    out.biases.reserve(state.biases.size());
    for (const auto& w : state.weights) out.weights.emplace_back(w.begin(), w.end());
    for (const auto& b : state.biases) out.biases.emplace_back(b.begin(), b.end());
    return out;
}

}  // namespace stixelpn::pointnet
