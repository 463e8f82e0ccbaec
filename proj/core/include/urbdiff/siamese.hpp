#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urbdiff/dataset.hpp"
#include "urbdiff/nn/gradcheck.hpp"
#include "urbdiff/nn/ops.hpp"
#include "urbdiff/nn/sgd.hpp"
#include "urbdiff/raster.hpp"
#include "urbdiff/rng.hpp"

namespace urbdiff {

struct SiameseConfig {
    enum class DiffMode { kAbsolute, kEuclidean };

    int in_bands = 13;
    std::vector<int> encoder_channels = {16, 32, 64, 128};
    int patch_size = 32;  // power of two, divisible by 2^levels
    DiffMode diff_mode = DiffMode::kAbsolute;

    int levels() const { return static_cast<int>(encoder_channels.size()); }
    int bottleneck_channels() const {
        return diff_mode == DiffMode::kAbsolute ? encoder_channels.back() : 1;
    }
    // Mirrors the encoder: [.., enc[1], enc[0], enc[0]] so the widths taper
    // back down and the last block keeps the first encoder width.
    std::vector<int> decoder_channels() const;
    void validate() const;  // ConfigError on violation
};

// One parameter set; both branches of the forward pass reference these same
// nodes, so weight sharing is structural rather than copied.
template <class T>
struct NetworkT {
    SiameseConfig config;
    std::vector<nn::VarT<T>> enc_w, enc_b;  // per level: (C_out,C_in,3,3), (C_out)
    std::vector<nn::VarT<T>> dec_w;         // per level: (C_in,C_out,2,2)
    nn::VarT<T> cls_w, cls_b;               // (2,C), (2)

    std::vector<nn::VarT<T>> parameters() const {
        std::vector<nn::VarT<T>> out;
        for (std::size_t i = 0; i < enc_w.size(); ++i) {
            out.push_back(enc_w[i]);
            out.push_back(enc_b[i]);
        }
        for (const auto& w : dec_w) out.push_back(w);
        out.push_back(cls_w);
        out.push_back(cls_b);
        return out;
    }
};

using Network = NetworkT<float>;

// Seeded init: weights uniform in +/- sqrt(6 / fan_in), biases zero.
Network build_network(const SiameseConfig& cfg, std::uint64_t seed);

template <class T, class U>
NetworkT<U> cast_network(const NetworkT<T>& src) {
    NetworkT<U> out;
    out.config = src.config;
    auto clone = [](const nn::VarT<T>& v) {
        auto n = nn::make_var(v->value.template cast<U>(), v->requires_grad, v->name);
        return n;
    };
    for (const auto& w : src.enc_w) out.enc_w.push_back(clone(w));
    for (const auto& b : src.enc_b) out.enc_b.push_back(clone(b));
    for (const auto& w : src.dec_w) out.dec_w.push_back(clone(w));
    out.cls_w = clone(src.cls_w);
    out.cls_b = clone(src.cls_b);
    return out;
}

// Shared-weight encoder on both inputs, bottleneck difference, transpose-conv
// decoder, 1x1 classifier, log_softmax. Inputs shaped (N, in_bands, p, p);
// output (N, 2, p, p) of per-pixel log-probabilities.
template <class T>
nn::VarT<T> siamese_forward(const NetworkT<T>& net, const nn::VarT<T>& a, const nn::VarT<T>& b) {
    const auto& cfg = net.config;
    if (a->value.rank() != 4 || b->value.rank() != 4 ||
        a->value.dim(1) != cfg.in_bands || b->value.dim(1) != cfg.in_bands)
        throw ShapeError("siamese_forward: inputs must be (N," + std::to_string(cfg.in_bands) +
                         ",H,W)");
    if (!a->value.same_shape(b->value))
        throw ShapeError("siamese_forward: input shapes differ");

    auto encode = [&](const nn::VarT<T>& x) {
        nn::VarT<T> h = x;
        for (int i = 0; i < cfg.levels(); ++i)
            h = nn::maxpool2x2(nn::relu(nn::conv2d(h, net.enc_w[i], net.enc_b[i])));
        return h;
    };
    nn::VarT<T> fa = encode(a);
    nn::VarT<T> fb = encode(b);

    nn::VarT<T> h = cfg.diff_mode == SiameseConfig::DiffMode::kAbsolute
                        ? nn::abs_op(nn::sub(fa, fb))
                        : nn::channel_l2(nn::sub(fa, fb));
    for (int i = 0; i < cfg.levels(); ++i)
        h = nn::relu(nn::conv_transpose2d(h, net.dec_w[i]));
    return nn::log_softmax(nn::conv1x1(h, net.cls_w, net.cls_b));
}

struct TrainOptions {
    int epochs = 10;
    int batch = 8;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    // Empty -> inverse class frequency over the patch set; falls back to
    // (1,1) with a warning when a class is absent.
    std::optional<std::pair<double, double>> class_weights;
    std::uint64_t seed = 0;
    std::string checkpoint_path;  // written after the final epoch when set
};

struct EpochStats {
    double mean_loss = 0.0;
    double pixel_accuracy = 0.0;
};

// Mini-batch SGD over the patch set; per-epoch shuffling derives from the
// seed, so identical seeds give bit-identical parameter trajectories. A
// NumericFault is re-raised with the epoch and batch index attached.
std::vector<EpochStats> train(Network& net, const std::vector<PatchPair>& patches,
                              const TrainOptions& opts, Warnings* warnings = nullptr);

struct ChangeMap {
    int width = 0, height = 0;
    std::vector<std::uint8_t> labels;   // argmax per pixel, {0,1}
    std::vector<float> probability;     // P(change) per pixel
};

// Tiles both scenes with stride patch_size/2, reflecting at the borders,
// averages per-pixel log-probabilities over overlapping tiles, then takes the
// argmax. Scenes must carry the same per-band normalization used in training.
ChangeMap predict_scene(const Network& net, const Raster& a, const Raster& b);

// Binary container: magic "SCDC", format version, parameter count, then per
// parameter name, rank, dims, float32 little-endian data.
void save_checkpoint(const Network& net, const std::string& path);

// Rebuilds a network of exactly `cfg` from the file. Bad magic, unsupported
// version, or truncation raise ParseError; parameter name/shape/count
// mismatches against the config raise IncompatibleCheckpoint.
Network load_checkpoint(const std::string& path, const SiameseConfig& cfg);

}  // namespace urbdiff
