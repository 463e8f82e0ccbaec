#include "urbdiff/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "urbdiff/threading.hpp"
#include "urbdiff/version.hpp"

namespace urbdiff {

std::vector<int> SiameseConfig::decoder_channels() const {
    const int L = levels();
    std::vector<int> out(L);
    for (int i = 0; i + 1 < L; ++i) out[i] = encoder_channels[L - 2 - i];
    out[L - 1] = encoder_channels.front();
    return out;
}

void SiameseConfig::validate() const {
    if (in_bands < 1) throw ConfigError("siamese: in_bands must be >= 1");
    if (encoder_channels.empty()) throw ConfigError("siamese: encoder_channels must be nonempty");
    for (std::size_t i = 0; i < encoder_channels.size(); ++i) {
        if (encoder_channels[i] < 1)
            throw ConfigError("siamese: encoder channel counts must be >= 1");
        if (i > 0 && encoder_channels[i] <= encoder_channels[i - 1])
            throw ConfigError("siamese: encoder_channels must be strictly increasing");
    }
    if (patch_size < 2 || (patch_size & (patch_size - 1)) != 0)
        throw ConfigError("siamese: patch_size must be a power of two");
    if (patch_size % (1 << levels()) != 0)
        throw ConfigError("siamese: patch_size must be divisible by 2^levels (" +
                          std::to_string(1 << levels()) + ")");
}

namespace {

nn::Var init_param(Rng& rng, std::vector<int> shape, int fan_in, const std::string& name,
                   bool zero) {
    nn::Tensor t(std::move(shape));
    if (!zero) {
        const double bound = std::sqrt(6.0 / fan_in);
        for (float& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    return nn::make_var(std::move(t), /*requires_grad=*/true, name);
}

std::string level_name(const char* stem, int i, const char* leaf) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%d.%s", stem, i, leaf);
    return buf;
}

}  // namespace

Network build_network(const SiameseConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Network net;
    net.config = cfg;
    Rng rng(seed);

    int c_in = cfg.in_bands;
    for (int i = 0; i < cfg.levels(); ++i) {
        const int c_out = cfg.encoder_channels[i];
        net.enc_w.push_back(init_param(rng, {c_out, c_in, 3, 3}, c_in * 9,
                                       level_name("enc", i, "weight"), false));
        net.enc_b.push_back(init_param(rng, {c_out}, c_in * 9, level_name("enc", i, "bias"), true));
        c_in = c_out;
    }
    c_in = cfg.bottleneck_channels();
    const auto dec = cfg.decoder_channels();
    for (int i = 0; i < cfg.levels(); ++i) {
        net.dec_w.push_back(init_param(rng, {c_in, dec[i], 2, 2}, c_in * 4,
                                       level_name("dec", i, "weight"), false));
        c_in = dec[i];
    }
    net.cls_w = init_param(rng, {2, c_in}, c_in, "cls.weight", false);
    net.cls_b = init_param(rng, {2}, c_in, "cls.bias", true);
    return net;
}

// --- training --------------------------------------------------------------

std::vector<EpochStats> train(Network& net, const std::vector<PatchPair>& patches,
                              const TrainOptions& opts, Warnings* warnings) {
    net.config.validate();
    if (patches.empty()) throw ConfigError("train: empty patch set");
    if (opts.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (opts.batch < 1) throw ConfigError("train: batch must be >= 1");
    const int p = net.config.patch_size;
    for (const auto& pp : patches)
        if (pp.size != p || pp.bands != net.config.in_bands)
            throw ShapeError("train: patch '" + pp.region + "' is " + std::to_string(pp.bands) +
                             "x" + std::to_string(pp.size) + "^2, network expects " +
                             std::to_string(net.config.in_bands) + "x" + std::to_string(p) + "^2");

    double w0 = 1.0, w1 = 1.0;
    if (opts.class_weights) {
        w0 = opts.class_weights->first;
        w1 = opts.class_weights->second;
        if (w0 < 0.0 || w1 < 0.0 || w0 + w1 <= 0.0)
            throw ConfigError("train: invalid class weights");
    } else {
        std::int64_t c0 = 0, c1 = 0;
        for (const auto& pp : patches)
            for (std::uint8_t v : pp.label) (v ? c1 : c0) += 1;
        if (c0 == 0 || c1 == 0) {
            if (warnings)
                warnings->push_back(std::string("train: class ") + (c0 == 0 ? "0" : "1") +
                                    " absent from patch labels; using uniform class weights");
        } else {
            const double total = static_cast<double>(c0 + c1);
            w0 = total / (2.0 * c0);
            w1 = total / (2.0 * c1);
        }
    }

    nn::Sgd opt(net.parameters(), opts.lr, opts.momentum, opts.weight_decay);
    const std::int64_t px = static_cast<std::int64_t>(p) * p;

    std::vector<EpochStats> trace;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<int> order(patches.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng shuffle_rng(Rng::derive(opts.seed, static_cast<std::uint64_t>(epoch) + 1));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_index(i)]);

        double loss_sum = 0.0;
        std::int64_t loss_patches = 0, correct = 0, seen = 0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch, ++batch_index) {
            const int n = static_cast<int>(
                std::min<std::size_t>(opts.batch, order.size() - start));
            nn::Tensor ta({n, net.config.in_bands, p, p});
            nn::Tensor tb(ta.shape);
            nn::LabelBatch labels;
            labels.n = n;
            labels.h = p;
            labels.w = p;
            labels.data.resize(static_cast<std::size_t>(n) * px);
            const std::size_t stride = ta.data.size() / n;
            for (int k = 0; k < n; ++k) {
                const PatchPair& pp = patches[order[start + k]];
                std::memcpy(ta.data.data() + k * stride, pp.a.data(), stride * sizeof(float));
                std::memcpy(tb.data.data() + k * stride, pp.b.data(), stride * sizeof(float));
                std::memcpy(labels.data.data() + k * px, pp.label.data(),
                            static_cast<std::size_t>(px));
            }

            try {
                auto va = nn::make_var(std::move(ta), false, "input.a");
                auto vb = nn::make_var(std::move(tb), false, "input.b");
                auto logp = siamese_forward(net, va, vb);
                auto loss = nn::nll_weighted(logp, labels, w0, w1);
                nn::backward(loss);
                opt.step();
                opt.zero_grad();

                loss_sum += loss->scalar * n;
                loss_patches += n;
                const auto& lv = logp->value;
                for (int k = 0; k < n; ++k)
                    for (std::int64_t i = 0; i < px; ++i) {
                        const float l0 = lv.data[(static_cast<std::int64_t>(k) * 2 + 0) * px + i];
                        const float l1 = lv.data[(static_cast<std::int64_t>(k) * 2 + 1) * px + i];
                        const std::uint8_t pred = l1 > l0 ? 1 : 0;
                        correct += pred == labels.data[k * px + i];
                    }
                seen += static_cast<std::int64_t>(n) * px;
            } catch (const NumericFault& e) {
                throw NumericFault("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index) + ": " + e.what());
            }
        }
        EpochStats st;
        st.mean_loss = loss_sum / static_cast<double>(loss_patches);
        st.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
        trace.push_back(st);
    }

    if (!opts.checkpoint_path.empty()) save_checkpoint(net, opts.checkpoint_path);
    return trace;
}

// --- whole-scene inference -------------------------------------------------

namespace {

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

std::vector<int> tile_origins(int extent, int tile, int stride) {
    std::vector<int> out;
    if (extent <= tile) {
        out.push_back(0);
        return out;
    }
    for (int x = 0;; x += stride) {
        out.push_back(x);
        if (x + tile >= extent) break;
    }
    return out;
}

}  // namespace

ChangeMap predict_scene(const Network& net, const Raster& a, const Raster& b) {
    net.config.validate();
    if (a.bands != net.config.in_bands || b.bands != net.config.in_bands)
        throw ShapeError("predict_scene: scenes must have " +
                         std::to_string(net.config.in_bands) + " bands, got " +
                         std::to_string(a.bands) + "/" + std::to_string(b.bands));
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("predict_scene: scene dimensions differ");
    if (a.width < 1 || a.height < 1) throw ShapeError("predict_scene: empty scene");

    const int W = a.width, H = a.height;
    const int p = net.config.patch_size, stride = p / 2;
    const auto xs = tile_origins(W, p, stride);
    const auto ys = tile_origins(H, p, stride);

    struct Job {
        int ox, oy;
    };
    std::vector<Job> jobs;
    jobs.reserve(xs.size() * ys.size());
    for (int oy : ys)
        for (int ox : xs) jobs.push_back({ox, oy});

    const std::int64_t tile_px = static_cast<std::int64_t>(p) * p;
    std::vector<float> tile_logp(jobs.size() * 2 * tile_px);

    parallel_for(jobs.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const Job& job = jobs[j];
            nn::Tensor ta({1, net.config.in_bands, p, p});
            nn::Tensor tb(ta.shape);
            for (int band = 0; band < net.config.in_bands; ++band)
                for (int y = 0; y < p; ++y) {
                    const int sy = reflect_index(job.oy + y, H);
                    float* ra = ta.data.data() + (static_cast<std::int64_t>(band) * p + y) * p;
                    float* rb = tb.data.data() + (static_cast<std::int64_t>(band) * p + y) * p;
                    for (int x = 0; x < p; ++x) {
                        const int sx = reflect_index(job.ox + x, W);
                        ra[x] = a.at(band, sy, sx);
                        rb[x] = b.at(band, sy, sx);
                    }
                }
            auto logp = siamese_forward(net, nn::make_var(std::move(ta), false, "a"),
                                        nn::make_var(std::move(tb), false, "b"));
            std::memcpy(tile_logp.data() + j * 2 * tile_px, logp->value.data.data(),
                        sizeof(float) * 2 * tile_px);
        }
    });

    // Deterministic accumulation in job order.
    std::vector<double> sum0(static_cast<std::size_t>(W) * H, 0.0), sum1 = sum0;
    std::vector<std::int32_t> count(static_cast<std::size_t>(W) * H, 0);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const Job& job = jobs[j];
        const float* l0 = tile_logp.data() + j * 2 * tile_px;
        const float* l1 = l0 + tile_px;
        for (int y = 0; y < p; ++y) {
            const int ty = job.oy + y;
            if (ty >= H) continue;
            for (int x = 0; x < p; ++x) {
                const int tx = job.ox + x;
                if (tx >= W) continue;
                const std::size_t i = static_cast<std::size_t>(ty) * W + tx;
                sum0[i] += l0[static_cast<std::int64_t>(y) * p + x];
                sum1[i] += l1[static_cast<std::int64_t>(y) * p + x];
                count[i] += 1;
            }
        }
    }

    ChangeMap map;
    map.width = W;
    map.height = H;
    map.labels.resize(sum0.size());
    map.probability.resize(sum0.size());
    for (std::size_t i = 0; i < sum0.size(); ++i) {
        const double l0 = sum0[i] / count[i];
        const double l1 = sum1[i] / count[i];
        map.labels[i] = l1 > l0 ? 1 : 0;
        map.probability[i] = static_cast<float>(1.0 / (1.0 + std::exp(l0 - l1)));
    }
    return map;
}

// --- checkpoints -----------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'S', 'C', 'D', 'C'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw ParseError("truncated checkpoint '" + path + "'");
    return v;
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open checkpoint for writing: '" + path + "'");
    out.write(kCheckpointMagic, 4);
    write_u32(out, kCheckpointFormatVersion);
    const auto params = net.parameters();
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& param : params) {
        write_u32(out, static_cast<std::uint32_t>(param->name.size()));
        out.write(param->name.data(), static_cast<std::streamsize>(param->name.size()));
        write_u32(out, static_cast<std::uint32_t>(param->value.rank()));
        for (int d : param->value.shape) write_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(param->value.data.data()),
                  static_cast<std::streamsize>(param->value.data.size() * sizeof(float)));
    }
    if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

Network load_checkpoint(const std::string& path, const SiameseConfig& cfg) {
    cfg.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw ParseError("'" + path + "' is not a checkpoint file (bad magic)");
    const std::uint32_t version = read_u32(in, path);
    if (version != kCheckpointFormatVersion)
        throw ParseError("checkpoint '" + path + "' has unsupported format version " +
                         std::to_string(version));

    Network net = build_network(cfg, 0);
    const auto params = net.parameters();
    const std::uint32_t count = read_u32(in, path);
    if (count != params.size())
        throw IncompatibleCheckpoint("checkpoint '" + path + "' holds " + std::to_string(count) +
                                     " parameters, config expects " +
                                     std::to_string(params.size()));
    for (const auto& param : params) {
        const std::uint32_t name_len = read_u32(in, path);
        if (name_len > 4096) throw ParseError("corrupt checkpoint '" + path + "'");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw ParseError("truncated checkpoint '" + path + "'");
        if (name != param->name)
            throw IncompatibleCheckpoint("checkpoint parameter '" + name +
                                         "' does not match expected '" + param->name + "'");
        const std::uint32_t rank = read_u32(in, path);
        if (rank != static_cast<std::uint32_t>(param->value.rank()))
            throw IncompatibleCheckpoint("parameter '" + name + "' rank mismatch");
        for (int d = 0; d < static_cast<int>(rank); ++d)
            if (read_u32(in, path) != static_cast<std::uint32_t>(param->value.shape[d]))
                throw IncompatibleCheckpoint("parameter '" + name + "' shape mismatch");
        in.read(reinterpret_cast<char*>(param->value.data.data()),
                static_cast<std::streamsize>(param->value.data.size() * sizeof(float)));
        if (!in) throw ParseError("truncated checkpoint '" + path + "'");
    }
    return net;
}

}  // namespace urbdiff
