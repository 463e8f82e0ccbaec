#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "urbdiff/rng.hpp"

namespace fs = std::filesystem;

namespace testutil {

TempDir::TempDir(const std::string& name) : path_(fs::current_path() / "test_tmp" / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("test helper cannot write " + path);
    f << content;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("test helper cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// TIFF writer

namespace {

struct IfdEntry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::uint32_t value_or_offset;
};

void put_u16(std::vector<std::uint8_t>& buf, std::size_t at, std::uint16_t v) {
    std::memcpy(buf.data() + at, &v, 2);
}
void put_u32(std::vector<std::uint8_t>& buf, std::size_t at, std::uint32_t v) {
    std::memcpy(buf.data() + at, &v, 4);
}
void append_bytes(std::vector<std::uint8_t>& buf, const void* src, std::size_t n) {
    const std::size_t at = buf.size();
    buf.resize(at + n);
    std::memcpy(buf.data() + at, src, n);
}

}  // namespace

void write_tiff(const std::string& path, const TiffSpec& spec) {
    const std::size_t n_px = static_cast<std::size_t>(spec.width) * spec.height;
    if (spec.samples.size() != n_px)
        throw std::runtime_error("TiffSpec: sample count does not match dimensions");

    std::size_t bps;
    std::uint16_t bits, format;
    switch (spec.kind) {
        case TiffSpec::Kind::kU8: bps = 1, bits = 8, format = 1; break;
        case TiffSpec::Kind::kU16: bps = 2, bits = 16, format = 1; break;
        case TiffSpec::Kind::kF32: bps = 4, bits = 32, format = 3; break;
        default: throw std::runtime_error("bad kind");
    }

    std::vector<std::uint8_t> buf(8, 0);
    buf[0] = 'I';
    buf[1] = 'I';
    put_u16(buf, 2, 42);

    // Pixel data first, in strips.
    const int rps = spec.rows_per_strip > 0 ? spec.rows_per_strip : spec.height;
    std::vector<std::uint32_t> strip_offsets, strip_counts;
    for (int row = 0; row < spec.height; row += rps) {
        const int rows = std::min(rps, spec.height - row);
        strip_offsets.push_back(static_cast<std::uint32_t>(buf.size()));
        strip_counts.push_back(static_cast<std::uint32_t>(rows * spec.width * bps));
        for (int i = row * spec.width; i < (row + rows) * spec.width; ++i) {
            const double v = spec.samples[i];
            switch (spec.kind) {
                case TiffSpec::Kind::kU8: {
                    const std::uint8_t b = static_cast<std::uint8_t>(v);
                    append_bytes(buf, &b, 1);
                    break;
                }
                case TiffSpec::Kind::kU16: {
                    const std::uint16_t s = static_cast<std::uint16_t>(v);
                    append_bytes(buf, &s, 2);
                    break;
                }
                case TiffSpec::Kind::kF32: {
                    const float f = static_cast<float>(v);
                    append_bytes(buf, &f, 4);
                    break;
                }
            }
        }
    }
    if (spec.strip_past_eof)
        strip_offsets[0] = static_cast<std::uint32_t>(buf.size() + (1u << 20));
    if (spec.drop_last_strip && strip_offsets.size() > 1) {
        strip_offsets.pop_back();
        strip_counts.pop_back();
    }

    std::vector<IfdEntry> entries;
    auto add_short = [&](std::uint16_t tag, std::uint16_t v) {
        entries.push_back({tag, 3, 1, v});
    };
    auto add_long = [&](std::uint16_t tag, std::uint32_t v) {
        entries.push_back({tag, 4, 1, v});
    };
    auto add_longs = [&](std::uint16_t tag, const std::vector<std::uint32_t>& vals) {
        if (vals.size() == 1) {
            add_long(tag, vals[0]);
            return;
        }
        const std::uint32_t off = static_cast<std::uint32_t>(buf.size());
        for (std::uint32_t v : vals) append_bytes(buf, &v, 4);
        entries.push_back({tag, 4, static_cast<std::uint32_t>(vals.size()), off});
    };
    auto add_doubles = [&](std::uint16_t tag, const std::vector<double>& vals) {
        const std::uint32_t off = static_cast<std::uint32_t>(buf.size());
        for (double v : vals) append_bytes(buf, &v, 8);
        entries.push_back({tag, 12, static_cast<std::uint32_t>(vals.size()), off});
    };

    add_long(256, static_cast<std::uint32_t>(spec.width));
    add_long(257, static_cast<std::uint32_t>(spec.height));
    add_short(258, bits);
    add_short(259, spec.compression);
    add_short(262, 1);
    add_longs(273, strip_offsets);
    add_short(277, 1);
    add_long(278, static_cast<std::uint32_t>(rps));
    add_longs(279, strip_counts);
    add_short(339, format);
    if (spec.tiled) {
        add_long(322, 16);
        add_long(323, 16);
    }
    if (spec.with_geo) {
        // Tiepoint pins raster (0,0,0) to the given map position.
        if (!spec.omit_pixel_scale) add_doubles(33550, {spec.scale_x, spec.scale_y, 0.0});
        add_doubles(33922, {0.0, 0.0, 0.0, spec.map_x, spec.map_y, 0.0});
    }

    std::sort(entries.begin(), entries.end(),
              [](const IfdEntry& a, const IfdEntry& b) { return a.tag < b.tag; });

    const std::uint32_t ifd_offset = static_cast<std::uint32_t>(buf.size());
    {
        const std::uint16_t n = static_cast<std::uint16_t>(entries.size());
        append_bytes(buf, &n, 2);
        for (const IfdEntry& e : entries) {
            append_bytes(buf, &e.tag, 2);
            append_bytes(buf, &e.type, 2);
            append_bytes(buf, &e.count, 4);
            append_bytes(buf, &e.value_or_offset, 4);
        }
        const std::uint32_t next = 0;
        append_bytes(buf, &next, 4);
    }
    put_u32(buf, 4, ifd_offset);

    if (spec.corrupt_magic) buf[0] = 'X';
    if (spec.big_endian_magic) {
        buf[0] = 'M';
        buf[1] = 'M';
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("test helper cannot write " + path);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

// ---------------------------------------------------------------------------
// Synthetic imagery

std::vector<float> make_texture(int width, int height, std::uint64_t seed, int smooth) {
    urbdiff::Rng rng(seed);
    std::vector<float> img(static_cast<std::size_t>(width) * height);
    for (float& v : img) v = static_cast<float>(rng.next_double());
    std::vector<float> tmp(img.size());
    for (int pass = 0; pass < smooth; ++pass) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double s = 0.0;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
                        s += img[static_cast<std::size_t>(yy) * width + xx];
                        ++n;
                    }
                tmp[static_cast<std::size_t>(y) * width + x] = static_cast<float>(s / n);
            }
        img.swap(tmp);
    }
    return img;
}

std::vector<float> shift_image(const std::vector<float>& src, int width, int height, double dx,
                               double dy) {
    std::vector<float> out(src.size());
    auto clamp = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double sx = x + dx, sy = y + dy;
            const int x0 = clamp(static_cast<int>(std::floor(sx)), 0, width - 1);
            const int y0 = clamp(static_cast<int>(std::floor(sy)), 0, height - 1);
            const int x1 = clamp(x0 + 1, 0, width - 1);
            const int y1 = clamp(y0 + 1, 0, height - 1);
            const double fx = sx - std::floor(sx), fy = sy - std::floor(sy);
            const double v00 = src[static_cast<std::size_t>(y0) * width + x0];
            const double v01 = src[static_cast<std::size_t>(y0) * width + x1];
            const double v10 = src[static_cast<std::size_t>(y1) * width + x0];
            const double v11 = src[static_cast<std::size_t>(y1) * width + x1];
            out[static_cast<std::size_t>(y) * width + x] = static_cast<float>(
                (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11));
        }
    return out;
}

urbdiff::Raster make_texture_raster(int width, int height, int bands, std::uint64_t seed) {
    urbdiff::Raster r = urbdiff::Raster::create(width, height, bands);
    for (int b = 0; b < bands; ++b) {
        const auto img = make_texture(width, height, seed + static_cast<std::uint64_t>(b) * 131);
        std::copy(img.begin(), img.end(), r.band_data(b));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Separable change task

std::vector<urbdiff::PatchPair> make_separable_patches(int count, int bands, int patch,
                                                       std::uint64_t seed, double delta) {
    urbdiff::Rng rng(seed);
    std::vector<urbdiff::PatchPair> out;
    out.reserve(static_cast<std::size_t>(count));
    const int hw = patch * patch;
    for (int i = 0; i < count; ++i) {
        urbdiff::PatchPair p;
        p.bands = bands;
        p.size = patch;
        p.region = "synthetic";
        p.off_x = 0;
        p.off_y = 0;
        p.a.resize(static_cast<std::size_t>(bands) * hw);
        p.b.resize(p.a.size());
        p.label.assign(static_cast<std::size_t>(hw), 0);
        for (auto& v : p.a) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        for (std::size_t k = 0; k < p.b.size(); ++k)
            p.b[k] = p.a[k] + static_cast<float>(rng.uniform(-0.05, 0.05));
        const int side_lo = std::max(1, patch / 4);
        const int side_hi = std::max(side_lo, patch / 2);
        const int rw = side_lo + static_cast<int>(rng.next_double() * (side_hi - side_lo + 1));
        const int rh = side_lo + static_cast<int>(rng.next_double() * (side_hi - side_lo + 1));
        const int rx = static_cast<int>(rng.next_double() * (patch - rw));
        const int ry = static_cast<int>(rng.next_double() * (patch - rh));
        for (int y = ry; y < ry + rh; ++y)
            for (int x = rx; x < rx + rw; ++x) {
                p.label[static_cast<std::size_t>(y) * patch + x] = 1;
                for (int b = 0; b < bands; ++b)
                    p.b[static_cast<std::size_t>(b) * hw + y * patch + x] +=
                        static_cast<float>(delta);
            }
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scoring oracle

urbdiff::Confusion brute_confusion(const std::vector<std::uint8_t>& pred,
                                   const std::vector<std::uint8_t>& truth) {
    urbdiff::Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 1 && pred[i] == 1) c.tp += 1;
        if (truth[i] == 0 && pred[i] == 1) c.fp += 1;
        if (truth[i] == 0 && pred[i] == 0) c.tn += 1;
        if (truth[i] == 1 && pred[i] == 0) c.fn += 1;
    }
    return c;
}

BruteScores brute_scores(const urbdiff::Confusion& c) {
    BruteScores s{};
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    const double total = tp + fp + tn + fn;
    s.oa = (tp + tn) / total;
    s.precision_ok = tp + fp > 0;
    if (s.precision_ok) s.precision = tp / (tp + fp);
    s.recall_ok = tp + fn > 0;
    if (s.recall_ok) s.recall = tp / (tp + fn);
    s.f1_ok = s.precision_ok && s.recall_ok && s.precision + s.recall > 0;
    if (s.f1_ok) s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
    const double po = (tp + tn) / total;
    const double pe = ((tp + fp) * (tp + fn) + (tn + fn) * (tn + fp)) / (total * total);
    s.kappa_ok = pe != 1.0;
    if (s.kappa_ok) s.kappa = (po - pe) / (1.0 - pe);
    return s;
}

// ---------------------------------------------------------------------------
// Dataset tree

namespace {

const char* kBandTokens[13] = {"B01", "B02", "B03", "B04", "B05", "B06", "B07",
                               "B08", "B8A", "B09", "B10", "B11", "B12"};

void write_epoch(const fs::path& dir, int width, int height, std::uint64_t seed) {
    fs::create_directories(dir);
    for (int b = 0; b < 13; ++b) {
        TiffSpec spec;
        spec.width = width;
        spec.height = height;
        spec.kind = TiffSpec::Kind::kU16;
        spec.samples.resize(static_cast<std::size_t>(width) * height);
        urbdiff::Rng rng(seed + static_cast<std::uint64_t>(b));
        for (double& v : spec.samples) v = std::floor(rng.next_double() * 4000.0);
        write_tiff((dir / (std::string(kBandTokens[b]) + ".tif")).string(), spec);
    }
}

}  // namespace

void make_dataset_tree(const fs::path& root, const TreeSpec& spec) {
    fs::create_directories(root);
    std::string train_list, test_list;
    std::uint64_t region_seed = spec.seed;
    auto emit = [&](const std::string& name) {
        const fs::path dir = root / name;
        write_epoch(dir / "imgs_1", spec.width, spec.height, region_seed);
        write_epoch(dir / "imgs_2", spec.width, spec.height, region_seed + 100);
        fs::create_directories(dir / "cm");
        TiffSpec label;
        label.width = spec.width;
        label.height = spec.height;
        label.kind = TiffSpec::Kind::kU8;
        const std::size_t px = static_cast<std::size_t>(spec.width) * spec.height;
        label.samples.assign(px, 0.0);
        urbdiff::Rng rng(region_seed + 7);
        // Exactly round(change_fraction * pixels) change pixels at seeded
        // positions. The loader binarizes any nonzero to 1; write 2s to
        // exercise that.
        const std::size_t k = static_cast<std::size_t>(
            std::llround(spec.change_fraction * static_cast<double>(px)));
        std::vector<std::size_t> order(px);
        for (std::size_t i = 0; i < px; ++i) order[i] = i;
        for (std::size_t i = 0; i < k && i + 1 < px; ++i)
            std::swap(order[i], order[i + rng.next_index(px - i)]);
        for (std::size_t i = 0; i < k; ++i) label.samples[order[i]] = 2.0;
        write_tiff((dir / "cm" / (name + "-cm.tif")).string(), label);
        region_seed += 1000;
    };
    for (const auto& name : spec.train_regions) {
        emit(name);
        train_list += name + "\n";
    }
    for (const auto& name : spec.test_regions) {
        emit(name);
        test_list += name + "\n";
    }
    write_text((root / "train.txt").string(), train_list);
    write_text((root / "test.txt").string(), test_list);
}

}  // namespace testutil
