#include "urbdiff/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "urbdiff/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace urbdiff {

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& name) {
    if (name == "train") return Split::kTrain;
    if (name == "test") return Split::kTest;
    throw ManifestError("unknown split '" + name + "' (expected train or test)");
}

std::vector<const ManifestEntry*> Manifest::split_entries(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
        if (e.split == s) out.push_back(&e);
    return out;
}

namespace {

constexpr int kBandsPerEpoch = 13;

std::vector<std::string> read_path_list(const ordered_json& j, const std::string& region,
                                        const char* key, const fs::path& base) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw ManifestError("region '" + region + "': missing band path array '" + key + "'");
    std::vector<std::string> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_string())
            throw ManifestError("region '" + region + "': non-string path in '" + key + "'");
        fs::path p = v.get<std::string>();
        if (p.is_relative()) p = base / p;
        out.push_back(p.lexically_normal().string());
    }
    if (static_cast<int>(out.size()) != kBandsPerEpoch)
        throw ManifestError("region '" + region + "': expected " +
                            std::to_string(kBandsPerEpoch) + " band paths in '" + key +
                            "', got " + std::to_string(out.size()));
    return out;
}

RasterDims checked_dims(const std::string& region, const std::string& path) {
    try {
        return peek_raster_dims(path);
    } catch (const Error& e) {
        throw ManifestError("region '" + region + "': cannot read '" + path + "': " + e.what());
    }
}

void validate_entry(ManifestEntry& e) {
    int w = 0, h = 0;
    auto check = [&](const std::string& path, bool allow_multi) {
        RasterDims d = checked_dims(e.name, path);
        if (!allow_multi && d.bands != 1)
            throw ManifestError("region '" + e.name + "': '" + path + "' has " +
                                std::to_string(d.bands) + " bands, expected 1");
        if (w == 0) {
            w = d.width;
            h = d.height;
        } else if (d.width != w || d.height != h) {
            throw ManifestError("region '" + e.name + "': '" + path + "' is " +
                                std::to_string(d.width) + "x" + std::to_string(d.height) +
                                ", expected " + std::to_string(w) + "x" + std::to_string(h));
        }
    };
    for (const auto& p : e.t1_bands) check(p, false);
    for (const auto& p : e.t2_bands) check(p, false);
    check(e.label_path, false);
    e.width = w;
    e.height = h;
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest '" + path + "'");
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ManifestError("manifest '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("regions") || !j.at("regions").is_array())
        throw ManifestError("manifest '" + path + "' lacks a 'regions' array");

    const fs::path base = fs::path(path).parent_path();
    Manifest m;
    for (const auto& r : j.at("regions")) {
        if (!r.is_object() || !r.contains("name") || !r.at("name").is_string())
            throw ManifestError("manifest '" + path + "': region entry without a name");
        ManifestEntry e;
        e.name = r.at("name").get<std::string>();
        if (!r.contains("split") || !r.at("split").is_string())
            throw ManifestError("region '" + e.name + "': missing split");
        e.split = parse_split(r.at("split").get<std::string>());
        e.t1_bands = read_path_list(r, e.name, "t1", base);
        e.t2_bands = read_path_list(r, e.name, "t2", base);
        if (!r.contains("label") || !r.at("label").is_string())
            throw ManifestError("region '" + e.name + "': missing label path");
        fs::path lp = r.at("label").get<std::string>();
        if (lp.is_relative()) lp = base / lp;
        e.label_path = lp.lexically_normal().string();
        validate_entry(e);
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw ManifestError("manifest '" + path + "' lists no regions");
    return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
    const fs::path base = fs::absolute(fs::path(path)).parent_path();
    auto relativize = [&](const std::string& p) {
        std::error_code ec;
        fs::path rel = fs::relative(p, base, ec);
        if (ec || rel.empty() || rel.string().rfind("..", 0) == 0) return p;
        return rel.string();
    };
    ordered_json j;
    j["format_version"] = 1;
    j["regions"] = ordered_json::array();
    for (const auto& e : m.entries) {
        ordered_json r;
        r["name"] = e.name;
        r["split"] = split_name(e.split);
        r["t1"] = ordered_json::array();
        for (const auto& p : e.t1_bands) r["t1"].push_back(relativize(p));
        r["t2"] = ordered_json::array();
        for (const auto& p : e.t2_bands) r["t2"].push_back(relativize(p));
        r["label"] = relativize(e.label_path);
        j["regions"].push_back(std::move(r));
    }
    std::ofstream out(path);
    if (!out) throw ManifestError("cannot write manifest '" + path + "'");
    out << j.dump(2) << "\n";
}

namespace {

// Orders Sentinel-2 style band files by wavelength: B01..B08, B8A, B09..B12.
// Returns a sortable key, or -1 when no band token is present.
int band_sort_key(const std::string& filename) {
    int best = -1;
    for (std::size_t i = 0; i + 1 < filename.size(); ++i) {
        if (filename[i] != 'B' && filename[i] != 'b') continue;
        std::size_t j = i + 1;
        int num = 0, digits = 0;
        while (j < filename.size() && std::isdigit(static_cast<unsigned char>(filename[j])) &&
               digits < 2) {
            num = num * 10 + (filename[j] - '0');
            ++j;
            ++digits;
        }
        if (digits == 0) continue;
        bool a_suffix = j < filename.size() && (filename[j] == 'A' || filename[j] == 'a');
        best = num * 10 + (a_suffix ? 5 : 0);
    }
    return best;
}

std::vector<std::string> collect_band_files(const fs::path& dir, const std::string& region,
                                            Warnings* warnings) {
    std::vector<std::pair<int, std::string>> keyed;
    for (const auto& ent : fs::directory_iterator(dir)) {
        if (!ent.is_regular_file()) continue;
        const std::string ext = ent.path().extension().string();
        if (ext != ".tif" && ext != ".tiff") continue;
        const int key = band_sort_key(ent.path().filename().string());
        if (key < 0) {
            if (warnings)
                warnings->push_back("region '" + region + "': ignoring file without band token: " +
                                    ent.path().string());
            continue;
        }
        keyed.emplace_back(key, ent.path().string());
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> out;
    for (auto& [k, p] : keyed) out.push_back(std::move(p));
    return out;
}

std::vector<std::string> read_name_list(const fs::path& file) {
    std::vector<std::string> names;
    std::ifstream in(file);
    if (!in) return names;
    std::string tok;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (char& c : content)
        if (c == ',' || c == '\n' || c == '\r' || c == '\t') c = ' ';
    std::istringstream ss(content);
    while (ss >> tok) names.push_back(tok);
    return names;
}

}  // namespace

Manifest scan_dataset_tree(const std::string& root, Warnings* warnings) {
    const fs::path rp(root);
    if (!fs::is_directory(rp)) throw ManifestError("dataset root '" + root + "' is not a directory");

    const auto train_names = read_name_list(rp / "train.txt");
    const auto test_names = read_name_list(rp / "test.txt");
    const bool have_lists = !train_names.empty() || !test_names.empty();
    if (!have_lists && warnings)
        warnings->push_back("no train.txt/test.txt under '" + root +
                            "'; marking every region as train");
    auto contains = [](const std::vector<std::string>& v, const std::string& s) {
        return std::find(v.begin(), v.end(), s) != v.end();
    };

    std::vector<std::string> region_dirs;
    for (const auto& ent : fs::directory_iterator(rp))
        if (ent.is_directory()) region_dirs.push_back(ent.path().filename().string());
    std::sort(region_dirs.begin(), region_dirs.end());

    Manifest m;
    for (const auto& name : region_dirs) {
        const fs::path dir = rp / name;
        const fs::path i1 = dir / "imgs_1", i2 = dir / "imgs_2";
        if (!fs::is_directory(i1) || !fs::is_directory(i2)) continue;

        ManifestEntry e;
        e.name = name;
        e.t1_bands = collect_band_files(i1, name, warnings);
        e.t2_bands = collect_band_files(i2, name, warnings);
        if (static_cast<int>(e.t1_bands.size()) != kBandsPerEpoch ||
            static_cast<int>(e.t2_bands.size()) != kBandsPerEpoch) {
            if (warnings)
                warnings->push_back("region '" + name + "': expected " +
                                    std::to_string(kBandsPerEpoch) + " band files, found " +
                                    std::to_string(e.t1_bands.size()) + "/" +
                                    std::to_string(e.t2_bands.size()) + "; skipping");
            continue;
        }

        const fs::path cm = dir / "cm";
        std::vector<std::string> masks;
        if (fs::is_directory(cm))
            for (const auto& ent : fs::directory_iterator(cm)) {
                const std::string ext = ent.path().extension().string();
                if (ent.is_regular_file() && (ext == ".tif" || ext == ".tiff"))
                    masks.push_back(ent.path().string());
            }
        std::sort(masks.begin(), masks.end());
        if (masks.empty()) {
            if (warnings)
                warnings->push_back("region '" + name + "': no change mask under cm/; skipping");
            continue;
        }
        e.label_path = masks.front();

        if (have_lists) {
            if (contains(train_names, name)) e.split = Split::kTrain;
            else if (contains(test_names, name)) e.split = Split::kTest;
            else {
                if (warnings)
                    warnings->push_back("region '" + name +
                                        "' absent from train.txt/test.txt; marking as train");
                e.split = Split::kTrain;
            }
        } else {
            e.split = Split::kTrain;
        }

        try {
            validate_entry(e);
        } catch (const ManifestError& err) {
            if (warnings) warnings->push_back(std::string(err.what()) + "; skipping region");
            continue;
        }
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty())
        throw ManifestError("no usable regions found under '" + root + "'");
    return m;
}

namespace {

std::vector<std::uint8_t> load_binarized_label(const ManifestEntry& e) {
    Raster r = load_raster_any(e.label_path);
    if (r.bands != 1)
        throw ManifestError("region '" + e.name + "': label '" + e.label_path +
                            "' has " + std::to_string(r.bands) + " bands, expected 1");
    std::vector<std::uint8_t> out(r.pixels());
    for (std::int64_t i = 0; i < r.pixels(); ++i) out[i] = r.samples[i] != 0.0f ? 1 : 0;
    return out;
}

std::vector<float> load_epoch(const std::vector<std::string>& paths, Warnings* warnings) {
    std::vector<Raster> bands;
    bands.reserve(paths.size());
    for (const auto& p : paths) {
        Raster b = load_raster_any(p);
        // Band files occasionally disagree on geotransform metadata even when
        // pixel grids match; sampling only needs the pixel grid.
        b.geo = GeoTransform{};
        bands.push_back(std::move(b));
    }
    Raster merged = merge_bands(bands);
    Raster norm = normalize(merged, NormalizeMode::kZScore, warnings);
    return std::move(norm.samples);
}

}  // namespace

RegionData load_region(const ManifestEntry& e, Warnings* warnings) {
    RegionData d;
    d.name = e.name;
    d.a = load_epoch(e.t1_bands, warnings);
    d.b = load_epoch(e.t2_bands, warnings);
    d.bands = static_cast<int>(e.t1_bands.size());
    const RasterDims dims = peek_raster_dims(e.t1_bands.front());
    d.width = dims.width;
    d.height = dims.height;
    d.label = load_binarized_label(e);
    if (static_cast<std::int64_t>(d.label.size()) !=
        static_cast<std::int64_t>(d.width) * d.height)
        throw ManifestError("region '" + e.name + "': label dimensions mismatch");
    return d;
}

namespace {

struct DrawPlan {
    int region = 0;    // index into the fitting-entry list
    bool balanced = false;
    int transform = 0;
};

struct RegionSampler {
    RegionData data;
    std::vector<std::int64_t> integral;       // (h+1)*(w+1) label prefix sums
    std::vector<std::int32_t> change_pixels;  // linear indices of label==1

    void build() {
        const int w = data.width, h = data.height;
        integral.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0);
        for (int y = 0; y < h; ++y) {
            std::int64_t row = 0;
            for (int x = 0; x < w; ++x) {
                const std::int64_t i = static_cast<std::int64_t>(y) * w + x;
                if (data.label[i]) {
                    row += 1;
                    change_pixels.push_back(static_cast<std::int32_t>(i));
                }
                integral[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                    integral[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
            }
        }
    }

    std::int64_t window_sum(int ox, int oy, int p) const {
        const int w = data.width;
        auto at = [&](int y, int x) {
            return integral[static_cast<std::size_t>(y) * (w + 1) + x];
        };
        return at(oy + p, ox + p) - at(oy, ox + p) - at(oy + p, ox) + at(oy, ox);
    }
};

PatchPair extract_patch(const RegionData& d, int ox, int oy, int p) {
    PatchPair out;
    out.bands = d.bands;
    out.size = p;
    out.region = d.name;
    out.off_x = ox;
    out.off_y = oy;
    out.a.resize(static_cast<std::size_t>(d.bands) * p * p);
    out.b.resize(out.a.size());
    out.label.resize(static_cast<std::size_t>(p) * p);
    const std::int64_t plane = static_cast<std::int64_t>(d.width) * d.height;
    for (int band = 0; band < d.bands; ++band)
        for (int y = 0; y < p; ++y) {
            const std::int64_t src = band * plane +
                                     static_cast<std::int64_t>(oy + y) * d.width + ox;
            const std::int64_t dst = (static_cast<std::int64_t>(band) * p + y) * p;
            std::memcpy(out.a.data() + dst, d.a.data() + src, sizeof(float) * p);
            std::memcpy(out.b.data() + dst, d.b.data() + src, sizeof(float) * p);
        }
    for (int y = 0; y < p; ++y)
        std::memcpy(out.label.data() + static_cast<std::size_t>(y) * p,
                    d.label.data() + static_cast<std::int64_t>(oy + y) * d.width + ox,
                    static_cast<std::size_t>(p));
    return out;
}

}  // namespace

std::vector<PatchPair> sample_patches(const Manifest& m, Split split, const SampleOptions& opts,
                                      Warnings* warnings) {
    if (opts.patch < 2 || opts.patch % 2 != 0)
        throw ConfigError("sample_patches: patch size must be even and >= 2");
    if (opts.count < 1) throw ConfigError("sample_patches: count must be >= 1");
    if (opts.balance_fraction < 0.0 || opts.balance_fraction > 1.0)
        throw ConfigError("sample_patches: balance_fraction must lie in [0,1]");

    const auto entries = m.split_entries(split);
    if (entries.empty())
        throw SampleError(std::string("split '") + split_name(split) + "' has no regions");
    std::vector<const ManifestEntry*> fit;
    for (const auto* e : entries)
        if (e->width >= opts.patch && e->height >= opts.patch) fit.push_back(e);
        else if (warnings)
            warnings->push_back("region '" + e->name + "' (" + std::to_string(e->width) + "x" +
                                std::to_string(e->height) + ") cannot fit patch " +
                                std::to_string(opts.patch) + "; excluded");
    if (fit.empty())
        throw SampleError("no region of split '" + std::string(split_name(split)) +
                          "' can fit a " + std::to_string(opts.patch) + "-pixel patch");

    const int n_balanced =
        static_cast<int>(std::llround(opts.count * opts.balance_fraction));

    // Cheap pre-pass over labels only: which regions hold change pixels.
    std::vector<std::int64_t> change_totals(fit.size(), 0);
    std::vector<int> change_regions;
    if (n_balanced > 0) {
        for (std::size_t i = 0; i < fit.size(); ++i) {
            const auto labels = load_binarized_label(*fit[i]);
            for (std::uint8_t v : labels) change_totals[i] += v;
            if (change_totals[i] > 0) change_regions.push_back(static_cast<int>(i));
        }
        if (change_regions.empty())
            throw BalanceError("balance_fraction > 0 but split '" +
                               std::string(split_name(split)) + "' contains no change pixels");
    }

    Rng rng(opts.seed);
    std::vector<DrawPlan> plan(opts.count);
    for (int i = 0; i < opts.count; ++i) {
        DrawPlan& d = plan[i];
        d.balanced = i < n_balanced;
        d.region = d.balanced
                       ? change_regions[rng.next_index(change_regions.size())]
                       : static_cast<int>(rng.next_index(fit.size()));
        d.transform = opts.augment ? static_cast<int>(rng.next_index(8)) : 0;
    }

    std::vector<PatchPair> out(opts.count);
    for (std::size_t r = 0; r < fit.size(); ++r) {
        std::vector<int> mine;
        for (int i = 0; i < opts.count; ++i)
            if (plan[i].region == static_cast<int>(r)) mine.push_back(i);
        if (mine.empty()) continue;

        RegionSampler sampler;
        sampler.data = load_region(*fit[r], warnings);
        sampler.build();
        const int W = sampler.data.width, H = sampler.data.height, p = opts.patch;

        for (int i : mine) {
            Rng draw_rng(Rng::derive(opts.seed, static_cast<std::uint64_t>(i) + 1));
            int ox = 0, oy = 0;
            if (!plan[i].balanced) {
                ox = static_cast<int>(draw_rng.next_index(W - p + 1));
                oy = static_cast<int>(draw_rng.next_index(H - p + 1));
            } else {
                bool found = false;
                for (int attempt = 0; attempt < 64 && !found; ++attempt) {
                    ox = static_cast<int>(draw_rng.next_index(W - p + 1));
                    oy = static_cast<int>(draw_rng.next_index(H - p + 1));
                    found = sampler.window_sum(ox, oy, p) > 0;
                }
                if (!found) {
                    // Direct the draw at a known change pixel.
                    const std::int32_t pix = sampler.change_pixels[draw_rng.next_index(
                        sampler.change_pixels.size())];
                    const int cy = pix / W, cx = pix % W;
                    ox = std::clamp(cx - p / 2, 0, W - p);
                    oy = std::clamp(cy - p / 2, 0, H - p);
                }
            }
            PatchPair patch = extract_patch(sampler.data, ox, oy, p);
            out[i] = plan[i].transform ? augment(patch, plan[i].transform) : std::move(patch);
        }
    }
    return out;
}

PatchPair augment(const PatchPair& p, int transform) {
    if (transform < 0 || transform > 7)
        throw ConfigError("augment: transform must lie in [0,7]");
    if (transform == 0) return p;
    const int n = p.size;
    const int rot = transform % 4;
    const bool flip = transform >= 4;

    // src(y, x): where output pixel (y, x) reads from in the input.
    std::vector<std::int32_t> src(static_cast<std::size_t>(n) * n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            int sy = y, sx = x;
            for (int k = 0; k < rot; ++k) {
                const int t = sy;
                sy = sx;
                sx = n - 1 - t;
            }
            if (flip) sx = n - 1 - sx;
            src[static_cast<std::size_t>(y) * n + x] = sy * n + sx;
        }

    PatchPair out = p;
    for (int band = 0; band < p.bands; ++band) {
        const std::int64_t off = static_cast<std::int64_t>(band) * n * n;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) * n; ++i) {
            out.a[off + i] = p.a[off + src[i]];
            out.b[off + i] = p.b[off + src[i]];
        }
    }
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) * n; ++i)
        out.label[i] = p.label[src[i]];
    return out;
}

std::pair<double, double> class_weights(const Manifest& m, Split split) {
    const auto entries = m.split_entries(split);
    if (entries.empty())
        throw DegenerateSplit(std::string("split '") + split_name(split) + "' is empty");
    std::int64_t c0 = 0, c1 = 0;
    for (const auto* e : entries) {
        const auto labels = load_binarized_label(*e);
        for (std::uint8_t v : labels) (v ? c1 : c0) += 1;
    }
    if (c0 == 0 || c1 == 0)
        throw DegenerateSplit("split '" + std::string(split_name(split)) +
                              "' lacks pixels of class " + (c0 == 0 ? "0" : "1"));
    const double total = static_cast<double>(c0 + c1);
    return {total / (2.0 * c0), total / (2.0 * c1)};
}

}  // namespace urbdiff
