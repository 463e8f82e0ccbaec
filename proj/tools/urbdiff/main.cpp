// urbdiff: urban change detection pipeline over Sentinel-2 style scene pairs.
// One binary, subcommand per pipeline stage. Machine-readable JSON goes to
// stdout, human logs to stderr. Exit codes: 0 success, 1 runtime error, 2
// usage/configuration error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "urbdiff/acquire.hpp"
#include "urbdiff/coreg.hpp"
#include "urbdiff/dataset.hpp"
#include "urbdiff/errors.hpp"
#include "urbdiff/forest.hpp"
#include "urbdiff/geojson.hpp"
#include "urbdiff/landcover.hpp"
#include "urbdiff/metrics.hpp"
#include "urbdiff/raster.hpp"
#include "urbdiff/siamese.hpp"
#include "urbdiff/slic.hpp"
#include "urbdiff/threading.hpp"
#include "urbdiff/version.hpp"

using nlohmann::ordered_json;
using namespace urbdiff;

namespace {

// ---------------------------------------------------------------------------
// Resolved run configuration. Defaults here, overridden first by --config
// JSON, then by explicit command-line flags.

struct TrainSection {
    int epochs = 10;
    int batch = 8;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int patch_count = 128;
    int patch = 32;
    double balance_fraction = 0.5;
    bool augment = false;
};

struct AcquireSection {
    std::string platform = "Sentinel-2";
    std::string product_type = "S2MSI1C";
    double cloud_min = 0.0;
    double cloud_max = 20.0;
};

struct AppConfig {
    std::uint64_t seed = 0;
    int threads = 0;  // 0: leave the library default (env var or hardware)
    CoregConfig coreg;
    SlicConfig slic;
    ForestConfig forest;
    double forest_split = 0.7;
    SiameseConfig siamese;
    TrainSection train;
    AcquireSection acquire;
};

void require_keys(const ordered_json& obj, const char* section,
                  std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok)
            throw ConfigError(std::string("config: unknown key '") +
                              (section[0] ? std::string(section) + "." : std::string()) + key +
                              "'");
    }
}

SiameseConfig::DiffMode parse_diff_mode(const std::string& s) {
    if (s == "absolute" || s == "abs") return SiameseConfig::DiffMode::kAbsolute;
    if (s == "euclidean" || s == "euclid") return SiameseConfig::DiffMode::kEuclidean;
    throw ConfigError("config: diff_mode must be 'absolute' or 'euclidean', got '" + s + "'");
}

const char* diff_mode_name(SiameseConfig::DiffMode m) {
    return m == SiameseConfig::DiffMode::kAbsolute ? "absolute" : "euclidean";
}

void load_config_file(const std::string& path, AppConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
    require_keys(j, "",
                 {"seed", "threads", "coreg", "slic", "forest", "siamese", "train", "acquire"});

    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("coreg")) {
        const auto& s = j.at("coreg");
        require_keys(s, "coreg",
                     {"pyramid_levels", "window_radius", "iterations_per_level", "rank_radius"});
        if (s.contains("pyramid_levels")) cfg.coreg.pyramid_levels = s.at("pyramid_levels").get<int>();
        if (s.contains("window_radius")) cfg.coreg.window_radius = s.at("window_radius").get<int>();
        if (s.contains("iterations_per_level"))
            cfg.coreg.iterations_per_level = s.at("iterations_per_level").get<int>();
        if (s.contains("rank_radius")) cfg.coreg.rank_radius = s.at("rank_radius").get<int>();
    }
    if (j.contains("slic")) {
        const auto& s = j.at("slic");
        require_keys(s, "slic", {"n_segments", "compactness", "max_iters", "enforce_connectivity"});
        if (s.contains("n_segments")) cfg.slic.n_segments = s.at("n_segments").get<int>();
        if (s.contains("compactness")) cfg.slic.compactness = s.at("compactness").get<double>();
        if (s.contains("max_iters")) cfg.slic.max_iters = s.at("max_iters").get<int>();
        if (s.contains("enforce_connectivity"))
            cfg.slic.enforce_connectivity = s.at("enforce_connectivity").get<bool>();
    }
    if (j.contains("forest")) {
        const auto& s = j.at("forest");
        require_keys(s, "forest", {"n_trees", "max_depth", "min_leaf", "split_fraction"});
        if (s.contains("n_trees")) cfg.forest.n_trees = s.at("n_trees").get<int>();
        if (s.contains("max_depth")) cfg.forest.max_depth = s.at("max_depth").get<int>();
        if (s.contains("min_leaf")) cfg.forest.min_leaf = s.at("min_leaf").get<int>();
        if (s.contains("split_fraction")) cfg.forest_split = s.at("split_fraction").get<double>();
    }
    if (j.contains("siamese")) {
        const auto& s = j.at("siamese");
        require_keys(s, "siamese", {"in_bands", "encoder_channels", "patch_size", "diff_mode"});
        if (s.contains("in_bands")) cfg.siamese.in_bands = s.at("in_bands").get<int>();
        if (s.contains("encoder_channels"))
            cfg.siamese.encoder_channels = s.at("encoder_channels").get<std::vector<int>>();
        if (s.contains("patch_size")) cfg.siamese.patch_size = s.at("patch_size").get<int>();
        if (s.contains("diff_mode"))
            cfg.siamese.diff_mode = parse_diff_mode(s.at("diff_mode").get<std::string>());
    }
    if (j.contains("train")) {
        const auto& s = j.at("train");
        require_keys(s, "train",
                     {"epochs", "batch", "lr", "momentum", "weight_decay", "patch_count", "patch",
                      "balance_fraction", "augment"});
        if (s.contains("epochs")) cfg.train.epochs = s.at("epochs").get<int>();
        if (s.contains("batch")) cfg.train.batch = s.at("batch").get<int>();
        if (s.contains("lr")) cfg.train.lr = s.at("lr").get<double>();
        if (s.contains("momentum")) cfg.train.momentum = s.at("momentum").get<double>();
        if (s.contains("weight_decay")) cfg.train.weight_decay = s.at("weight_decay").get<double>();
        if (s.contains("patch_count")) cfg.train.patch_count = s.at("patch_count").get<int>();
        if (s.contains("patch")) cfg.train.patch = s.at("patch").get<int>();
        if (s.contains("balance_fraction"))
            cfg.train.balance_fraction = s.at("balance_fraction").get<double>();
        if (s.contains("augment")) cfg.train.augment = s.at("augment").get<bool>();
    }
    if (j.contains("acquire")) {
        const auto& s = j.at("acquire");
        require_keys(s, "acquire", {"platform", "product_type", "cloud_min", "cloud_max"});
        if (s.contains("platform")) cfg.acquire.platform = s.at("platform").get<std::string>();
        if (s.contains("product_type"))
            cfg.acquire.product_type = s.at("product_type").get<std::string>();
        if (s.contains("cloud_min")) cfg.acquire.cloud_min = s.at("cloud_min").get<double>();
        if (s.contains("cloud_max")) cfg.acquire.cloud_max = s.at("cloud_max").get<double>();
    }
}

ordered_json config_to_json(const AppConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads == 0 ? max_threads() : cfg.threads;
    j["coreg"] = {{"pyramid_levels", cfg.coreg.pyramid_levels},
                  {"window_radius", cfg.coreg.window_radius},
                  {"iterations_per_level", cfg.coreg.iterations_per_level},
                  {"rank_radius", cfg.coreg.rank_radius}};
    j["slic"] = {{"n_segments", cfg.slic.n_segments},
                 {"compactness", cfg.slic.compactness},
                 {"max_iters", cfg.slic.max_iters},
                 {"enforce_connectivity", cfg.slic.enforce_connectivity}};
    j["forest"] = {{"n_trees", cfg.forest.n_trees},
                   {"max_depth", cfg.forest.max_depth},
                   {"min_leaf", cfg.forest.min_leaf},
                   {"split_fraction", cfg.forest_split}};
    j["siamese"] = {{"in_bands", cfg.siamese.in_bands},
                    {"encoder_channels", cfg.siamese.encoder_channels},
                    {"patch_size", cfg.siamese.patch_size},
                    {"diff_mode", diff_mode_name(cfg.siamese.diff_mode)}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch", cfg.train.batch},
                  {"lr", cfg.train.lr},
                  {"momentum", cfg.train.momentum},
                  {"weight_decay", cfg.train.weight_decay},
                  {"patch_count", cfg.train.patch_count},
                  {"patch", cfg.train.patch},
                  {"balance_fraction", cfg.train.balance_fraction},
                  {"augment", cfg.train.augment}};
    j["acquire"] = {{"platform", cfg.acquire.platform},
                    {"product_type", cfg.acquire.product_type},
                    {"cloud_min", cfg.acquire.cloud_min},
                    {"cloud_max", cfg.acquire.cloud_max}};
    return j;
}

void write_run_record(const std::string& out_base, const std::string& subcommand,
                      const AppConfig& cfg, const std::vector<std::string>& argv) {
    if (out_base.empty()) return;
    ordered_json j;
    j["tool"] = "urbdiff";
    j["version"] = kVersionString;
    j["subcommand"] = subcommand;
    j["argv"] = argv;
    j["config"] = config_to_json(cfg);
    std::ofstream out(out_base + ".run.json");
    if (!out) throw ConfigError("cannot write run record next to '" + out_base + "'");
    out << j.dump(2) << "\n";
}

void print_warnings(const Warnings& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------
// Shared raster helpers.

std::vector<std::uint8_t> to_binary_map(const Raster& r, const char* what) {
    if (r.bands != 1)
        throw ShapeError(std::string(what) + ": expected a single-band raster, got " +
                         std::to_string(r.bands) + " bands");
    std::vector<std::uint8_t> out(r.pixels());
    for (std::int64_t i = 0; i < r.pixels(); ++i) {
        const float v = r.samples[i];
        if (v == 0.0f) out[i] = 0;
        else if (v == 1.0f) out[i] = 1;
        else
            throw LabelError(std::string(what) + ": non-binary value " + std::to_string(v) +
                             " at pixel " + std::to_string(i));
    }
    return out;
}

SegmentMap segment_map_from_raster(const Raster& r) {
    if (r.bands != 1) throw ShapeError("segment raster must be single-band");
    SegmentMap map;
    map.width = r.width;
    map.height = r.height;
    map.labels.resize(r.pixels());
    std::int32_t max_id = -1;
    for (std::int64_t i = 0; i < r.pixels(); ++i) {
        const float v = r.samples[i];
        const std::int32_t id = static_cast<std::int32_t>(v);
        if (v < 0.0f || static_cast<float>(id) != v)
            throw ParseError("segment raster holds a non-integer or negative id at pixel " +
                             std::to_string(i));
        map.labels[i] = id;
        max_id = std::max(max_id, id);
    }
    map.count = max_id + 1;
    map.sizes.assign(map.count, 0);
    for (std::int32_t id : map.labels) ++map.sizes[id];
    for (int id = 0; id < map.count; ++id)
        if (map.sizes[id] == 0)
            throw ParseError("segment raster ids are not dense (id " + std::to_string(id) +
                             " unused)");
    return map;
}

Raster map_to_raster(const std::vector<std::uint8_t>& labels, int w, int h,
                     const GeoTransform& geo, const char* band_id) {
    Raster r = Raster::create(w, h, 1, geo, {band_id});
    for (std::size_t i = 0; i < labels.size(); ++i) r.samples[i] = labels[i];
    return r;
}

std::vector<int> parse_channels(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse channel list '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty channel list");
    return out;
}

// ---------------------------------------------------------------------------

struct Cli {
    AppConfig cfg;
    std::vector<std::string> argv_copy;

    // Per-subcommand option state. CLI11 stores into these; flags the user
    // actually passed override the config file afterwards.
    std::string config_path;
    int threads_flag = 0;
    std::uint64_t seed_flag = 0;

    void apply_common(CLI::App* sub) {
        if (sub->count("--config")) load_config_file(config_path, cfg);
        if (sub->count("--threads")) cfg.threads = threads_flag;
        if (sub->count("--seed")) cfg.seed = seed_flag;
        if (cfg.threads > 0) set_max_threads(cfg.threads);
    }

    void add_common(CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration (flags take precedence)");
        sub->add_option("--threads", threads_flag, "Cap on worker threads");
        sub->add_option("--seed", seed_flag, "Seed for all randomized steps");
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"urbdiff — urban change detection over two-date satellite scenes"};
    app.require_subcommand(1);
    Cli cli;
    for (int i = 0; i < argc; ++i) cli.argv_copy.emplace_back(argv[i]);

    // --- acquire -----------------------------------------------------------
    auto* acquire_cmd =
        app.add_subcommand("acquire", "Build a catalog query; optionally filter a recorded feed");
    struct {
        std::string aoi, start, end, records, out;
        double cloud_min = 0.0, cloud_max = 20.0;
        std::string platform, product_type;
    } acq;
    acquire_cmd->add_option("--aoi", acq.aoi, "AOI polygon (geoJSON)")->required();
    acquire_cmd->add_option("--start", acq.start, "Start date YYYY-MM-DD")->required();
    acquire_cmd->add_option("--end", acq.end, "End date YYYY-MM-DD")->required();
    acquire_cmd->add_option("--cloud-min", acq.cloud_min, "Minimum cloud cover percent");
    acquire_cmd->add_option("--cloud-max", acq.cloud_max, "Maximum cloud cover percent");
    acquire_cmd->add_option("--platform", acq.platform, "Platform name");
    acquire_cmd->add_option("--product-type", acq.product_type, "Product type");
    acquire_cmd->add_option("--records", acq.records, "Recorded catalog response (JSON feed)");
    acquire_cmd->add_option("--out", acq.out, "Output base path");
    acquire_cmd->callback([&] {
        cli.apply_common(acquire_cmd);
        if (acquire_cmd->count("--cloud-min")) cli.cfg.acquire.cloud_min = acq.cloud_min;
        if (acquire_cmd->count("--cloud-max")) cli.cfg.acquire.cloud_max = acq.cloud_max;
        if (acquire_cmd->count("--platform")) cli.cfg.acquire.platform = acq.platform;
        if (acquire_cmd->count("--product-type"))
            cli.cfg.acquire.product_type = acq.product_type;

        AcquisitionQuery q;
        q.footprint = load_aoi_geojson(acq.aoi);
        q.date_start = Date::parse(acq.start);
        q.date_end = Date::parse(acq.end);
        q.platform = cli.cfg.acquire.platform;
        q.product_type = cli.cfg.acquire.product_type;
        q.cloud_min = cli.cfg.acquire.cloud_min;
        q.cloud_max = cli.cfg.acquire.cloud_max;
        q.validate();

        ordered_json out;
        out["query"] = build_query(q);
        if (!acq.records.empty()) {
            Warnings warnings;
            const auto products = load_products(acq.records, q.cloud_max, &warnings);
            print_warnings(warnings);
            out["products"] = ordered_json::array();
            for (const auto& p : products)
                out["products"].push_back({{"id", p.id},
                                           {"title", p.title},
                                           {"date", p.sensing_date.iso()},
                                           {"cloud_cover", p.cloud_cover}});
        }
        std::cout << out.dump(2) << "\n";
        if (!acq.out.empty()) {
            std::ofstream f(acq.out + ".json");
            if (!f) throw ConfigError("cannot write '" + acq.out + ".json'");
            f << out.dump(2) << "\n";
            write_run_record(acq.out, "acquire", cli.cfg, cli.argv_copy);
        }
    });

    // --- coreg -------------------------------------------------------------
    auto* coreg_cmd = app.add_subcommand("coreg", "Register the second scene onto the first");
    struct {
        std::string ref, mov, out;
        int levels = 4, window = 8, iterations = 5, rank_radius = 2;
    } crg;
    coreg_cmd->add_option("--ref", crg.ref, "Reference raster")->required();
    coreg_cmd->add_option("--mov", crg.mov, "Moving raster")->required();
    coreg_cmd->add_option("--out", crg.out, "Output base path")->required();
    coreg_cmd->add_option("--levels", crg.levels, "Pyramid levels");
    coreg_cmd->add_option("--window", crg.window, "Aggregation window radius (px)");
    coreg_cmd->add_option("--iterations", crg.iterations, "Iterations per level");
    coreg_cmd->add_option("--rank-radius", crg.rank_radius, "Rank filter radius (px)");
    coreg_cmd->callback([&] {
        cli.apply_common(coreg_cmd);
        if (coreg_cmd->count("--levels")) cli.cfg.coreg.pyramid_levels = crg.levels;
        if (coreg_cmd->count("--window")) cli.cfg.coreg.window_radius = crg.window;
        if (coreg_cmd->count("--iterations")) cli.cfg.coreg.iterations_per_level = crg.iterations;
        if (coreg_cmd->count("--rank-radius")) cli.cfg.coreg.rank_radius = crg.rank_radius;

        const Raster ref = load_raster_any(crg.ref);
        const Raster mov = load_raster_any(crg.mov);
        CoregResult res = coregister(ref, mov, cli.cfg.coreg);

        save_raster(res.warped, crg.out + "_warped");
        Raster flow = Raster::create(ref.width, ref.height, 2, ref.geo, {"u", "v"});
        std::copy(res.flow.u.begin(), res.flow.u.end(), flow.band_data(0));
        std::copy(res.flow.v.begin(), res.flow.v.end(), flow.band_data(1));
        save_raster(flow, crg.out + "_flow");
        Raster valid = Raster::create(ref.width, ref.height, 1, ref.geo, {"valid"});
        for (std::size_t i = 0; i < res.valid.size(); ++i) valid.samples[i] = res.valid[i];
        save_raster(valid, crg.out + "_valid", RasterDType::kInt32);

        double mu = 0.0, mv = 0.0;
        std::int64_t invalid = 0;
        for (std::size_t i = 0; i < res.flow.u.size(); ++i) {
            mu += std::abs(res.flow.u[i]);
            mv += std::abs(res.flow.v[i]);
            invalid += res.valid[i] == 0;
        }
        ordered_json out;
        out["width"] = ref.width;
        out["height"] = ref.height;
        out["mean_abs_u"] = mu / res.flow.u.size();
        out["mean_abs_v"] = mv / res.flow.v.size();
        out["invalid_pixels"] = invalid;
        std::cout << out.dump(2) << "\n";
        write_run_record(crg.out, "coreg", cli.cfg, cli.argv_copy);
    });

    // --- segment -----------------------------------------------------------
    auto* segment_cmd = app.add_subcommand("segment", "SLIC superpixels + per-segment features");
    struct {
        std::string in, out;
        int segments = 1000, iters = 10;
        double compactness = 0.1;
        bool no_connectivity = false;
        int red_band = -1, nir_band = -1;
    } seg;
    segment_cmd->add_option("--in", seg.in, "Input raster")->required();
    segment_cmd->add_option("--out", seg.out, "Output base path")->required();
    segment_cmd->add_option("--segments", seg.segments, "Requested superpixel count");
    segment_cmd->add_option("--compactness", seg.compactness, "Spatial-vs-spectral trade-off m");
    segment_cmd->add_option("--iters", seg.iters, "Assignment/update iterations");
    segment_cmd->add_flag("--no-connectivity", seg.no_connectivity,
                          "Skip connectivity enforcement");
    segment_cmd->add_option("--red-band", seg.red_band, "Red band index (default: from band ids)");
    segment_cmd->add_option("--nir-band", seg.nir_band, "NIR band index (default: from band ids)");
    segment_cmd->callback([&] {
        cli.apply_common(segment_cmd);
        if (segment_cmd->count("--segments")) cli.cfg.slic.n_segments = seg.segments;
        if (segment_cmd->count("--compactness")) cli.cfg.slic.compactness = seg.compactness;
        if (segment_cmd->count("--iters")) cli.cfg.slic.max_iters = seg.iters;
        if (seg.no_connectivity) cli.cfg.slic.enforce_connectivity = false;

        const Raster r = load_raster_any(seg.in);
        Warnings warnings;
        if (cli.cfg.slic.n_segments > r.pixels()) {
            warnings.push_back("requested " + std::to_string(cli.cfg.slic.n_segments) +
                               " segments exceeds pixel count " + std::to_string(r.pixels()) +
                               "; clamping");
            cli.cfg.slic.n_segments = static_cast<int>(r.pixels());
        }
        SlicStats stats;
        const SegmentMap map = slic(r, cli.cfg.slic, &stats, &warnings);

        BandRoles roles;
        if (seg.red_band >= 0 && seg.nir_band >= 0) {
            roles.red = seg.red_band;
            roles.nir = seg.nir_band;
        } else {
            roles = resolve_band_roles(r.band_ids);
        }
        const SegmentFeatures feats = superpixel_features(r, map, roles);

        Raster seg_raster = Raster::create(map.width, map.height, 1, r.geo, {"segment"});
        for (std::int64_t i = 0; i < map.pixels(); ++i)
            seg_raster.samples[i] = static_cast<float>(map.labels[i]);
        save_raster(seg_raster, seg.out + "_segments", RasterDType::kInt32);
        save_features_csv(feats, seg.out + "_features.csv");
        print_warnings(warnings);

        ordered_json out;
        out["segments"] = map.count;
        out["iterations"] = stats.iterations;
        out["energy"] = stats.energy;
        std::cout << out.dump(2) << "\n";
        write_run_record(seg.out, "segment", cli.cfg, cli.argv_copy);
    });

    // --- classify ----------------------------------------------------------
    auto* classify_cmd =
        app.add_subcommand("classify", "Train a random forest on sample points, label segments");
    struct {
        std::string segments, features, points, out;
        int trees = 100, max_depth = 12, min_leaf = 2;
        double split_fraction = 0.7;
    } cls;
    classify_cmd->add_option("--segments", cls.segments, "Segment id raster")->required();
    classify_cmd->add_option("--features", cls.features, "Per-segment feature CSV")->required();
    classify_cmd->add_option("--points", cls.points, "Labeled sample points (geoJSON or CSV)")
        ->required();
    classify_cmd->add_option("--out", cls.out, "Output base path")->required();
    classify_cmd->add_option("--trees", cls.trees, "Tree count");
    classify_cmd->add_option("--max-depth", cls.max_depth, "Maximum tree depth");
    classify_cmd->add_option("--min-leaf", cls.min_leaf, "Minimum rows per leaf");
    classify_cmd->add_option("--split-fraction", cls.split_fraction, "Training share of rows");
    classify_cmd->callback([&] {
        cli.apply_common(classify_cmd);
        if (classify_cmd->count("--trees")) cli.cfg.forest.n_trees = cls.trees;
        if (classify_cmd->count("--max-depth")) cli.cfg.forest.max_depth = cls.max_depth;
        if (classify_cmd->count("--min-leaf")) cli.cfg.forest.min_leaf = cls.min_leaf;
        if (classify_cmd->count("--split-fraction")) cli.cfg.forest_split = cls.split_fraction;
        cli.cfg.forest.seed = cli.cfg.seed;

        const Raster seg_raster = load_raster_any(cls.segments);
        const SegmentMap map = segment_map_from_raster(seg_raster);
        const SegmentFeatures feats = load_features_csv(cls.features);
        if (feats.n_segments != map.count)
            throw ShapeError("feature CSV covers " + std::to_string(feats.n_segments) +
                             " segments, raster has " + std::to_string(map.count));
        const auto points = load_labeled_points(cls.points);

        const FeatureRows rows = ingest_samples(points, seg_raster.geo, map.width, map.height,
                                                map, feats);
        Confusion held_out;
        const Forest forest = train_forest(rows, cli.cfg.forest_split, cli.cfg.forest, &held_out);
        save_forest(forest, cls.out + "_forest.rfor");

        const std::vector<int> labels = classify_segments(forest, feats);
        const Raster painted = paint_labels(map, labels, seg_raster.geo);
        save_raster(painted, cls.out + "_landcover", RasterDType::kInt32);

        std::cout << report_to_json(scores(held_out)) << "\n";
        write_run_record(cls.out, "classify", cli.cfg, cli.argv_copy);
    });

    // --- train -------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train the change-detection network");
    struct {
        std::string manifest, out, channels, diff, class_weights;
        int epochs = 10, batch = 8, patch = 32, patch_count = 128, bands = 13;
        double lr = 0.01, momentum = 0.9, weight_decay = 1e-4, balance = 0.5;
        bool augment = false;
    } trn;
    train_cmd->add_option("--manifest", trn.manifest, "Dataset manifest JSON")->required();
    train_cmd->add_option("--out", trn.out, "Checkpoint output path")->required();
    train_cmd->add_option("--epochs", trn.epochs, "Training epochs");
    train_cmd->add_option("--batch", trn.batch, "Mini-batch size");
    train_cmd->add_option("--lr", trn.lr, "Learning rate");
    train_cmd->add_option("--momentum", trn.momentum, "SGD momentum");
    train_cmd->add_option("--weight-decay", trn.weight_decay, "L2 weight decay");
    train_cmd->add_option("--patch", trn.patch, "Patch size (power of two)");
    train_cmd->add_option("--patch-count", trn.patch_count, "Patches sampled per run");
    train_cmd->add_option("--balance", trn.balance, "Share of patches that must contain change");
    train_cmd->add_flag("--augment", trn.augment, "Random dihedral augmentation");
    train_cmd->add_option("--bands", trn.bands, "Input band count");
    train_cmd->add_option("--channels", trn.channels, "Encoder widths, e.g. 16,32,64,128");
    train_cmd->add_option("--diff", trn.diff, "Bottleneck difference: absolute|euclidean");
    train_cmd->add_option("--class-weights", trn.class_weights,
                          "Loss weights 'w0,w1' (default: inverse class frequency)");
    train_cmd->callback([&] {
        cli.apply_common(train_cmd);
        auto& cfg = cli.cfg;
        if (train_cmd->count("--epochs")) cfg.train.epochs = trn.epochs;
        if (train_cmd->count("--batch")) cfg.train.batch = trn.batch;
        if (train_cmd->count("--lr")) cfg.train.lr = trn.lr;
        if (train_cmd->count("--momentum")) cfg.train.momentum = trn.momentum;
        if (train_cmd->count("--weight-decay")) cfg.train.weight_decay = trn.weight_decay;
        if (train_cmd->count("--patch")) cfg.train.patch = trn.patch;
        if (train_cmd->count("--patch-count")) cfg.train.patch_count = trn.patch_count;
        if (train_cmd->count("--balance")) cfg.train.balance_fraction = trn.balance;
        if (trn.augment) cfg.train.augment = true;
        if (train_cmd->count("--bands")) cfg.siamese.in_bands = trn.bands;
        if (train_cmd->count("--channels"))
            cfg.siamese.encoder_channels = parse_channels(trn.channels);
        if (train_cmd->count("--diff")) cfg.siamese.diff_mode = parse_diff_mode(trn.diff);
        cfg.siamese.patch_size = cfg.train.patch;
        cfg.siamese.validate();

        const Manifest manifest = load_manifest(trn.manifest);
        Warnings warnings;
        SampleOptions sopts;
        sopts.patch = cfg.train.patch;
        sopts.count = cfg.train.patch_count;
        sopts.balance_fraction = cfg.train.balance_fraction;
        sopts.seed = cfg.seed;
        sopts.augment = cfg.train.augment;
        const auto patches = sample_patches(manifest, Split::kTrain, sopts, &warnings);

        Network net = build_network(cfg.siamese, cfg.seed);
        TrainOptions topts;
        topts.epochs = cfg.train.epochs;
        topts.batch = cfg.train.batch;
        topts.lr = cfg.train.lr;
        topts.momentum = cfg.train.momentum;
        topts.weight_decay = cfg.train.weight_decay;
        topts.seed = cfg.seed;
        topts.checkpoint_path = trn.out;
        if (train_cmd->count("--class-weights")) {
            const auto parts = parse_channels(trn.class_weights);  // reuse "a,b" parsing
            if (parts.size() != 2) throw ConfigError("--class-weights expects 'w0,w1'");
            topts.class_weights = {static_cast<double>(parts[0]), static_cast<double>(parts[1])};
        }
        const auto trace = train(net, patches, topts, &warnings);
        print_warnings(warnings);

        ordered_json out;
        out["epochs"] = ordered_json::array();
        for (std::size_t e = 0; e < trace.size(); ++e)
            out["epochs"].push_back({{"epoch", e + 1},
                                     {"mean_loss", trace[e].mean_loss},
                                     {"pixel_accuracy", trace[e].pixel_accuracy}});
        out["checkpoint"] = trn.out;
        std::cout << out.dump(2) << "\n";
        write_run_record(trn.out, "train", cli.cfg, cli.argv_copy);
    });

    // --- infer -------------------------------------------------------------
    auto* infer_cmd = app.add_subcommand("infer", "Produce a change map from a scene pair");
    struct {
        std::string checkpoint, a, b, out, channels, diff;
        int bands = 13, patch = 32;
        bool raw = false;
    } inf;
    infer_cmd->add_option("--checkpoint", inf.checkpoint, "Trained checkpoint")->required();
    infer_cmd->add_option("--a", inf.a, "First-date raster")->required();
    infer_cmd->add_option("--b", inf.b, "Second-date raster")->required();
    infer_cmd->add_option("--out", inf.out, "Output base path")->required();
    infer_cmd->add_option("--bands", inf.bands, "Input band count");
    infer_cmd->add_option("--patch", inf.patch, "Patch size the checkpoint was trained with");
    infer_cmd->add_option("--channels", inf.channels, "Encoder widths, e.g. 16,32,64,128");
    infer_cmd->add_option("--diff", inf.diff, "Bottleneck difference: absolute|euclidean");
    infer_cmd->add_flag("--raw", inf.raw, "Skip per-band z-score normalization");
    infer_cmd->callback([&] {
        cli.apply_common(infer_cmd);
        auto& cfg = cli.cfg;
        if (infer_cmd->count("--bands")) cfg.siamese.in_bands = inf.bands;
        if (infer_cmd->count("--patch")) cfg.siamese.patch_size = inf.patch;
        if (infer_cmd->count("--channels"))
            cfg.siamese.encoder_channels = parse_channels(inf.channels);
        if (infer_cmd->count("--diff")) cfg.siamese.diff_mode = parse_diff_mode(inf.diff);

        const Network net = load_checkpoint(inf.checkpoint, cfg.siamese);
        Raster a = load_raster_any(inf.a);
        Raster b = load_raster_any(inf.b);
        Warnings warnings;
        if (!inf.raw) {
            a = normalize(a, NormalizeMode::kZScore, &warnings);
            b = normalize(b, NormalizeMode::kZScore, &warnings);
        }
        const ChangeMap map = predict_scene(net, a, b);
        print_warnings(warnings);

        save_raster(map_to_raster(map.labels, map.width, map.height, a.geo, "change"),
                    inf.out + "_change", RasterDType::kInt32);
        Raster prob = Raster::create(map.width, map.height, 1, a.geo, {"p_change"});
        std::copy(map.probability.begin(), map.probability.end(), prob.samples.begin());
        save_raster(prob, inf.out + "_prob");

        const AreaStats area = changed_area(map.labels, map.width, map.height, a.geo);
        ordered_json out;
        out["width"] = map.width;
        out["height"] = map.height;
        out["changed_pixels"] = area.changed_pixels;
        out["fraction_of_total"] = area.fraction_of_total;
        out["area_m2"] = area.area_m2;
        std::cout << out.dump(2) << "\n";
        write_run_record(inf.out, "infer", cli.cfg, cli.argv_copy);
    });

    // --- eval --------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Score a change map against ground truth");
    struct {
        std::string pred, truth, out;
    } evl;
    eval_cmd->add_option("--pred", evl.pred, "Predicted map raster")->required();
    eval_cmd->add_option("--truth", evl.truth, "Ground-truth map raster")->required();
    eval_cmd->add_option("--out", evl.out, "Also write the JSON report here");
    eval_cmd->callback([&] {
        cli.apply_common(eval_cmd);
        const Raster pred_r = load_raster_any(evl.pred);
        const Raster truth_r = load_raster_any(evl.truth);
        const auto pred = to_binary_map(pred_r, "pred");
        const auto truth = to_binary_map(truth_r, "truth");
        if (pred_r.width != truth_r.width || pred_r.height != truth_r.height)
            throw ShapeError("pred and truth dimensions differ");

        const Confusion c = confusion(pred, truth, pred_r.width, pred_r.height);
        const AreaStats area = changed_area(pred, pred_r.width, pred_r.height, pred_r.geo);
        const std::string report = report_to_json(scores(c), &area);
        std::cout << report << "\n";
        if (!evl.out.empty()) {
            std::ofstream f(evl.out);
            if (!f) throw ConfigError("cannot write '" + evl.out + "'");
            f << report << "\n";
            write_run_record(evl.out, "eval", cli.cfg, cli.argv_copy);
        }
    });

    // --- area --------------------------------------------------------------
    auto* area_cmd = app.add_subcommand("area", "Changed-area statistics of a map");
    struct {
        std::string map;
        double pixel_size = 0.0;
    } ara;
    area_cmd->add_option("--map", ara.map, "Change map raster")->required();
    area_cmd->add_option("--pixel-size", ara.pixel_size,
                         "Override pixel size in map units (e.g. 10)");
    area_cmd->callback([&] {
        cli.apply_common(area_cmd);
        const Raster r = load_raster_any(ara.map);
        const auto labels = to_binary_map(r, "map");
        GeoTransform geo = r.geo;
        if (area_cmd->count("--pixel-size")) {
            geo.pixel_size_x = ara.pixel_size;
            geo.pixel_size_y = -ara.pixel_size;
        }
        const AreaStats area = changed_area(labels, r.width, r.height, geo);
        ordered_json out;
        out["changed_pixels"] = area.changed_pixels;
        out["area_m2"] = area.area_m2;
        out["fraction_of_total"] = area.fraction_of_total;
        std::cout << out.dump(2) << "\n";
    });

    // --- manifest ----------------------------------------------------------
    auto* manifest_cmd =
        app.add_subcommand("manifest", "Scan a dataset directory tree into a manifest");
    struct {
        std::string root, out;
    } mfs;
    manifest_cmd->add_option("--root", mfs.root, "Dataset root directory")->required();
    manifest_cmd->add_option("--out", mfs.out, "Manifest output path")->required();
    manifest_cmd->callback([&] {
        cli.apply_common(manifest_cmd);
        Warnings warnings;
        const Manifest m = scan_dataset_tree(mfs.root, &warnings);
        save_manifest(m, mfs.out);
        print_warnings(warnings);
        int train_n = 0, test_n = 0;
        for (const auto& e : m.entries) (e.split == Split::kTrain ? train_n : test_n) += 1;
        ordered_json out;
        out["regions"] = m.entries.size();
        out["train"] = train_n;
        out["test"] = test_n;
        out["manifest"] = mfs.out;
        std::cout << out.dump(2) << "\n";
        write_run_record(mfs.out, "manifest", cli.cfg, cli.argv_copy);
    });

    for (auto* sub : app.get_subcommands({})) cli.add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
