#include "urbdiff/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "urbdiff/tiff.hpp"
#include "urbdiff/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace urbdiff {

Raster Raster::create(int width, int height, int bands, const GeoTransform& geo,
                      std::vector<std::string> band_ids) {
    if (width <= 0 || height <= 0 || bands <= 0)
        throw ShapeError("raster dimensions must be positive");
    Raster r;
    r.width = width;
    r.height = height;
    r.bands = bands;
    r.geo = geo;
    r.samples.assign(static_cast<std::size_t>(bands) * width * height, 0.0f);
    if (band_ids.empty()) {
        for (int b = 0; b < bands; ++b) r.band_ids.push_back("band" + std::to_string(b));
    } else {
        if (static_cast<int>(band_ids.size()) != bands)
            throw ShapeError("band_ids length must equal band count");
        r.band_ids = std::move(band_ids);
    }
    return r;
}

Raster merge_bands(const std::vector<Raster>& bands) {
    if (bands.empty()) throw AlignmentError("merge_bands: no input bands");
    const Raster& first = bands.front();
    int total = 0;
    for (const Raster& b : bands) {
        if (b.width != first.width || b.height != first.height)
            throw AlignmentError("merge_bands: dimension mismatch (" + std::to_string(b.width) +
                                 "x" + std::to_string(b.height) + " vs " +
                                 std::to_string(first.width) + "x" + std::to_string(first.height) +
                                 ")");
        if (!b.geo.almost_equal(first.geo, 1e-6))
            throw AlignmentError("merge_bands: geotransform mismatch beyond 1e-6");
        total += b.bands;
    }
    Raster out;
    out.width = first.width;
    out.height = first.height;
    out.bands = total;
    out.geo = first.geo;
    out.samples.reserve(static_cast<std::size_t>(total) * first.pixels());
    for (const Raster& b : bands) {
        out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
        out.band_ids.insert(out.band_ids.end(), b.band_ids.begin(), b.band_ids.end());
    }
    return out;
}

std::vector<Raster> split_bands(const Raster& r) {
    std::vector<Raster> out;
    out.reserve(r.bands);
    for (int b = 0; b < r.bands; ++b) {
        Raster s;
        s.width = r.width;
        s.height = r.height;
        s.bands = 1;
        s.geo = r.geo;
        s.band_ids = {r.band_ids[b]};
        s.samples.assign(r.band_data(b), r.band_data(b) + r.pixels());
        out.push_back(std::move(s));
    }
    return out;
}

Raster crop_to_aoi(const Raster& r, const AoiPolygon& aoi) {
    aoi.validate();
    r.geo.validate();
    const auto bb = aoi.bounds();

    // Map the bbox corners to fractional pixel coordinates; order min/max so
    // negative pixel_size_y is handled.
    auto [c0, r0] = r.geo.map_to_pixel(bb.min_x, bb.min_y);
    auto [c1, r1] = r.geo.map_to_pixel(bb.max_x, bb.max_y);
    double col_lo = std::min(c0, c1), col_hi = std::max(c0, c1);
    double row_lo = std::min(r0, r1), row_hi = std::max(r0, r1);

    // Snap outward to whole pixels, then clip to the raster.
    // An edge exactly on a pixel boundary does not pull in the next pixel.
    int x0 = static_cast<int>(std::floor(col_lo + 1e-9));
    int y0 = static_cast<int>(std::floor(row_lo + 1e-9));
    int x1 = static_cast<int>(std::ceil(col_hi - 1e-9));
    int y1 = static_cast<int>(std::ceil(row_hi - 1e-9));
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, r.width);
    y1 = std::min(y1, r.height);
    if (x0 >= x1 || y0 >= y1) throw OutOfBounds("crop_to_aoi: AOI does not intersect raster");

    Raster out;
    out.width = x1 - x0;
    out.height = y1 - y0;
    out.bands = r.bands;
    out.band_ids = r.band_ids;
    out.geo = r.geo;
    auto [ox, oy] = r.geo.pixel_to_map(x0, y0);
    out.geo.origin_x = ox;
    out.geo.origin_y = oy;
    out.samples.resize(static_cast<std::size_t>(out.bands) * out.pixels());
    for (int b = 0; b < r.bands; ++b)
        for (int y = y0; y < y1; ++y) {
            const float* src = r.band_data(b) + static_cast<std::int64_t>(y) * r.width + x0;
            float* dst = out.band_data(b) + static_cast<std::int64_t>(y - y0) * out.width;
            std::copy(src, src + out.width, dst);
        }
    return out;
}

Raster normalize(const Raster& r, NormalizeMode mode, Warnings* warnings) {
    Raster out = r;
    const std::int64_t n = r.pixels();
    for (int b = 0; b < r.bands; ++b) {
        const float* src = r.band_data(b);
        float* dst = out.band_data(b);
        if (mode == NormalizeMode::kMinMax) {
            float lo = src[0], hi = src[0];
            for (std::int64_t i = 1; i < n; ++i) {
                lo = std::min(lo, src[i]);
                hi = std::max(hi, src[i]);
            }
            if (hi == lo) {
                if (warnings)
                    warnings->push_back("min-max: band " + r.band_ids[b] +
                                        " is constant; left unchanged");
                continue;
            }
            const double scale = 1.0 / (static_cast<double>(hi) - lo);
            for (std::int64_t i = 0; i < n; ++i)
                dst[i] = static_cast<float>((src[i] - lo) * scale);
        } else {
            double sum = 0.0, sum2 = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                sum += src[i];
                sum2 += static_cast<double>(src[i]) * src[i];
            }
            const double mean = sum / n;
            const double var = std::max(0.0, sum2 / n - mean * mean);
            if (var == 0.0) {
                if (warnings)
                    warnings->push_back("z-score: band " + r.band_ids[b] +
                                        " is degenerate (constant); left unchanged");
                continue;
            }
            const double inv_std = 1.0 / std::sqrt(var);
            for (std::int64_t i = 0; i < n; ++i)
                dst[i] = static_cast<float>((src[i] - mean) * inv_std);
        }
    }
    return out;
}

// --- internal format -------------------------------------------------------

namespace {

std::string strip_known_suffix(const std::string& path) {
    for (const char* suf : {".hdr.json", ".band.f32", ".band.i32"}) {
        if (path.size() > std::strlen(suf) &&
            path.compare(path.size() - std::strlen(suf), std::string::npos, suf) == 0)
            return path.substr(0, path.size() - std::strlen(suf));
    }
    return path;
}

}  // namespace

void save_raster(const Raster& r, const std::string& base_path, RasterDType dtype) {
    const std::string base = strip_known_suffix(base_path);
    const bool as_int = dtype == RasterDType::kInt32;
    const std::string data_name = fs::path(base).filename().string() +
                                  (as_int ? ".band.i32" : ".band.f32");

    json hdr;
    hdr["format_version"] = kRasterHeaderVersion;
    hdr["width"] = r.width;
    hdr["height"] = r.height;
    hdr["bands"] = r.bands;
    hdr["dtype"] = as_int ? "int32" : "float32";
    hdr["data"] = data_name;
    hdr["geotransform"] = {r.geo.origin_x, r.geo.origin_y, r.geo.pixel_size_x, r.geo.pixel_size_y};
    hdr["band_ids"] = r.band_ids;

    std::ofstream hf(base + ".hdr.json");
    if (!hf) throw Error("cannot write " + base + ".hdr.json");
    hf << hdr.dump(2) << "\n";
    hf.close();

    const std::string data_path = (fs::path(base).parent_path() / data_name).string();
    std::ofstream df(data_path, std::ios::binary);
    if (!df) throw Error("cannot write " + data_path);
    if (as_int) {
        std::vector<std::int32_t> tmp(r.samples.size());
        for (std::size_t i = 0; i < r.samples.size(); ++i)
            tmp[i] = static_cast<std::int32_t>(std::lround(r.samples[i]));
        df.write(reinterpret_cast<const char*>(tmp.data()),
                 static_cast<std::streamsize>(tmp.size() * sizeof(std::int32_t)));
    } else {
        df.write(reinterpret_cast<const char*>(r.samples.data()),
                 static_cast<std::streamsize>(r.samples.size() * sizeof(float)));
    }
    if (!df) throw Error("short write to " + data_path);
}

Raster load_raster(const std::string& path) {
    const std::string base = strip_known_suffix(path);
    const std::string hdr_path = base + ".hdr.json";
    std::ifstream hf(hdr_path);
    if (!hf) throw ParseError("cannot open " + hdr_path);
    json hdr;
    try {
        hf >> hdr;
    } catch (const json::exception& e) {
        throw ParseError(hdr_path + ": " + e.what());
    }

    Raster r;
    try {
        r.width = hdr.at("width").get<int>();
        r.height = hdr.at("height").get<int>();
        r.bands = hdr.at("bands").get<int>();
        const auto& gt = hdr.at("geotransform");
        r.geo.origin_x = gt.at(0).get<double>();
        r.geo.origin_y = gt.at(1).get<double>();
        r.geo.pixel_size_x = gt.at(2).get<double>();
        r.geo.pixel_size_y = gt.at(3).get<double>();
        r.band_ids = hdr.at("band_ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParseError(hdr_path + ": " + e.what());
    }
    if (r.width <= 0 || r.height <= 0 || r.bands <= 0)
        throw ParseError(hdr_path + ": non-positive dimensions");
    if (static_cast<int>(r.band_ids.size()) != r.bands)
        throw ParseError(hdr_path + ": band_ids length mismatch");

    const std::string dtype = hdr.value("dtype", "float32");
    std::string data_name = hdr.value("data", std::string());
    if (data_name.empty())
        data_name = fs::path(base).filename().string() +
                    (dtype == "int32" ? ".band.i32" : ".band.f32");
    const std::string data_path = (fs::path(base).parent_path() / data_name).string();

    std::ifstream df(data_path, std::ios::binary);
    if (!df) throw ParseError("cannot open " + data_path);
    const std::size_t count = static_cast<std::size_t>(r.bands) * r.width * r.height;
    r.samples.resize(count);
    if (dtype == "float32") {
        df.read(reinterpret_cast<char*>(r.samples.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (static_cast<std::size_t>(df.gcount()) != count * sizeof(float))
            throw TruncatedFile(data_path + ": expected " + std::to_string(count) + " float32");
    } else if (dtype == "int32") {
        std::vector<std::int32_t> tmp(count);
        df.read(reinterpret_cast<char*>(tmp.data()),
                static_cast<std::streamsize>(count * sizeof(std::int32_t)));
        if (static_cast<std::size_t>(df.gcount()) != count * sizeof(std::int32_t))
            throw TruncatedFile(data_path + ": expected " + std::to_string(count) + " int32");
        for (std::size_t i = 0; i < count; ++i) r.samples[i] = static_cast<float>(tmp[i]);
    } else {
        throw UnsupportedFormat(hdr_path + ": unknown dtype '" + dtype + "'");
    }
    return r;
}

namespace {

bool is_internal_path(const std::string& path) {
    return path.size() >= 9 &&
           (path.ends_with(".hdr.json") || path.ends_with(".band.f32") ||
            path.ends_with(".band.i32"));
}

}  // namespace

RasterDims peek_raster_dims(const std::string& path) {
    if (is_internal_path(path)) {
        const std::string hdr_path = strip_known_suffix(path) + ".hdr.json";
        std::ifstream hf(hdr_path);
        if (!hf) throw ParseError("cannot open " + hdr_path);
        json hdr;
        try {
            hf >> hdr;
            return {hdr.at("width").get<int>(), hdr.at("height").get<int>(),
                    hdr.at("bands").get<int>()};
        } catch (const json::exception& e) {
            throw ParseError(hdr_path + ": " + e.what());
        }
    }
    return peek_tiff_dims(path);
}

Raster load_raster_any(const std::string& path) {
    if (is_internal_path(path)) return load_raster(path);
    return load_tiff_band(path);
}

}  // namespace urbdiff
