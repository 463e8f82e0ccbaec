#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urbdiff/errors.hpp"
#include "urbdiff/geo.hpp"

namespace urbdiff {

// Georeferenced multi-band image. Samples are band-major float32:
// samples[b * height * width + y * width + x]. Values are immutable by
// convention once an operation returns; every operation below is pure.
struct Raster {
    int width = 0;
    int height = 0;
    int bands = 0;
    std::vector<float> samples;
    GeoTransform geo;
    std::vector<std::string> band_ids;

    std::int64_t pixels() const { return static_cast<std::int64_t>(width) * height; }

    float at(int band, int y, int x) const {
        return samples[(static_cast<std::int64_t>(band) * height + y) * width + x];
    }
    float& at(int band, int y, int x) {
        return samples[(static_cast<std::int64_t>(band) * height + y) * width + x];
    }
    const float* band_data(int band) const { return samples.data() + band * pixels(); }
    float* band_data(int band) { return samples.data() + band * pixels(); }

    static Raster create(int width, int height, int bands, const GeoTransform& geo = {},
                         std::vector<std::string> band_ids = {});
};

// Stacks equally-sized single-band rasters into one raster; band order and
// ids follow the input order. Geotransforms must agree within 1e-6 map units.
Raster merge_bands(const std::vector<Raster>& bands);

std::vector<Raster> split_bands(const Raster& r);

// Sub-raster covering the AOI bounding box, snapped outward to whole pixels.
// The AOI must be given in the raster's map coordinates.
Raster crop_to_aoi(const Raster& r, const AoiPolygon& aoi);

enum class NormalizeMode { kZScore, kMinMax };

// Per-band normalization. A constant band under z-score is left unchanged and
// a warning is appended (when a sink is given) instead of failing the run.
Raster normalize(const Raster& r, NormalizeMode mode, Warnings* warnings = nullptr);

// ---------------------------------------------------------------------------
// Internal exchange format: <base>.hdr.json (width/height/bands/geotransform/
// band_ids/dtype) next to <base>.band.f32 or <base>.band.i32, little-endian,
// band-major. Round-trips samples bit-exactly.

enum class RasterDType { kFloat32, kInt32 };

void save_raster(const Raster& r, const std::string& base_path,
                 RasterDType dtype = RasterDType::kFloat32);

// Accepts "<base>", "<base>.hdr.json" or the data path.
Raster load_raster(const std::string& path);

struct RasterDims {
    int width = 0;
    int height = 0;
    int bands = 0;
};

// Cheap dimension probe (header only); understands .hdr.json and the TIFF
// subset. Used for manifest validation without loading pixel data.
RasterDims peek_raster_dims(const std::string& path);

// Dispatches on extension: .hdr.json / .band.f32 -> internal, else TIFF.
Raster load_raster_any(const std::string& path);

}  // namespace urbdiff
