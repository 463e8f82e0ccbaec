#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urbdiff/errors.hpp"
#include "urbdiff/raster.hpp"

namespace urbdiff {

struct SlicConfig {
    int n_segments = 1000;
    double compactness = 0.1;   // m: spatial weight relative to spectral
    int max_iters = 10;
    bool enforce_connectivity = true;

    void validate() const;  // ConfigError on violation
};

struct SegmentMap {
    int width = 0, height = 0;
    std::vector<std::int32_t> labels;    // dense ids in [0, count)
    int count = 0;
    std::vector<std::int64_t> sizes;      // per-id pixel counts

    std::int64_t pixels() const { return static_cast<std::int64_t>(width) * height; }
};

struct SlicStats {
    std::vector<double> energy;  // sum of squared distances after each iteration
    int iterations = 0;
};

// SLIC superpixels: grid-seeded k-means over (z-scored spectral, spatial)
// coordinates with distance D^2 = d_spec^2 + (d_spat/S)^2 * m^2, assignment
// windowed around each center, centers updated as means. The incumbent
// assignment always stays a candidate, which makes the recorded energy
// non-increasing across iterations. With enforce_connectivity, 4-connected
// fragments smaller than S^2/4 are merged into their largest neighbor.
SegmentMap slic(const Raster& r, const SlicConfig& cfg, SlicStats* stats = nullptr,
                Warnings* warnings = nullptr);

struct BandRoles {
    int red = -1;
    int nir = -1;
};

// Maps band ids like "B4"/"B04" (red) and "B8"/"B08" (nir) to indices;
// missing roles raise ConfigError.
BandRoles resolve_band_roles(const std::vector<std::string>& band_ids);

// Per-segment descriptors over the raw band values: mean and standard
// deviation per band, then mean NDVI = (nir - red)/(nir + red + 1e-6).
// Feature length is 2*bands + 1.
struct SegmentFeatures {
    int n_segments = 0;
    int n_features = 0;
    std::vector<double> values;           // row-major [segment][feature]
    std::vector<std::int64_t> sizes;

    const double* row(int segment) const { return values.data() + static_cast<std::size_t>(segment) * n_features; }
};

SegmentFeatures superpixel_features(const Raster& r, const SegmentMap& s, const BandRoles& roles);

// CSV exchange: header then one row per segment
// (segment_id, pixels, mean_<band>..., std_<band>..., ndvi_mean).
void save_features_csv(const SegmentFeatures& f, const std::string& path);
SegmentFeatures load_features_csv(const std::string& path);

}  // namespace urbdiff
