#pragma once

#include <cstdint>
#include <vector>

#include "urbdiff/errors.hpp"
#include "urbdiff/raster.hpp"

namespace urbdiff {

// Dense per-pixel displacement defined on the reference grid: the moving
// image is sampled at (x + u, y + v).
struct FlowField {
    int width = 0, height = 0;
    std::vector<float> u, v;

    static FlowField zero(int width, int height) {
        FlowField f;
        f.width = width;
        f.height = height;
        f.u.assign(static_cast<std::size_t>(width) * height, 0.0f);
        f.v.assign(static_cast<std::size_t>(width) * height, 0.0f);
        return f;
    }
};

struct CoregConfig {
    int pyramid_levels = 4;
    int window_radius = 8;        // half-width of the least-squares window
    int iterations_per_level = 5;
    int rank_radius = 2;

    void validate() const;  // ConfigError on violation
};

// Replaces each pixel by the count of strictly smaller neighbors in its
// (2r+1)^2 window (edge replication at borders), scaled to [0,1] by
// (window size - 1). Invariant under strictly monotone intensity remaps.
std::vector<float> rank_filter(const std::vector<float>& img, int width, int height, int radius);

// One pyramid level of iterative windowed least squares: solves the 2x2
// normal equations G d = b per pixel with box-filtered window sums, updating
// the flow only where the smallest eigenvalue of G clears the conditioning
// threshold (1e-4 times the window pixel count).
FlowField flow_level(const std::vector<float>& ref, const std::vector<float>& mov, int width,
                     int height, FlowField init, const CoregConfig& cfg);

struct CoregResult {
    FlowField flow;
    Raster warped;
    std::vector<std::uint8_t> valid;  // 1 where no out-of-bounds sample was needed
};

// Full multiscale registration of mov onto ref: rank-filtered mean-band
// proxies, Gaussian pyramid coarse-to-fine with flow doubling between levels,
// then a bilinear warp of every band of mov.
CoregResult coregister(const Raster& ref, const Raster& mov, const CoregConfig& cfg);

// out(x,y) = img sampled at (x+u, y+v) per band; out-of-bounds reads clamp to
// the edge and clear the validity mask.
Raster warp_bilinear(const Raster& img, const FlowField& flow,
                     std::vector<std::uint8_t>* valid = nullptr);

}  // namespace urbdiff
