#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "urbdiff/errors.hpp"

namespace urbdiff {

// Affine pixel->map mapping (axis-aligned; no rotation terms).
// Map coordinates of the top-left corner of pixel (0,0) plus per-pixel scale.
// pixel_size_y is conventionally negative for north-up rasters.
struct GeoTransform {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size_x = 1.0;
    double pixel_size_y = -1.0;

    double pixel_area() const { return std::abs(pixel_size_x * pixel_size_y); }

    // col/row may be fractional; (0,0) maps to the origin corner.
    std::pair<double, double> pixel_to_map(double col, double row) const {
        return {origin_x + col * pixel_size_x, origin_y + row * pixel_size_y};
    }
    std::pair<double, double> map_to_pixel(double x, double y) const {
        return {(x - origin_x) / pixel_size_x, (y - origin_y) / pixel_size_y};
    }

    bool almost_equal(const GeoTransform& o, double tol) const {
        return std::abs(origin_x - o.origin_x) <= tol && std::abs(origin_y - o.origin_y) <= tol &&
               std::abs(pixel_size_x - o.pixel_size_x) <= tol &&
               std::abs(pixel_size_y - o.pixel_size_y) <= tol;
    }

    void validate() const {
        if (pixel_size_x == 0.0 || pixel_size_y == 0.0)
            throw ConfigError("geotransform pixel size must be nonzero");
    }
};

// Single closed exterior ring in map coordinates. Holes and multi-part
// polygons are rejected at parse time.
struct AoiPolygon {
    std::vector<std::pair<double, double>> ring;

    struct Bounds {
        double min_x, min_y, max_x, max_y;
    };

    Bounds bounds() const {
        Bounds b{ring.front().first, ring.front().second, ring.front().first,
                 ring.front().second};
        for (const auto& [x, y] : ring) {
            b.min_x = std::min(b.min_x, x);
            b.min_y = std::min(b.min_y, y);
            b.max_x = std::max(b.max_x, x);
            b.max_y = std::max(b.max_y, y);
        }
        return b;
    }

    // ring must be closed, have >= 4 vertices and a nondegenerate bbox
    void validate() const {
        if (ring.size() < 4) throw ParseError("AOI ring needs at least 4 vertices");
        if (ring.front() != ring.back()) throw ParseError("AOI ring is not closed");
        const Bounds b = bounds();
        if (!(b.max_x > b.min_x) || !(b.max_y > b.min_y))
            throw ParseError("AOI bounding box is degenerate");
    }
};

}  // namespace urbdiff
