#pragma once

#include <string>
#include <vector>

#include "urbdiff/geo.hpp"

namespace urbdiff {

// Loads the exterior ring of a single RFC 7946 Polygon. The geometry may be
// wrapped in a Feature or a one-feature FeatureCollection. Holes and
// MultiPolygon are rejected (UnsupportedFormat); structural problems raise
// ParseError. Coordinates are taken verbatim in (x, y) order.
AoiPolygon load_aoi_geojson(const std::string& path);
AoiPolygon parse_aoi_geojson(const std::string& text);

// Labeled map-coordinate points, from either geoJSON Point features (label in
// properties.label, 0/"urban" or 1/"nonurban") or CSV lines "x,y,label".
struct LabeledPoint {
    double x = 0.0;
    double y = 0.0;
    int label = 0;
};

std::vector<LabeledPoint> load_labeled_points(const std::string& path);

// WKT polygon text for query footprints: "POLYGON((x y, x y, ...))".
std::string to_wkt(const AoiPolygon& aoi);

}  // namespace urbdiff
