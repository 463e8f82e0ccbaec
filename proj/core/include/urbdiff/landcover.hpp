#pragma once

#include <cstdint>
#include <vector>

#include "urbdiff/errors.hpp"
#include "urbdiff/forest.hpp"
#include "urbdiff/geojson.hpp"
#include "urbdiff/slic.hpp"

namespace urbdiff {

// Maps labeled sample points (map coordinates; urban = 0, nonurban = 1) to
// their segments' feature vectors. Points sharing a segment collapse to one
// row carrying the majority label (tie -> 0). Points outside the raster
// extent raise SampleError naming the point. When `segments` is given it
// receives the segment id behind each emitted row.
FeatureRows ingest_samples(const std::vector<LabeledPoint>& points, const GeoTransform& geo,
                           int width, int height, const SegmentMap& seg,
                           const SegmentFeatures& feat,
                           std::vector<std::int32_t>* segments = nullptr);

// One forest prediction per segment; feature length must match the forest.
std::vector<int> classify_segments(const Forest& forest, const SegmentFeatures& feat);

// Paints each pixel with its segment's class, producing a single-band raster.
Raster paint_labels(const SegmentMap& seg, const std::vector<int>& labels,
                    const GeoTransform& geo);

}  // namespace urbdiff
