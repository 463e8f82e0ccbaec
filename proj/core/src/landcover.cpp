#include "urbdiff/landcover.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace urbdiff {

FeatureRows ingest_samples(const std::vector<LabeledPoint>& points, const GeoTransform& geo,
                           int width, int height, const SegmentMap& seg,
                           const SegmentFeatures& feat, std::vector<std::int32_t>* segments) {
    geo.validate();
    if (seg.width != width || seg.height != height)
        throw ShapeError("ingest_samples: segment map dimensions mismatch");
    if (feat.n_segments != seg.count)
        throw ShapeError("ingest_samples: feature table does not cover the segment map");
    if (points.empty()) throw SampleError("ingest_samples: no sample points");

    // Per-segment label tallies, ordered by segment id for determinism.
    std::map<std::int32_t, std::pair<std::int64_t, std::int64_t>> tally;
    for (const auto& p : points) {
        if (p.label != 0 && p.label != 1)
            throw LabelError("ingest_samples: point label must be 0 (urban) or 1 (nonurban)");
        const auto [col, row] = geo.map_to_pixel(p.x, p.y);
        const int px = static_cast<int>(std::floor(col));
        const int py = static_cast<int>(std::floor(row));
        if (px < 0 || px >= width || py < 0 || py >= height) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "sample point (%.6g, %.6g) falls outside the raster",
                          p.x, p.y);
            throw SampleError(buf);
        }
        const std::int32_t id = seg.labels[static_cast<std::size_t>(py) * width + px];
        auto& t = tally[id];
        (p.label ? t.second : t.first) += 1;
    }

    FeatureRows rows;
    rows.n_features = feat.n_features;
    if (segments) segments->clear();
    for (const auto& [id, counts] : tally) {
        const double* src = feat.row(id);
        rows.values.insert(rows.values.end(), src, src + feat.n_features);
        rows.labels.push_back(counts.second > counts.first ? 1 : 0);  // tie -> urban(0)
        if (segments) segments->push_back(id);
    }
    return rows;
}

std::vector<int> classify_segments(const Forest& forest, const SegmentFeatures& feat) {
    if (feat.n_features != forest.n_features)
        throw ShapeError("classify_segments: feature length " + std::to_string(feat.n_features) +
                         " does not match forest (" + std::to_string(forest.n_features) + ")");
    std::vector<int> out(feat.n_segments);
    for (int id = 0; id < feat.n_segments; ++id)
        out[id] = predict_forest(forest, feat.row(id), feat.n_features);
    return out;
}

Raster paint_labels(const SegmentMap& seg, const std::vector<int>& labels,
                    const GeoTransform& geo) {
    if (static_cast<int>(labels.size()) != seg.count)
        throw ShapeError("paint_labels: need one label per segment");
    Raster out = Raster::create(seg.width, seg.height, 1, geo, {"landcover"});
    for (std::int64_t i = 0; i < seg.pixels(); ++i)
        out.samples[i] = static_cast<float>(labels[seg.labels[i]]);
    return out;
}

}  // namespace urbdiff
