#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "urbdiff/errors.hpp"
#include "urbdiff/geo.hpp"

namespace urbdiff {

// Pixel counts with change (label 1) as the positive class.
struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
};

// A ratio that may be undefined (zero denominator). Never NaN.
struct Metric {
    std::optional<double> value;
    std::string reason;  // set when value is absent

    static Metric defined(double v) { return {v, {}}; }
    static Metric undefined(std::string why) { return {std::nullopt, std::move(why)}; }
};

struct ScoreReport {
    Confusion confusion;
    Metric overall_accuracy;
    Metric kappa;
    Metric recall;
    Metric precision;
    Metric f1;
};

// Exact counts over two equal-sized {0,1} maps. Non-binary values raise
// LabelError, dimension mismatch ShapeError.
Confusion confusion(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& truth,
                    int width, int height);

ScoreReport scores(const Confusion& c);

struct AreaStats {
    double area_m2 = 0.0;
    double fraction_of_total = 0.0;
    std::int64_t changed_pixels = 0;
};

AreaStats changed_area(const std::vector<std::uint8_t>& labels, int width, int height,
                       const GeoTransform& geo);

// JSON text with stable key order (confusion, metrics, then area when given).
std::string report_to_json(const ScoreReport& report, const AreaStats* area = nullptr);

}  // namespace urbdiff
