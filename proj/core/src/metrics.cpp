#include "urbdiff/metrics.hpp"

#include <nlohmann/json.hpp>

using ordered_json = nlohmann::ordered_json;

namespace urbdiff {

Confusion confusion(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& truth,
                    int width, int height) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (width <= 0 || height <= 0 || pred.size() != n || truth.size() != n)
        throw ShapeError("confusion: map dimensions mismatch");
    Confusion c;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t p = pred[i], t = truth[i];
        if (p > 1 || t > 1)
            throw LabelError("confusion: maps must be binary, found value " +
                             std::to_string(int(p > 1 ? p : t)));
        if (t) {
            if (p) ++c.tp;
            else ++c.fn;
        } else {
            if (p) ++c.fp;
            else ++c.tn;
        }
    }
    return c;
}

ScoreReport scores(const Confusion& c) {
    const double n = static_cast<double>(c.total());
    if (!(n > 0)) throw ShapeError("scores: empty confusion matrix");

    ScoreReport r;
    r.confusion = c;
    r.overall_accuracy = Metric::defined((c.tp + c.tn) / n);

    const double p_o = (c.tp + c.tn) / n;
    const double p_e = (static_cast<double>(c.tp + c.fp) * (c.tp + c.fn) +
                        static_cast<double>(c.fn + c.tn) * (c.fp + c.tn)) /
                       (n * n);
    if (1.0 - p_e == 0.0)
        r.kappa = Metric::undefined("undefined (expected agreement is 1; single class)");
    else
        r.kappa = Metric::defined((p_o - p_e) / (1.0 - p_e));

    if (c.tp + c.fn == 0)
        r.recall = Metric::undefined("undefined (no actual positives)");
    else
        r.recall = Metric::defined(static_cast<double>(c.tp) / (c.tp + c.fn));

    if (c.tp + c.fp == 0)
        r.precision = Metric::undefined("undefined (no predicted positives)");
    else
        r.precision = Metric::defined(static_cast<double>(c.tp) / (c.tp + c.fp));

    if (r.precision.value && r.recall.value) {
        const double p = *r.precision.value, rec = *r.recall.value;
        if (p + rec == 0.0)
            r.f1 = Metric::undefined("undefined (precision + recall is zero)");
        else
            r.f1 = Metric::defined(2.0 * p * rec / (p + rec));
    } else {
        r.f1 = Metric::undefined("undefined (precision or recall undefined)");
    }
    return r;
}

AreaStats changed_area(const std::vector<std::uint8_t>& labels, int width, int height,
                       const GeoTransform& geo) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (width <= 0 || height <= 0 || labels.size() != n)
        throw ShapeError("changed_area: map dimensions mismatch");
    AreaStats s;
    for (std::uint8_t v : labels) s.changed_pixels += (v != 0);
    s.area_m2 = static_cast<double>(s.changed_pixels) * geo.pixel_area();
    s.fraction_of_total = static_cast<double>(s.changed_pixels) / static_cast<double>(n);
    return s;
}

namespace {

void emit_metric(ordered_json& j, const char* key, const Metric& m) {
    if (m.value) j[key] = *m.value;
    else j[key] = m.reason;
}

}  // namespace

std::string report_to_json(const ScoreReport& report, const AreaStats* area) {
    ordered_json j;
    j["confusion"] = {{"tp", report.confusion.tp},
                      {"fp", report.confusion.fp},
                      {"fn", report.confusion.fn},
                      {"tn", report.confusion.tn},
                      {"total", report.confusion.total()}};
    emit_metric(j, "overall_accuracy", report.overall_accuracy);
    emit_metric(j, "kappa", report.kappa);
    emit_metric(j, "recall", report.recall);
    emit_metric(j, "precision", report.precision);
    emit_metric(j, "f1", report.f1);
    if (area) {
        j["area"] = {{"changed_pixels", area->changed_pixels},
                     {"area_m2", area->area_m2},
                     {"fraction_of_total", area->fraction_of_total}};
    }
    return j.dump(2);
}

}  // namespace urbdiff
