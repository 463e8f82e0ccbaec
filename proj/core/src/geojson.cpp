#include "urbdiff/geojson.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

using json = nlohmann::json;

namespace urbdiff {

namespace {

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    try {
        json j;
        f >> j;
        return j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

const json& unwrap_geometry(const json& root) {
    const json* node = &root;
    if (node->value("type", "") == "FeatureCollection") {
        const auto& features = node->at("features");
        if (features.size() != 1)
            throw UnsupportedFormat("expected exactly one feature, got " +
                                    std::to_string(features.size()));
        node = &features.at(0);
    }
    if (node->value("type", "") == "Feature") node = &node->at("geometry");
    return *node;
}

AoiPolygon polygon_from_geometry(const json& geom) {
    const std::string type = geom.value("type", "");
    if (type == "MultiPolygon") throw UnsupportedFormat("MultiPolygon AOI not supported");
    if (type != "Polygon") throw ParseError("expected Polygon geometry, got '" + type + "'");
    const auto& rings = geom.at("coordinates");
    if (rings.empty()) throw ParseError("Polygon has no rings");
    if (rings.size() > 1) throw UnsupportedFormat("Polygon holes not supported");
    AoiPolygon aoi;
    for (const auto& v : rings.at(0)) {
        if (!v.is_array() || v.size() < 2) throw ParseError("bad coordinate pair");
        aoi.ring.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    }
    aoi.validate();
    return aoi;
}

}  // namespace

AoiPolygon parse_aoi_geojson(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("geoJSON: ") + e.what());
    }
    try {
        return polygon_from_geometry(unwrap_geometry(root));
    } catch (const json::exception& e) {
        throw ParseError(std::string("geoJSON: ") + e.what());
    }
}

AoiPolygon load_aoi_geojson(const std::string& path) {
    const json root = read_json_file(path);
    try {
        return polygon_from_geometry(unwrap_geometry(root));
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

namespace {

int parse_label_value(const json& v) {
    if (v.is_number_integer()) {
        const int label = v.get<int>();
        if (label != 0 && label != 1) throw LabelError("point label must be 0 or 1");
        return label;
    }
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "urban") return 0;
        if (s == "nonurban") return 1;
        throw LabelError("point label must be 'urban' or 'nonurban', got '" + s + "'");
    }
    throw LabelError("point label must be an integer or string");
}

std::vector<LabeledPoint> points_from_geojson(const json& root, const std::string& path) {
    if (root.value("type", "") != "FeatureCollection")
        throw ParseError(path + ": expected a FeatureCollection of points");
    std::vector<LabeledPoint> out;
    for (const auto& feature : root.at("features")) {
        const auto& geom = feature.at("geometry");
        if (geom.value("type", "") != "Point")
            throw ParseError(path + ": expected Point geometry");
        const auto& coords = geom.at("coordinates");
        LabeledPoint p;
        p.x = coords.at(0).get<double>();
        p.y = coords.at(1).get<double>();
        const auto& props = feature.at("properties");
        if (!props.contains("label")) throw ParseError(path + ": point missing 'label'");
        p.label = parse_label_value(props.at("label"));
        out.push_back(p);
    }
    return out;
}

std::vector<LabeledPoint> points_from_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    std::vector<LabeledPoint> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        // skip an optional header line
        if (lineno == 1 && line.find_first_not_of("xylabe, \t_") == std::string::npos) continue;
        LabeledPoint p;
        char extra;
        if (std::sscanf(line.c_str(), "%lf ,%lf ,%d %c", &p.x, &p.y, &p.label, &extra) < 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'x,y,label'");
        if (p.label != 0 && p.label != 1)
            throw LabelError(path + ":" + std::to_string(lineno) + ": label must be 0 or 1");
        out.push_back(p);
    }
    return out;
}

}  // namespace

std::vector<LabeledPoint> load_labeled_points(const std::string& path) {
    if (path.ends_with(".json") || path.ends_with(".geojson"))
        return points_from_geojson(read_json_file(path), path);
    return points_from_csv(path);
}

std::string to_wkt(const AoiPolygon& aoi) {
    std::ostringstream os;
    os.precision(10);
    os << "POLYGON((";
    for (std::size_t i = 0; i < aoi.ring.size(); ++i) {
        if (i) os << ", ";
        os << aoi.ring[i].first << " " << aoi.ring[i].second;
    }
    os << "))";
    return os.str();
}

}  // namespace urbdiff
