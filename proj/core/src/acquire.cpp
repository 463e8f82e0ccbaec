#include "urbdiff/acquire.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "urbdiff/geojson.hpp"

using json = nlohmann::json;

namespace urbdiff {

Date Date::parse(const std::string& iso) {
    Date d;
    char extra;
    if (std::sscanf(iso.c_str(), "%4d-%2d-%2d%c", &d.year, &d.month, &d.day, &extra) != 3 ||
        iso.size() != 10)
        throw ParseError("bad date '" + iso + "', expected YYYY-MM-DD");
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw ParseError("date out of range: '" + iso + "'");
    return d;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

bool Date::operator<=(const Date& o) const {
    if (year != o.year) return year < o.year;
    if (month != o.month) return month < o.month;
    return day <= o.day;
}

void AcquisitionQuery::validate() const {
    footprint.validate();
    if (!(date_start <= date_end)) throw ConfigError("date_start must not follow date_end");
    if (cloud_min < 0.0 || cloud_max > 100.0 || cloud_min > cloud_max)
        throw ConfigError("cloud bounds must satisfy 0 <= min <= max <= 100");
}

namespace {

std::string format_percent(double v) {
    // integers without trailing zeros, else plain decimal
    if (v == static_cast<long long>(v)) return std::to_string(static_cast<long long>(v));
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string build_query(const AcquisitionQuery& q) {
    q.validate();
    std::ostringstream os;
    os << "footprint:\"Intersects(" << to_wkt(q.footprint) << ")\""
       << " AND platformname:" << q.platform
       << " AND producttype:" << q.product_type
       << " AND beginposition:[" << q.date_start.iso() << "T00:00:00Z TO " << q.date_end.iso()
       << "T23:59:59Z]"
       << " AND cloudcoverpercentage:[" << format_percent(q.cloud_min) << " TO "
       << format_percent(q.cloud_max) << "]";
    return os.str();
}

namespace {

// The hub flattens one-entry lists to a bare object; normalize to an array.
std::vector<json> entry_list(const json& feed) {
    if (!feed.contains("entry")) return {};
    const json& e = feed.at("entry");
    if (e.is_array()) return std::vector<json>(e.begin(), e.end());
    return {e};
}

// Typed values arrive as [{"name": ..., "content": ...}] groups.
std::string named_content(const json& entry, const char* group, const std::string& name) {
    if (!entry.contains(group)) return {};
    const json& g = entry.at(group);
    auto scan = [&](const json& item) -> std::string {
        if (item.is_object() && item.value("name", "") == name && item.contains("content")) {
            const json& c = item.at("content");
            if (c.is_string()) return c.get<std::string>();
            return c.dump();
        }
        return {};
    };
    if (g.is_array()) {
        for (const auto& item : g) {
            std::string v = scan(item);
            if (!v.empty()) return v;
        }
        return {};
    }
    return scan(g);
}

}  // namespace

std::vector<ProductRecord> parse_products(const std::string& response_text, double cloud_max,
                                          Warnings* warnings) {
    json root;
    try {
        root = json::parse(response_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("catalog response: ") + e.what());
    }
    if (!root.contains("feed")) throw ParseError("catalog response: missing 'feed'");

    std::vector<ProductRecord> out;
    for (const json& entry : entry_list(root.at("feed"))) {
        ProductRecord rec;
        try {
            rec.id = entry.at("id").get<std::string>();
            const json& title = entry.at("title");
            rec.title = title.is_string() ? title.get<std::string>()
                                          : title.value("content", "");
        } catch (const json::exception& e) {
            throw ParseError(std::string("catalog entry: ") + e.what());
        }

        std::string begin = named_content(entry, "date", "beginposition");
        if (begin.size() < 10) throw ParseError("catalog entry " + rec.id + ": no beginposition");
        rec.sensing_date = Date::parse(begin.substr(0, 10));

        const std::string cloud = named_content(entry, "double", "cloudcoverpercentage");
        if (cloud.empty()) {
            if (warnings)
                warnings->push_back("entry " + rec.id + ": no cloud cover field; excluded");
            continue;
        }
        rec.cloud_cover = std::stod(cloud);
        if (rec.cloud_cover > cloud_max) continue;

        rec.footprint_wkt = named_content(entry, "str", "footprint");
        out.push_back(std::move(rec));
    }
    std::stable_sort(out.begin(), out.end(), [](const ProductRecord& a, const ProductRecord& b) {
        return !(b.sensing_date <= a.sensing_date);  // strict date <
    });
    return out;
}

std::vector<ProductRecord> load_products(const std::string& fixture_path, double cloud_max,
                                         Warnings* warnings) {
    std::ifstream f(fixture_path);
    if (!f) throw ParseError("cannot open " + fixture_path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_products(os.str(), cloud_max, warnings);
}

}  // namespace urbdiff
