#pragma once

#include <string>
#include <vector>

#include "urbdiff/geo.hpp"

namespace urbdiff {

// Calendar date (UTC). Only what query building needs.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    static Date parse(const std::string& iso);  // "YYYY-MM-DD"
    std::string iso() const;
    bool operator<=(const Date& o) const;
    bool operator==(const Date& o) const = default;
};

struct AcquisitionQuery {
    AoiPolygon footprint;
    Date date_start;
    Date date_end;
    std::string platform = "Sentinel-2";
    std::string product_type = "S2MSI1C";
    double cloud_min = 0.0;
    double cloud_max = 20.0;

    void validate() const;
};

struct ProductRecord {
    std::string id;
    std::string title;
    Date sensing_date;
    double cloud_cover = 0.0;
    std::string footprint_wkt;
};

// Deterministic OpenSearch-style query text for the product catalog. Pure:
// identical inputs yield byte-identical output. URL-encoding is the fetch
// boundary's business, not this function's.
std::string build_query(const AcquisitionQuery& q);

// Parses a recorded catalog response (the hub's JSON feed shape), drops
// entries whose cloud cover exceeds cloud_max or is missing (with a warning),
// and returns the remainder sorted by sensing date ascending.
std::vector<ProductRecord> parse_products(const std::string& response_text, double cloud_max,
                                          Warnings* warnings = nullptr);

std::vector<ProductRecord> load_products(const std::string& fixture_path, double cloud_max,
                                         Warnings* warnings = nullptr);

}  // namespace urbdiff
