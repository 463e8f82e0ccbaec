#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "fixtures.hpp"
#include "urbdiff/geojson.hpp"
#include "urbdiff/raster.hpp"
#include "urbdiff/rng.hpp"
#include "urbdiff/tiff.hpp"

using namespace urbdiff;
using testutil::TempDir;
using testutil::TiffSpec;
using testutil::write_tiff;
using testutil::write_text;

namespace {

TiffSpec tiny_u16() {
    TiffSpec s;
    s.width = 2;
    s.height = 2;
    s.kind = TiffSpec::Kind::kU16;
    s.samples = {0, 1, 2, 3};
    return s;
}

}  // namespace

TEST_CASE("tiff: 2x2 uint16 with geo tags decodes values and geotransform") {
    TempDir tmp("raster_tiff_basic");
    const std::string path = tmp.file("tiny.tif");
    write_tiff(path, tiny_u16());

    const Raster r = load_tiff_band(path);
    CHECK(r.width == 2);
    CHECK(r.height == 2);
    CHECK(r.bands == 1);
    CHECK(r.samples == std::vector<float>{0.0f, 1.0f, 2.0f, 3.0f});
    CHECK(r.geo.pixel_size_x == doctest::Approx(10.0));
    CHECK(r.geo.pixel_size_y == doctest::Approx(-10.0));
    CHECK(r.geo.origin_x == doctest::Approx(500000.0));
    CHECK(r.geo.origin_y == doctest::Approx(1500000.0));
    CHECK(r.geo.pixel_area() == doctest::Approx(100.0));
}

TEST_CASE("tiff: uint8 and float32 sample formats decode") {
    TempDir tmp("raster_tiff_kinds");
    {
        TiffSpec s = tiny_u16();
        s.kind = TiffSpec::Kind::kU8;
        s.samples = {7, 0, 255, 128};
        write_tiff(tmp.file("u8.tif"), s);
        const Raster r = load_tiff_band(tmp.file("u8.tif"));
        CHECK(r.samples == std::vector<float>{7.0f, 0.0f, 255.0f, 128.0f});
    }
    {
        TiffSpec s = tiny_u16();
        s.kind = TiffSpec::Kind::kF32;
        s.samples = {0.5, -1.25, 3.75, 1e6};
        write_tiff(tmp.file("f32.tif"), s);
        const Raster r = load_tiff_band(tmp.file("f32.tif"));
        CHECK(r.samples == std::vector<float>{0.5f, -1.25f, 3.75f, 1e6f});
    }
}

TEST_CASE("tiff: multi-strip layout decodes identically to single strip") {
    TempDir tmp("raster_tiff_strips");
    TiffSpec s;
    s.width = 3;
    s.height = 4;
    s.samples.resize(12);
    for (int i = 0; i < 12; ++i) s.samples[i] = i * 10;
    write_tiff(tmp.file("one.tif"), s);
    s.rows_per_strip = 1;
    write_tiff(tmp.file("many.tif"), s);
    CHECK(load_tiff_band(tmp.file("one.tif")).samples ==
          load_tiff_band(tmp.file("many.tif")).samples);
}

TEST_CASE("tiff: missing geo tags fall back to the identity geotransform") {
    TempDir tmp("raster_tiff_nogeo");
    TiffSpec s = tiny_u16();
    s.with_geo = false;
    write_tiff(tmp.file("nogeo.tif"), s);
    const Raster r = load_tiff_band(tmp.file("nogeo.tif"));
    CHECK(r.geo.origin_x == 0.0);
    CHECK(r.geo.pixel_size_x == 1.0);
    CHECK(r.geo.pixel_size_y == -1.0);
}

TEST_CASE("tiff: 600x600 uint16 band file decodes at full size") {
    TempDir tmp("raster_tiff_large");
    TiffSpec s;
    s.width = 600;
    s.height = 600;
    s.samples.resize(600 * 600);
    for (std::size_t i = 0; i < s.samples.size(); ++i) s.samples[i] = i % 4001;
    write_tiff(tmp.file("band.tif"), s);
    const Raster r = load_tiff_band(tmp.file("band.tif"));
    CHECK(r.width == 600);
    CHECK(r.height == 600);
    CHECK(r.bands == 1);
    CHECK(r.samples[0] == 0.0f);
    CHECK(r.samples[4000] == 4000.0f);
    CHECK(r.samples[4001] == 0.0f);
}

TEST_CASE("tiff: malformed and unsupported files raise the right errors") {
    TempDir tmp("raster_tiff_errors");
    SUBCASE("corrupted magic") {
        TiffSpec s = tiny_u16();
        s.corrupt_magic = true;
        write_tiff(tmp.file("bad.tif"), s);
        CHECK_THROWS_AS(load_tiff_band(tmp.file("bad.tif")), ParseError);
    }
    SUBCASE("big-endian") {
        TiffSpec s = tiny_u16();
        s.big_endian_magic = true;
        write_tiff(tmp.file("be.tif"), s);
        CHECK_THROWS_AS(load_tiff_band(tmp.file("be.tif")), UnsupportedFormat);
    }
    SUBCASE("compressed") {
        TiffSpec s = tiny_u16();
        s.compression = 5;
        write_tiff(tmp.file("lzw.tif"), s);
        CHECK_THROWS_AS(load_tiff_band(tmp.file("lzw.tif")), UnsupportedFormat);
    }
    SUBCASE("tiled") {
        TiffSpec s = tiny_u16();
        s.tiled = true;
        write_tiff(tmp.file("tiled.tif"), s);
        CHECK_THROWS_AS(load_tiff_band(tmp.file("tiled.tif")), UnsupportedFormat);
    }
    SUBCASE("missing strip") {
        TiffSpec s;
        s.width = 2;
        s.height = 4;
        s.samples = {0, 1, 2, 3, 4, 5, 6, 7};
        s.rows_per_strip = 2;
        s.drop_last_strip = true;
        write_tiff(tmp.file("short.tif"), s);
        CHECK_THROWS_AS(load_tiff_band(tmp.file("short.tif")), TruncatedFile);
    }
    SUBCASE("strip data past end of file") {
        TiffSpec s = tiny_u16();
        s.strip_past_eof = true;
        write_tiff(tmp.file("eof.tif"), s);
        CHECK_THROWS_AS(load_tiff_band(tmp.file("eof.tif")), TruncatedFile);
    }
    SUBCASE("tiepoint without pixel scale") {
        TiffSpec s = tiny_u16();
        s.omit_pixel_scale = true;
        write_tiff(tmp.file("halfgeo.tif"), s);
        CHECK_THROWS_AS(load_tiff_band(tmp.file("halfgeo.tif")), ParseError);
    }
    SUBCASE("nonexistent file") {
        CHECK_THROWS_AS(load_tiff_band(tmp.file("absent.tif")), ParseError);
    }
}

TEST_CASE("tiff: peek_tiff_dims reads dimensions only") {
    TempDir tmp("raster_tiff_peek");
    TiffSpec s;
    s.width = 17;
    s.height = 9;
    s.samples.assign(17 * 9, 0.0);
    write_tiff(tmp.file("p.tif"), s);
    const RasterDims d = peek_tiff_dims(tmp.file("p.tif"));
    CHECK(d.width == 17);
    CHECK(d.height == 9);
    CHECK(d.bands == 1);
}

TEST_CASE("merge_bands: stacks in input order and keeps band ids") {
    GeoTransform geo;
    geo.pixel_size_x = 10.0;
    geo.pixel_size_y = -10.0;
    std::vector<Raster> bands;
    for (const char* id : {"B2", "B3", "B4", "B8"}) {
        Raster b = Raster::create(5, 4, 1, geo, {id});
        for (auto& v : b.samples) v = static_cast<float>(id[1] - '0');
        bands.push_back(std::move(b));
    }
    const Raster m = merge_bands(bands);
    CHECK(m.bands == 4);
    CHECK(m.width == 5);
    CHECK(m.height == 4);
    CHECK(m.band_ids == std::vector<std::string>{"B2", "B3", "B4", "B8"});
    CHECK(m.at(0, 0, 0) == 2.0f);
    CHECK(m.at(3, 3, 4) == 8.0f);

    SUBCASE("single band is the identity") {
        const Raster one = merge_bands({bands[0]});
        CHECK(one.samples == bands[0].samples);
        CHECK(one.band_ids == bands[0].band_ids);
    }
    SUBCASE("width mismatch rejected") {
        bands.push_back(Raster::create(6, 4, 1, geo, {"B9"}));
        CHECK_THROWS_AS(merge_bands(bands), AlignmentError);
    }
    SUBCASE("geotransform mismatch beyond tolerance rejected") {
        Raster off = Raster::create(5, 4, 1, geo, {"B9"});
        off.geo.origin_x += 0.01;
        bands.push_back(std::move(off));
        CHECK_THROWS_AS(merge_bands(bands), AlignmentError);
    }
    SUBCASE("split then merge round-trips exactly") {
        const Raster again = merge_bands(split_bands(m));
        CHECK(again.samples == m.samples);
        CHECK(again.band_ids == m.band_ids);
    }
}

TEST_CASE("crop_to_aoi: bbox crop with origin update") {
    GeoTransform geo;
    geo.origin_x = 0.0;
    geo.origin_y = 1000.0;
    geo.pixel_size_x = 10.0;
    geo.pixel_size_y = -10.0;
    Raster r = Raster::create(100, 100, 1, geo);
    for (int y = 0; y < 100; ++y)
        for (int x = 0; x < 100; ++x) r.at(0, y, x) = static_cast<float>(y * 100 + x);

    SUBCASE("interior box snaps to whole pixels") {
        // x in [100, 300) -> columns 10..29; rows 2..5 -> map y in (950, 980]
        AoiPolygon aoi;
        aoi.ring = {{100, 950}, {300, 950}, {300, 980}, {100, 980}, {100, 950}};
        const Raster c = crop_to_aoi(r, aoi);
        CHECK(c.width == 20);
        CHECK(c.height == 3);
        CHECK(c.geo.origin_x == doctest::Approx(100.0));
        CHECK(c.geo.origin_y == doctest::Approx(980.0));
        CHECK(c.at(0, 0, 0) == r.at(0, 2, 10));
        CHECK(c.geo.pixel_area() == r.geo.pixel_area());

        SUBCASE("idempotent under the same AOI") {
            const Raster c2 = crop_to_aoi(c, aoi);
            CHECK(c2.width == c.width);
            CHECK(c2.height == c.height);
            CHECK(c2.samples == c.samples);
            CHECK(c2.geo.almost_equal(c.geo, 0.0));
        }
    }
    SUBCASE("full-extent AOI returns the identical raster") {
        AoiPolygon aoi;
        aoi.ring = {{0, 0}, {1000, 0}, {1000, 1000}, {0, 1000}, {0, 0}};
        const Raster c = crop_to_aoi(r, aoi);
        CHECK(c.width == 100);
        CHECK(c.height == 100);
        CHECK(c.samples == r.samples);
    }
    SUBCASE("empty intersection raises OutOfBounds") {
        AoiPolygon aoi;
        aoi.ring = {{5000, 5000}, {6000, 5000}, {6000, 6000}, {5000, 6000}, {5000, 5000}};
        CHECK_THROWS_AS(crop_to_aoi(r, aoi), OutOfBounds);
    }
    SUBCASE("59.78 km2 study-area box covers the expected pixel area") {
        // 59.78e6 m2 at 10 m pixels = 597800 px; a 940x636 box has 597840,
        // within one pixel row (940 px * 100 m2) of the target.
        GeoTransform g2;
        g2.pixel_size_x = 10.0;
        g2.pixel_size_y = -10.0;
        g2.origin_y = 10000.0;
        const Raster big = Raster::create(1000, 1000, 1, g2);
        AoiPolygon aoi;
        aoi.ring = {{0, 10000 - 6360}, {9400, 10000 - 6360}, {9400, 10000}, {0, 10000},
                    {0, 10000 - 6360}};
        const Raster c = crop_to_aoi(big, aoi);
        const double area = static_cast<double>(c.width) * c.height * c.geo.pixel_area();
        CHECK(std::abs(area - 59.78e6) <= 940 * 100.0);
    }
}

TEST_CASE("normalize: min-max and z-score agree with hand arithmetic") {
    Raster r = Raster::create(2, 2, 1);
    r.samples = {0, 2, 4, 6};
    const Raster mm = normalize(r, NormalizeMode::kMinMax);
    CHECK(mm.samples[0] == doctest::Approx(0.0));
    CHECK(mm.samples[1] == doctest::Approx(1.0 / 3.0));
    CHECK(mm.samples[2] == doctest::Approx(2.0 / 3.0));
    CHECK(mm.samples[3] == doctest::Approx(1.0));

    Raster two = Raster::create(2, 1, 1);
    two.samples = {1, 3};
    const Raster z = normalize(two, NormalizeMode::kZScore);
    CHECK(z.samples[0] == doctest::Approx(-1.0));
    CHECK(z.samples[1] == doctest::Approx(1.0));
}

TEST_CASE("normalize: z-score leaves random data with zero mean unit variance") {
    Raster r = Raster::create(64, 64, 1);
    const auto tex = testutil::make_texture(64, 64, 99, 0);
    for (std::size_t i = 0; i < tex.size(); ++i) r.samples[i] = tex[i] * 500.0f + 100.0f;
    const Raster z = normalize(r, NormalizeMode::kZScore);
    double sum = 0.0, sum2 = 0.0;
    for (float v : z.samples) {
        sum += v;
        sum2 += static_cast<double>(v) * v;
    }
    const double mean = sum / z.samples.size();
    const double var = sum2 / z.samples.size() - mean * mean;
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-5);
}

TEST_CASE("normalize: constant band under z-score warns and stays unchanged") {
    Raster r = Raster::create(3, 3, 2);
    for (int i = 0; i < 9; ++i) r.band_data(0)[i] = 5.0f;
    for (int i = 0; i < 9; ++i) r.band_data(1)[i] = static_cast<float>(i);
    Warnings w;
    const Raster z = normalize(r, NormalizeMode::kZScore, &w);
    REQUIRE(w.size() == 1);
    for (int i = 0; i < 9; ++i) CHECK(z.band_data(0)[i] == 5.0f);
    CHECK(z.band_data(1)[0] != r.band_data(1)[0]);
}

TEST_CASE("internal format: float32 and int32 round-trips are bit-exact") {
    TempDir tmp("raster_internal");
    GeoTransform geo;
    geo.origin_x = 123.5;
    geo.origin_y = -77.25;
    geo.pixel_size_x = 10.0;
    geo.pixel_size_y = -10.0;
    Raster r = Raster::create(7, 5, 3, geo, {"B2", "B3", "B4"});
    urbdiff::Rng rng(4);
    for (auto& v : r.samples) v = static_cast<float>(rng.next_normal() * 1e3);

    save_raster(r, tmp.file("scene"));
    const Raster back = load_raster(tmp.file("scene"));
    CHECK(back.width == r.width);
    CHECK(back.height == r.height);
    CHECK(back.bands == r.bands);
    CHECK(back.samples == r.samples);  // bit-exact
    CHECK(back.band_ids == r.band_ids);
    CHECK(back.geo.almost_equal(r.geo, 0.0));

    SUBCASE("save-load-save produces identical bytes") {
        save_raster(back, tmp.file("again"));
        CHECK(testutil::read_text(tmp.file("again.band.f32")) ==
              testutil::read_text(tmp.file("scene.band.f32")));
    }
    SUBCASE("int32 dtype round-trips whole values") {
        Raster ints = Raster::create(4, 4, 1);
        for (int i = 0; i < 16; ++i) ints.samples[i] = static_cast<float>(i - 8);
        save_raster(ints, tmp.file("ids"), RasterDType::kInt32);
        const Raster back_i = load_raster(tmp.file("ids"));
        CHECK(back_i.samples == ints.samples);
    }
    SUBCASE("load_raster_any dispatches on the path suffix") {
        const Raster via_any = load_raster_any(tmp.file("scene.hdr.json"));
        CHECK(via_any.samples == r.samples);
    }
    SUBCASE("truncated payload raises TruncatedFile") {
        const std::string data = testutil::read_text(tmp.file("scene.band.f32"));
        write_text(tmp.file("scene.band.f32"), data.substr(0, data.size() / 2));
        CHECK_THROWS_AS(load_raster(tmp.file("scene")), TruncatedFile);
    }
}

TEST_CASE("geojson: polygon AOI parses from bare, feature, and collection forms") {
    const char* bare = R"({"type":"Polygon","coordinates":[[[0,0],[4,0],[4,3],[0,3],[0,0]]]})";
    const AoiPolygon a = parse_aoi_geojson(bare);
    REQUIRE(a.ring.size() == 5);
    CHECK(a.ring[1] == std::pair<double, double>{4.0, 0.0});
    const auto b = a.bounds();
    CHECK(b.min_x == 0.0);
    CHECK(b.max_x == 4.0);
    CHECK(b.max_y == 3.0);

    TempDir tmp("raster_geojson");
    const std::string fixture =
        std::string(URBDIFF_TEST_FIXTURES) + "/aoi/mekelle_box.geojson";
    const AoiPolygon fc = load_aoi_geojson(fixture);
    CHECK(fc.ring.size() == 5);
    CHECK(fc.ring[0] == std::pair<double, double>{39.41, 13.42});

    CHECK(to_wkt(a) == "POLYGON((0 0, 4 0, 4 3, 0 3, 0 0))");
}

TEST_CASE("geojson: unsupported and malformed AOIs raise typed errors") {
    CHECK_THROWS_AS(
        parse_aoi_geojson(R"({"type":"MultiPolygon","coordinates":[]})"),
        UnsupportedFormat);
    CHECK_THROWS_AS(parse_aoi_geojson(R"({"type":"Polygon","coordinates":[
        [[0,0],[4,0],[4,3],[0,3],[0,0]],
        [[1,1],[2,1],[2,2],[1,2],[1,1]]]})"),
                    UnsupportedFormat);  // holes
    CHECK_THROWS_AS(parse_aoi_geojson(R"({"type":"Point","coordinates":[0,0]})"), ParseError);
    CHECK_THROWS_AS(parse_aoi_geojson(R"({"type":"Polygon","coordinates":[
        [[0,0],[4,0],[4,3]]]})"),
                    ParseError);  // open / too short ring
    CHECK_THROWS_AS(parse_aoi_geojson("not json at all"), ParseError);
}

TEST_CASE("geojson: labeled points load from geoJSON and CSV") {
    TempDir tmp("raster_points");
    write_text(tmp.file("pts.geojson"), R"({
      "type": "FeatureCollection",
      "features": [
        {"type":"Feature","properties":{"label":0},
         "geometry":{"type":"Point","coordinates":[10.5, 20.5]}},
        {"type":"Feature","properties":{"label":"nonurban"},
         "geometry":{"type":"Point","coordinates":[30.0, 40.0]}}
      ]})");
    const auto pts = load_labeled_points(tmp.file("pts.geojson"));
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].x == 10.5);
    CHECK(pts[0].label == 0);
    CHECK(pts[1].label == 1);

    write_text(tmp.file("pts.csv"), "x,y,label\n1.5,2.5,0\n3.5,4.5,1\n");
    const auto csv = load_labeled_points(tmp.file("pts.csv"));
    REQUIRE(csv.size() == 2);
    CHECK(csv[1].y == 4.5);
    CHECK(csv[1].label == 1);

    write_text(tmp.file("bad.csv"), "1.0,2.0,7\n");
    CHECK_THROWS_AS(load_labeled_points(tmp.file("bad.csv")), LabelError);
    write_text(tmp.file("junk.csv"), "not,numbers,here\n");
    CHECK_THROWS_AS(load_labeled_points(tmp.file("junk.csv")), ParseError);
}
