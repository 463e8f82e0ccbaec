#include "urbdiff/tiff.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace urbdiff {

namespace {

// Tag ids of the supported baseline subset.
enum : std::uint16_t {
    kImageWidth = 256,
    kImageLength = 257,
    kBitsPerSample = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kTileWidth = 322,
    kTileLength = 323,
    kTileOffsets = 324,
    kTileByteCounts = 325,
    kSampleFormat = 339,
    kModelPixelScale = 33550,
    kModelTiepoint = 33922,
};

struct Field {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::uint32_t value_or_offset = 0;  // raw 4 bytes from the entry
};

std::size_t type_size(std::uint16_t type) {
    switch (type) {
        case 1: return 1;   // BYTE
        case 2: return 1;   // ASCII
        case 3: return 2;   // SHORT
        case 4: return 4;   // LONG
        case 5: return 8;   // RATIONAL
        case 11: return 4;  // FLOAT
        case 12: return 8;  // DOUBLE
        default: return 0;
    }
}

class TiffFile {
public:
    explicit TiffFile(const std::string& path) : path_(path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw ParseError("cannot open " + path);
        buf_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        parse_header_and_ifd();
    }

    bool has(std::uint16_t tag) const { return fields_.count(tag) != 0; }

    // Scalar value of an integer-typed tag (first element).
    std::uint32_t scalar(std::uint16_t tag, std::uint32_t fallback) const {
        auto it = fields_.find(tag);
        if (it == fields_.end()) return fallback;
        return integer_at(it->second, 0);
    }

    std::uint32_t require_scalar(std::uint16_t tag, const char* name) const {
        auto it = fields_.find(tag);
        if (it == fields_.end()) throw ParseError(path_ + ": missing required tag " + name);
        return integer_at(it->second, 0);
    }

    std::vector<std::uint32_t> integers(std::uint16_t tag) const {
        auto it = fields_.find(tag);
        if (it == fields_.end()) return {};
        std::vector<std::uint32_t> out(it->second.count);
        for (std::uint32_t i = 0; i < it->second.count; ++i) out[i] = integer_at(it->second, i);
        return out;
    }

    std::vector<double> doubles(std::uint16_t tag) const {
        auto it = fields_.find(tag);
        if (it == fields_.end()) return {};
        const Field& f = it->second;
        if (f.type != 12) throw ParseError(path_ + ": tag " + std::to_string(tag) + " not DOUBLE");
        std::vector<double> out(f.count);
        const std::size_t off = data_offset(f);
        for (std::uint32_t i = 0; i < f.count; ++i) {
            double v;
            std::memcpy(&v, buf_.data() + off + i * 8, 8);
            out[i] = v;
        }
        return out;
    }

    const std::uint8_t* bytes_at(std::size_t offset, std::size_t length) const {
        if (offset + length > buf_.size())
            throw TruncatedFile(path_ + ": strip data extends past end of file");
        return buf_.data() + offset;
    }

    const std::string& path() const { return path_; }

private:
    void parse_header_and_ifd() {
        if (buf_.size() < 8) throw ParseError(path_ + ": too short for a TIFF header");
        if (buf_[0] == 'M' && buf_[1] == 'M')
            throw UnsupportedFormat(path_ + ": big-endian TIFF not supported");
        if (buf_[0] != 'I' || buf_[1] != 'I') throw ParseError(path_ + ": bad TIFF magic");
        if (u16(2) != 42) throw ParseError(path_ + ": bad TIFF version");
        const std::uint32_t ifd = u32(4);
        if (ifd < 8 || ifd + 2 > buf_.size()) throw ParseError(path_ + ": bad IFD offset");
        const std::uint16_t n = u16(ifd);
        if (ifd + 2 + std::size_t(n) * 12 + 4 > buf_.size())
            throw ParseError(path_ + ": IFD extends past end of file");
        for (std::uint16_t i = 0; i < n; ++i) {
            const std::size_t e = ifd + 2 + std::size_t(i) * 12;
            Field f;
            const std::uint16_t tag = u16(e);
            f.type = u16(e + 2);
            f.count = u32(e + 4);
            f.value_or_offset = u32(e + 8);
            fields_[tag] = f;
        }
    }

    std::uint16_t u16(std::size_t off) const {
        std::uint16_t v;
        std::memcpy(&v, buf_.data() + off, 2);
        return v;  // host is little-endian, same as the file
    }
    std::uint32_t u32(std::size_t off) const {
        std::uint32_t v;
        std::memcpy(&v, buf_.data() + off, 4);
        return v;
    }

    // Offset of a field's payload; inline when it fits in the 4 value bytes.
    std::size_t data_offset(const Field& f) const {
        const std::size_t total = type_size(f.type) * f.count;
        if (total == 0) throw ParseError(path_ + ": unsupported field type");
        if (total <= 4) {
            // payload lives inside the entry itself; recover its file offset
            // is impossible here, so inline values are handled by the caller
            // through integer_at(); doubles never fit inline.
        }
        if (f.value_or_offset + total > buf_.size())
            throw ParseError(path_ + ": field data out of range");
        return f.value_or_offset;
    }

    std::uint32_t integer_at(const Field& f, std::uint32_t index) const {
        if (index >= f.count) throw ParseError(path_ + ": field index out of range");
        const std::size_t elem = type_size(f.type);
        if (f.type != 3 && f.type != 4 && f.type != 1)
            throw ParseError(path_ + ": expected integer field");
        const std::size_t total = elem * f.count;
        if (total <= 4) {
            // inline: bytes live in value_or_offset (little-endian)
            std::uint8_t raw[4];
            std::memcpy(raw, &f.value_or_offset, 4);
            std::uint32_t v = 0;
            std::memcpy(&v, raw + index * elem, elem);
            return v;
        }
        const std::size_t off = f.value_or_offset + index * elem;
        if (off + elem > buf_.size()) throw ParseError(path_ + ": field data out of range");
        std::uint32_t v = 0;
        std::memcpy(&v, buf_.data() + off, elem);
        return v;
    }

    std::string path_;
    std::vector<std::uint8_t> buf_;
    std::map<std::uint16_t, Field> fields_;
};

GeoTransform geotransform_from(const TiffFile& t) {
    GeoTransform geo;
    const bool has_scale = t.has(kModelPixelScale);
    const bool has_tiepoint = t.has(kModelTiepoint);
    if (!has_scale && !has_tiepoint) return geo;  // identity fallback
    if (!has_scale || !has_tiepoint)
        throw ParseError(t.path() + ": GeoTIFF needs both ModelPixelScale and ModelTiepoint");
    const auto scale = t.doubles(kModelPixelScale);
    const auto tie = t.doubles(kModelTiepoint);
    if (scale.size() < 2 || tie.size() < 6)
        throw ParseError(t.path() + ": short GeoTIFF scale/tiepoint");
    // tiepoint: raster (i,j,k) pinned to map (x,y,z)
    geo.pixel_size_x = scale[0];
    geo.pixel_size_y = -scale[1];
    geo.origin_x = tie[3] - tie[0] * scale[0];
    geo.origin_y = tie[4] + tie[1] * scale[1];
    return geo;
}

}  // namespace

RasterDims peek_tiff_dims(const std::string& path) {
    TiffFile t(path);
    return {static_cast<int>(t.require_scalar(kImageWidth, "ImageWidth")),
            static_cast<int>(t.require_scalar(kImageLength, "ImageLength")), 1};
}

Raster load_tiff_band(const std::string& path) {
    TiffFile t(path);

    if (t.has(kTileWidth) || t.has(kTileLength) || t.has(kTileOffsets) || t.has(kTileByteCounts))
        throw UnsupportedFormat(path + ": tiled TIFF not supported");
    const std::uint32_t compression = t.scalar(kCompression, 1);
    if (compression != 1)
        throw UnsupportedFormat(path + ": compression " + std::to_string(compression) +
                                " not supported");
    const std::uint32_t spp = t.scalar(kSamplesPerPixel, 1);
    if (spp != 1) throw UnsupportedFormat(path + ": expected 1 sample per pixel, got " +
                                          std::to_string(spp));

    const std::uint32_t width = t.require_scalar(kImageWidth, "ImageWidth");
    const std::uint32_t height = t.require_scalar(kImageLength, "ImageLength");
    if (width == 0 || height == 0) throw ParseError(path + ": zero image dimensions");
    const std::uint32_t bits = t.scalar(kBitsPerSample, 1);
    const std::uint32_t format = t.scalar(kSampleFormat, 1);

    enum class Sample { kU8, kU16, kF32 } sample;
    if (format == 1 && bits == 8) sample = Sample::kU8;
    else if (format == 1 && bits == 16) sample = Sample::kU16;
    else if (format == 3 && bits == 32) sample = Sample::kF32;
    else
        throw UnsupportedFormat(path + ": sample format " + std::to_string(format) + "/" +
                                std::to_string(bits) + " bits not supported");
    const std::size_t bytes_per_sample = bits / 8;

    const auto offsets = t.integers(kStripOffsets);
    if (offsets.empty()) throw TruncatedFile(path + ": no strip offsets");
    auto counts = t.integers(kStripByteCounts);
    const std::uint32_t rows_per_strip = t.scalar(kRowsPerStrip, height);
    if (rows_per_strip == 0) throw ParseError(path + ": RowsPerStrip is zero");
    const std::size_t expected_strips = (height + rows_per_strip - 1) / rows_per_strip;
    if (offsets.size() < expected_strips)
        throw TruncatedFile(path + ": expected " + std::to_string(expected_strips) +
                            " strips, found " + std::to_string(offsets.size()));
    if (counts.empty()) {
        // tolerate a missing StripByteCounts by deriving from geometry
        counts.resize(offsets.size());
        for (std::size_t s = 0; s < offsets.size(); ++s) {
            const std::size_t rows =
                std::min<std::size_t>(rows_per_strip, height - s * rows_per_strip);
            counts[s] = static_cast<std::uint32_t>(rows * width * bytes_per_sample);
        }
    }

    Raster r;
    r.width = static_cast<int>(width);
    r.height = static_cast<int>(height);
    r.bands = 1;
    r.band_ids = {"band0"};
    r.geo = geotransform_from(t);
    r.samples.resize(static_cast<std::size_t>(width) * height);

    std::size_t row = 0;
    for (std::size_t s = 0; s < expected_strips; ++s) {
        const std::size_t rows = std::min<std::size_t>(rows_per_strip, height - row);
        const std::size_t need = rows * width * bytes_per_sample;
        if (counts[s] < need)
            throw TruncatedFile(path + ": strip " + std::to_string(s) + " holds " +
                                std::to_string(counts[s]) + " bytes, need " +
                                std::to_string(need));
        const std::uint8_t* src = t.bytes_at(offsets[s], need);
        float* dst = r.samples.data() + row * width;
        switch (sample) {
            case Sample::kU8:
                for (std::size_t i = 0; i < rows * width; ++i) dst[i] = src[i];
                break;
            case Sample::kU16:
                for (std::size_t i = 0; i < rows * width; ++i) {
                    std::uint16_t v;
                    std::memcpy(&v, src + i * 2, 2);
                    dst[i] = v;
                }
                break;
            case Sample::kF32:
                std::memcpy(dst, src, rows * width * 4);
                break;
        }
        row += rows;
    }
    return r;
}

}  // namespace urbdiff
