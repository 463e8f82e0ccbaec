#pragma once

#include <string>

#include "urbdiff/raster.hpp"

namespace urbdiff {

// Reads one band from a baseline little-endian TIFF: uncompressed, strip
// organized, one sample per pixel, 8/16-bit unsigned or 32-bit float.
// Integer samples become floats without scaling. The geotransform comes from
// GeoTIFF tags 33550 (ModelPixelScale) and 33922 (ModelTiepoint); when both
// are absent an identity transform is assumed.
//
// Anything else is rejected loudly: malformed header -> ParseError,
// compression or tiling -> UnsupportedFormat, strips past EOF -> TruncatedFile.
Raster load_tiff_band(const std::string& path);

RasterDims peek_tiff_dims(const std::string& path);

}  // namespace urbdiff
