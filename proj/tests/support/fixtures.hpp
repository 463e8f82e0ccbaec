// Shared helpers for the test binaries: scratch directories, a minimal
// baseline-TIFF writer (with deliberate corruption knobs for error-path
// tests), synthetic image generators, and independent scoring oracles.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "urbdiff/dataset.hpp"
#include "urbdiff/metrics.hpp"
#include "urbdiff/raster.hpp"

namespace testutil {

// Scratch directory under the test runner's working directory. Recreated
// (emptied) on construction; contents are left behind for post-mortems.
class TempDir {
public:
    explicit TempDir(const std::string& name);
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Baseline TIFF writer. Produces the little-endian, strip-organized,
// single-sample subset the reader accepts, plus optional defects.

struct TiffSpec {
    int width = 0;
    int height = 0;
    enum class Kind { kU8, kU16, kF32 } kind = Kind::kU16;
    std::vector<double> samples;  // row-major, converted per kind

    bool with_geo = true;
    double scale_x = 10.0, scale_y = 10.0;
    double map_x = 500000.0, map_y = 1500000.0;  // map position of pixel (0,0)

    int rows_per_strip = 0;  // 0: one strip for the whole image

    // Defect knobs for error-path tests.
    bool corrupt_magic = false;       // first byte clobbered -> ParseError
    bool big_endian_magic = false;    // "MM" header -> UnsupportedFormat
    std::uint16_t compression = 1;    // !=1 -> UnsupportedFormat
    bool tiled = false;               // tile tags present -> UnsupportedFormat
    bool drop_last_strip = false;     // fewer strip offsets -> TruncatedFile
    bool strip_past_eof = false;      // offset beyond file end -> TruncatedFile
    bool omit_pixel_scale = false;    // tiepoint without scale -> ParseError
};

void write_tiff(const std::string& path, const TiffSpec& spec);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic imagery.

// Smooth random texture in [0,1]: white noise box-blurred `smooth` times.
// Smoothness matters for optical-flow tests (nonzero gradients everywhere).
std::vector<float> make_texture(int width, int height, std::uint64_t seed, int smooth = 2);

// Samples src at (x + dx, y + dy) bilinearly with edge clamping, so a
// positive (dx, dy) moves content up-left: recovering it needs flow (dx, dy).
std::vector<float> shift_image(const std::vector<float>& src, int width, int height, double dx,
                               double dy);

// Multi-band raster whose bands are independent textures.
urbdiff::Raster make_texture_raster(int width, int height, int bands, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Independent scoring oracle: per-pixel double loop, no shared code with the
// library implementation.

urbdiff::Confusion brute_confusion(const std::vector<std::uint8_t>& pred,
                                   const std::vector<std::uint8_t>& truth);

struct BruteScores {
    double oa, precision, recall, f1, kappa;
    bool precision_ok, recall_ok, f1_ok, kappa_ok;
};
BruteScores brute_scores(const urbdiff::Confusion& c);

// ---------------------------------------------------------------------------
// Separable change task: pairs where b equals a plus small noise, except in
// one random rectangle where every band of b is offset by `delta`. The
// rectangle is the change region, so the labels are recoverable from the
// band difference alone.

std::vector<urbdiff::PatchPair> make_separable_patches(int count, int bands, int patch,
                                                       std::uint64_t seed, double delta = 2.0);

// ---------------------------------------------------------------------------
// Dataset tree builder: OSCD-style directory layout with 13 band TIFFs per
// epoch, a label mask, and train/test split lists.

struct TreeSpec {
    std::vector<std::string> train_regions;
    std::vector<std::string> test_regions;
    int width = 48;
    int height = 48;
    std::uint64_t seed = 1;
    double change_fraction = 0.1;  // share of label pixels set to 1 (value 2 on disk)
};

void make_dataset_tree(const std::filesystem::path& root, const TreeSpec& spec);

}  // namespace testutil
