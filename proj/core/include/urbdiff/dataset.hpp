#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urbdiff/errors.hpp"
#include "urbdiff/raster.hpp"

namespace urbdiff {

enum class Split { kTrain, kTest };

const char* split_name(Split s);
Split parse_split(const std::string& name);  // "train" | "test"

// One labeled scene pair: 13 per-band files for each date plus a change mask.
struct ManifestEntry {
    std::string name;
    Split split = Split::kTrain;
    std::vector<std::string> t1_bands;  // resolved paths, one file per band
    std::vector<std::string> t2_bands;
    std::string label_path;
    int width = 0;   // validated on load
    int height = 0;
};

struct Manifest {
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> split_entries(Split s) const;
};

// JSON schema:
//   { "format_version": 1,
//     "regions": [ { "name": "...", "split": "train"|"test",
//                    "t1": [13 paths], "t2": [13 paths],
//                    "label": "path" }, ... ] }
// Relative paths are resolved against the manifest's directory. Every
// referenced file must exist, be single-band, and agree on dimensions within
// its region; violations raise ManifestError naming the region and path.
Manifest load_manifest(const std::string& path);

// Writes the schema above; paths are stored relative to the manifest's
// directory when possible.
void save_manifest(const Manifest& m, const std::string& path);

// Builds a manifest from a directory tree laid out as
//   root/<region>/imgs_1/*B<nn>*.tif, root/<region>/imgs_2/..., plus a change
//   mask under root/<region>/cm/. Region splits come from root/train.txt and
//   root/test.txt (comma- or newline-separated names); absent both, all
//   regions are marked train and a warning is recorded.
Manifest scan_dataset_tree(const std::string& root, Warnings* warnings = nullptr);

// A pair of aligned patches with its binary change mask. Band-major layout,
// matching Raster.
struct PatchPair {
    int bands = 0;
    int size = 0;                      // square side p
    std::vector<float> a, b;           // bands * p * p
    std::vector<std::uint8_t> label;   // p * p, values {0,1}
    std::string region;
    int off_x = 0, off_y = 0;
};

// A region pair loaded for sampling: bands z-score normalized per band over
// the full region, labels binarized (any nonzero source value -> 1).
struct RegionData {
    std::string name;
    int width = 0, height = 0, bands = 0;
    std::vector<float> a, b;
    std::vector<std::uint8_t> label;
};

RegionData load_region(const ManifestEntry& e, Warnings* warnings = nullptr);

struct SampleOptions {
    int patch = 32;
    int count = 128;
    double balance_fraction = 0.5;  // share of draws required to contain change
    std::uint64_t seed = 0;
    bool augment = false;           // apply a random dihedral transform per draw
};

// Draws `count` patch pairs from the regions of `split`. Offsets are uniform;
// a balance_fraction share is redrawn (bounded attempts, then directed at a
// change pixel) until the window holds at least one change pixel. Fully
// deterministic under the seed. Raises BalanceError when balance_fraction > 0
// but the split contains no change pixels at all, and SampleError when no
// region of the split can fit the patch.
std::vector<PatchPair> sample_patches(const Manifest& m, Split split, const SampleOptions& opts,
                                      Warnings* warnings = nullptr);

// The 8 dihedral symmetries of the square. Element t = flip * 4 + rot with
// rot quarter-turns applied after an optional horizontal flip; 0 is the
// identity. Applies the same transform to a, b, and label.
PatchPair augment(const PatchPair& p, int transform);

// Inverse-frequency class weights over the split's label pixels:
// w_c = N_total / (2 * N_c). A class with zero pixels (or an empty split)
// raises DegenerateSplit.
std::pair<double, double> class_weights(const Manifest& m, Split split);

}  // namespace urbdiff
