#pragma once

namespace urbdiff {

inline constexpr int kVersionMajor = 0;
inline constexpr int kVersionMinor = 1;
inline constexpr int kVersionPatch = 0;
inline constexpr const char* kVersionString = "0.1.0";

// On-disk format versions (bumped independently of the library version).
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kForestFormatVersion = 1;
inline constexpr int kRasterHeaderVersion = 1;

}  // namespace urbdiff
