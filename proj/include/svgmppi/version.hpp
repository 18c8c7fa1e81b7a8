#pragma once

namespace svgmppi {

inline constexpr const char* kVersion = "0.1.0";

// File format schema versions.
inline constexpr int kConfigSchema = 1;
inline constexpr int kGridSchema = 1;
inline constexpr int kTrajectoryCsvSchema = 1;
inline constexpr int kMetricsSchema = 1;
inline constexpr int kManifestSchema = 1;

}  // namespace svgmppi
