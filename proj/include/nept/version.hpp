#pragma once

namespace nept {

inline constexpr const char* kToolName = "neptsim";
inline constexpr const char* kToolVersion = "0.1.0";

/// Schema versions carried by persisted files so readers can detect
/// incompatible layouts.
inline constexpr int kTraceSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

}  // namespace nept
