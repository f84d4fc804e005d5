#pragma once

namespace crossflow {

inline constexpr const char* kToolName = "crossflow";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace crossflow
