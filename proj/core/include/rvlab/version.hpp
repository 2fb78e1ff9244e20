#pragma once

namespace rvlab {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kToolName = "rvlab";

}  // namespace rvlab
