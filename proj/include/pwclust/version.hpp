#pragma once

namespace pwclust {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pwclust
