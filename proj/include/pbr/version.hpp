#pragma once

namespace pbr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pbr
