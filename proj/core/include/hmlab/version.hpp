#pragma once

namespace hmlab {
inline constexpr const char* kToolVersion = "0.1.0";
}
