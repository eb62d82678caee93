#pragma once

namespace loggas {
inline constexpr const char* kToolVersion = "0.1.0";
}
