#pragma once

namespace ajt {
inline constexpr const char* kVersion = "1.0.0";
}
