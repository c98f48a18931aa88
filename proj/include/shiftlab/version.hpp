#pragma once

namespace shiftlab {
inline constexpr const char* kVersion = "0.1.0";
}
