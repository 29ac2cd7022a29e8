#pragma once

namespace lossval {
inline constexpr const char* kVersion = "0.1.0";
}
