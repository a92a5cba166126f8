#pragma once

namespace vergm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vergm
