#pragma once

namespace sjsr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sjsr
