#pragma once

namespace fraudfuse {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fraudfuse
