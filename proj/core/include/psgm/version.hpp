#pragma once

namespace psgm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace psgm
