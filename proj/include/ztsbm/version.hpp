#pragma once

namespace ztsbm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ztsbm
