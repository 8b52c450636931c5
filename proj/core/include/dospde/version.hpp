#pragma once

namespace dospde {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dospde
