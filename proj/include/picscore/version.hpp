#pragma once

namespace picscore {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace picscore
