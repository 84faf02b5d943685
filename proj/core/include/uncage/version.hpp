#pragma once

namespace uncage {

inline constexpr const char* kVersion = "0.1.0";

} // namespace uncage
