#pragma once

namespace perivox {

inline constexpr const char* kVersion = "0.1.0";

} // namespace perivox
