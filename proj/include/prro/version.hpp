#pragma once

namespace prro {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace prro
