#pragma once

namespace ldt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ldt
