#pragma once

namespace casper {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace casper
