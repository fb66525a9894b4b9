#pragma once

namespace sefkit {

inline constexpr const char* kToolName = "sefkit";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace sefkit
