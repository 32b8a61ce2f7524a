#pragma once

namespace spreadcert {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spreadcert
