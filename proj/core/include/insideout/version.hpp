#pragma once

#include <string_view>

namespace insideout {

/// Library version, e.g. "0.3.0".
std::string_view library_version() noexcept;

}  // namespace insideout
