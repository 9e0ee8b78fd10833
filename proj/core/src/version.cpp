#include "insideout/version.hpp"

namespace insideout {

std::string_view library_version() noexcept { return INSIDEOUT_VERSION; }

}  // namespace insideout
