#pragma once

#include <string_view>

namespace nbaitv {

/// Written into every manifest.
inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace nbaitv
