#pragma once

#include <string_view>

namespace affaudit::embedded {

/// Contents of a file from data/ compiled into the library. Throws
/// std::out_of_range for unknown names.
std::string_view file(std::string_view name);

}  // namespace affaudit::embedded
