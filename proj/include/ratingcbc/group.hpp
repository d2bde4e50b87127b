#pragma once

#include <string_view>

namespace ratingcbc {

/// Median-split membership.
enum class Group { High, Low };

std::string_view to_string(Group g);
Group parse_group(std::string_view text);

} // namespace ratingcbc
