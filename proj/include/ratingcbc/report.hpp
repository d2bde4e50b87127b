#pragma once

#include "ratingcbc/choice_model.hpp"
#include "ratingcbc/design.hpp"

#include <map>
#include <string>

namespace ratingcbc {

/// "0.37 (0.05) ***"
std::string format_estimate(double beta, double se, double p_value);

/// Attribute / level / estimate table with baseline rows shown as "-" and
/// likelihood statistics underneath.
std::string render_fit_table(const Design& design, const MnlFit& fit);

/// One estimate column per group.
std::string render_group_table(const Design& design, const std::map<Group, MnlFit>& fits);

/// Profile levels and rating distribution percentages (T/P/A/V/E).
std::string render_profile_table(const Design& design);

} // namespace ratingcbc
