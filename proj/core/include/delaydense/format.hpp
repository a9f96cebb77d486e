#pragma once

#include <span>
#include <string>

namespace delaydense {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// Comma-joined format_double of each value.
std::string format_list(std::span<const double> values);

}  // namespace delaydense
