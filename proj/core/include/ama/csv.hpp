#pragma once

#include <string>

namespace ama {

/// Shortest text that parses back to exactly `x`.
std::string format_number(double x);

/// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& text);

} // namespace ama
