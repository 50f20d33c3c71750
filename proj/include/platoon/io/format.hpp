#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace platoon::io {

/// 9 significant digits, '.' separator, no locale. NaN prints as an empty field.
inline std::string format_number(double x) {
  if (std::isnan(x)) return {};
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 9);
  return {buf, res.ptr};
}

/// Strict parse of a whole field; empty fields yield NaN.
inline std::optional<double> parse_number(std::string_view field) {
  if (field.empty()) return std::nan("");
  double x = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) return std::nullopt;
  return x;
}

}  // namespace platoon::io
