#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace hcv::io {

/// Shortest round-trip decimal form of x; locale independent.
[[nodiscard]] inline std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) return "nan";
  return {buf, res.ptr};
}

}  // namespace hcv::io
