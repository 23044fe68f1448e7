#pragma once

#include <cstddef>
#include <stdexcept>

namespace hcv::quad {

/// Composite Simpson rule on `panels` subintervals (rounded up to even).
template <class Fn>
[[nodiscard]] double simpson(Fn&& fn, double a, double b, std::size_t panels = 1000) {
  if (panels < 2) panels = 2;
  if (panels % 2 != 0) ++panels;
  if (a == b) return 0.0;
  const double h = (b - a) / static_cast<double>(panels);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i < panels; ++i) {
    const double v = fn(a + h * static_cast<double>(i));
    (i % 2 == 1 ? odd : even) += v;
  }
  return h / 3.0 * (fn(a) + 4.0 * odd + 2.0 * even + fn(b));
}

/// Composite trapezoid rule on `panels` subintervals.
template <class Fn>
[[nodiscard]] double trapezoid(Fn&& fn, double a, double b, std::size_t panels = 1000) {
  if (panels < 1) throw std::invalid_argument("trapezoid: panels >= 1 required");
  if (a == b) return 0.0;
  const double h = (b - a) / static_cast<double>(panels);
  double inner = 0.0;
  for (std::size_t i = 1; i < panels; ++i) inner += fn(a + h * static_cast<double>(i));
  return h * (0.5 * (fn(a) + fn(b)) + inner);
}

}  // namespace hcv::quad
