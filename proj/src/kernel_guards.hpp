#pragma once

// Shape validation shared by the parallel and serial kernel lanes.

#include <string>

#include "dialsel/tensor.hpp"

namespace dialsel::kernels::detail {

inline void require_2d(const Tensor& t, const char* who) {
  if (t.rank() != 2)
    throw ShapeError(std::string(who) + ": expected rank-2 tensor, got " + t.shape_str());
}

inline void require_mm(const Tensor& a, const Tensor& b, const char* who) {
  require_2d(a, who);
  require_2d(b, who);
  if (a.cols() != b.rows())
    throw ShapeError(std::string(who) + ": inner dims disagree " + shape_pair_str(a, b));
}

inline void require_mm_nt(const Tensor& a, const Tensor& b, const char* who) {
  require_2d(a, who);
  require_2d(b, who);
  if (a.cols() != b.cols())
    throw ShapeError(std::string(who) + ": inner dims disagree " + shape_pair_str(a, b));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(who) + ": shape mismatch " + shape_pair_str(a, b));
}

// b broadcasts over a's leading dims when b.shape is a suffix of a.shape.
inline bool broadcast_ok(const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return true;
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (bs.size() > as.size()) return false;
  for (std::size_t i = 0; i < bs.size(); ++i)
    if (bs[bs.size() - 1 - i] != as[as.size() - 1 - i]) return false;
  return true;
}

inline void require_axis(const Tensor& t, int axis, const char* who) {
  if (axis < 0 || static_cast<std::size_t>(axis) >= t.rank())
    throw ShapeError(std::string(who) + ": axis " + std::to_string(axis) +
                     " out of range for " + t.shape_str());
}

}  // namespace dialsel::kernels::detail
