#pragma once

#include "vdfield/types.hpp"

namespace vdfield::detail {

/// Positive if a, b, c are counter-clockwise (y up), zero if collinear.
/// Sign is exact; magnitude is only meaningful when the filter succeeds.
double orient2d(const Vec2& a, const Vec2& b, const Vec2& c);

/// Positive if d lies strictly inside the circle through CCW a, b, c.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace vdfield::detail
