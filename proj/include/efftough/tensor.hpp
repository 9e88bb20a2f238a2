#ifndef EFFTOUGH_TENSOR_HPP
#define EFFTOUGH_TENSOR_HPP

#include <cmath>

namespace efftough {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

// Symmetric second-order tensor under plane-strain kinematics. The
// out-of-plane normal component is kept because the plastic strain of an
// incompressible von Mises flow is three-dimensional even when the total
// strain has eps_zz = 0.
struct SymTensor {
  double xx = 0.0;
  double yy = 0.0;
  double zz = 0.0;
  double xy = 0.0;

  SymTensor() = default;
  SymTensor(double xx_, double yy_, double zz_, double xy_)
      : xx(xx_), yy(yy_), zz(zz_), xy(xy_) {}

  SymTensor operator+(const SymTensor& o) const {
    return {xx + o.xx, yy + o.yy, zz + o.zz, xy + o.xy};
  }
  SymTensor operator-(const SymTensor& o) const {
    return {xx - o.xx, yy - o.yy, zz - o.zz, xy - o.xy};
  }
  SymTensor operator*(double s) const { return {xx * s, yy * s, zz * s, xy * s}; }
  SymTensor& operator+=(const SymTensor& o) {
    xx += o.xx; yy += o.yy; zz += o.zz; xy += o.xy;
    return *this;
  }

  double trace() const { return xx + yy + zz; }

  SymTensor deviator() const {
    const double m = trace() / 3.0;
    return {xx - m, yy - m, zz - m, xy};
  }
};

inline SymTensor operator*(double s, const SymTensor& t) { return t * s; }

// Full contraction a:b; the off-diagonal pair enters twice.
inline double double_dot(const SymTensor& a, const SymTensor& b) {
  return a.xx * b.xx + a.yy * b.yy + a.zz * b.zz + 2.0 * a.xy * b.xy;
}

inline double norm(const SymTensor& t) { return std::sqrt(double_dot(t, t)); }

inline double max_abs_component(const SymTensor& t) {
  return std::max(std::max(std::abs(t.xx), std::abs(t.yy)),
                  std::max(std::abs(t.zz), std::abs(t.xy)));
}

}  // namespace efftough

#endif
