#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace dotmarg {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline Vec3 normalized(const Vec3& a) { return a * (1.0 / norm(a)); }

using VoxelIndex = std::array<int, 3>;

struct GridDims {
  int nx = 0, ny = 0, nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < nx && j < ny && k < nz;
  }
  bool contains(const VoxelIndex& v) const { return contains(v[0], v[1], v[2]); }
  // x fastest, z slowest.
  std::size_t linear(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(k));
  }
  std::size_t linear(const VoxelIndex& v) const { return linear(v[0], v[1], v[2]); }
  VoxelIndex unravel(std::size_t idx) const {
    const int i = static_cast<int>(idx % static_cast<std::size_t>(nx));
    const std::size_t rest = idx / static_cast<std::size_t>(nx);
    return {i, static_cast<int>(rest % static_cast<std::size_t>(ny)), static_cast<int>(rest / static_cast<std::size_t>(ny))};
  }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

}  // namespace dotmarg
