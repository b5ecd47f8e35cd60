#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>

namespace rayvr {

struct Vec2 {
    double x = 0, y = 0;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3() = default;
    constexpr Vec3(double x, double y, double z) : x(x), y(y), z(z) {}

    constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
constexpr Vec3 operator*(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
constexpr Vec3 operator*(double s, const Vec3& a) { return a * s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(const Vec3& a) { return a / length(a); }
constexpr Vec3 min(const Vec3& a, const Vec3& b) {
    return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}
constexpr Vec3 max(const Vec3& a, const Vec3& b) {
    return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

/// Mirror reflection of an incoming direction about a unit normal.
constexpr Vec3 reflect(const Vec3& d, const Vec3& n) { return d - 2.0 * dot(d, n) * n; }

/// Builds a right-handed orthonormal basis (t, b, n) around a unit vector.
inline void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b) {
    // Duff et al., "Building an Orthonormal Basis, Revisited"
    const double sign = std::copysign(1.0, n.z);
    const double a = -1.0 / (sign + n.z);
    const double c = n.x * n.y * a;
    t = {1.0 + sign * n.x * n.x * a, sign * c, -sign * n.x};
    b = {c, sign + n.y * n.y * a, -n.y};
}

/// Linear RGB triple. Kept distinct from Vec3 so radiance never mixes with geometry.
struct Rgb {
    double r = 0, g = 0, b = 0;

    constexpr Rgb() = default;
    constexpr Rgb(double r, double g, double b) : r(r), g(g), b(b) {}
    constexpr explicit Rgb(double v) : r(v), g(v), b(v) {}

    constexpr Rgb& operator+=(const Rgb& o) { r += o.r; g += o.g; b += o.b; return *this; }
    constexpr Rgb& operator*=(const Rgb& o) { r *= o.r; g *= o.g; b *= o.b; return *this; }
    constexpr Rgb& operator*=(double s) { r *= s; g *= s; b *= s; return *this; }

    constexpr double max_component() const { return r > g ? (r > b ? r : b) : (g > b ? g : b); }
    constexpr double luminance() const { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }
    constexpr bool is_black() const { return r == 0 && g == 0 && b == 0; }

    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

constexpr Rgb operator+(const Rgb& a, const Rgb& b) { return {a.r + b.r, a.g + b.g, a.b + b.b}; }
constexpr Rgb operator-(const Rgb& a, const Rgb& b) { return {a.r - b.r, a.g - b.g, a.b - b.b}; }
constexpr Rgb operator*(const Rgb& a, const Rgb& b) { return {a.r * b.r, a.g * b.g, a.b * b.b}; }
constexpr Rgb operator*(const Rgb& a, double s) { return {a.r * s, a.g * s, a.b * s}; }
constexpr Rgb operator*(double s, const Rgb& a) { return a * s; }
constexpr Rgb operator/(const Rgb& a, double s) { return {a.r / s, a.g / s, a.b / s}; }

/// 4x4 matrix, row-major storage, column-vector convention (p' = M * p).
struct Mat4 {
    std::array<double, 16> m{};

    static constexpr Mat4 identity() {
        Mat4 r;
        r.m[0] = r.m[5] = r.m[10] = r.m[15] = 1.0;
        return r;
    }
    static Mat4 translation(const Vec3& t);
    static Mat4 scale(const Vec3& s);
    /// Rotation about a unit axis by `radians`, right-handed.
    static Mat4 rotation(const Vec3& axis, double radians);
    static Mat4 from_rows(const std::array<double, 16>& values) { return Mat4{values}; }

    constexpr double operator()(int row, int col) const { return m[row * 4 + col]; }
    constexpr double& operator()(int row, int col) { return m[row * 4 + col]; }

    /// Homogeneous point transform followed by the divide by w.
    Vec3 transform_point(const Vec3& p) const;
    /// Transform of (p, 1) without the divide; returns (x, y, z, w).
    std::array<double, 4> transform_homogeneous(const Vec3& p) const;
    std::array<double, 4> transform4(const std::array<double, 4>& p) const;
    /// Upper 3x3 applied to a direction; translation and projective row ignored.
    Vec3 transform_vector(const Vec3& v) const;

    Mat4 transposed() const;
    double determinant() const;

    friend constexpr bool operator==(const Mat4&, const Mat4&) = default;
};

Mat4 operator*(const Mat4& a, const Mat4& b);

/// Throws std::domain_error when the matrix is singular.
Mat4 inverse(const Mat4& a);

/// Largest absolute entry-wise difference.
double max_abs_diff(const Mat4& a, const Mat4& b);

/// Axis-aligned bounding box; default-constructed boxes are empty.
struct Aabb {
    Vec3 lo{kInf, kInf, kInf};
    Vec3 hi{-kInf, -kInf, -kInf};

    static constexpr double kInf = std::numeric_limits<double>::infinity();

    constexpr bool empty() const { return lo.x > hi.x || lo.y > hi.y || lo.z > hi.z; }
    constexpr void expand(const Vec3& p) { lo = min(lo, p); hi = max(hi, p); }
    constexpr void expand(const Aabb& b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
    constexpr Vec3 center() const { return (lo + hi) * 0.5; }
    constexpr Vec3 extent() const { return hi - lo; }
    constexpr double half_area() const {
        if (empty()) return 0.0;
        const Vec3 e = extent();
        return e.x * e.y + e.y * e.z + e.z * e.x;
    }
    constexpr bool contains(const Aabb& b, double slack = 0.0) const {
        return b.lo.x >= lo.x - slack && b.lo.y >= lo.y - slack && b.lo.z >= lo.z - slack &&
               b.hi.x <= hi.x + slack && b.hi.y <= hi.y + slack && b.hi.z <= hi.z + slack;
    }
    int largest_axis() const {
        const Vec3 e = extent();
        return e.x >= e.y ? (e.x >= e.z ? 0 : 2) : (e.y >= e.z ? 1 : 2);
    }
};

/// Bounds of the 8 transformed corners of `box`.
Aabb transform_bounds(const Mat4& m, const Aabb& box);

constexpr double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

}  // namespace rayvr
