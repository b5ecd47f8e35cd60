#include "rayvr/math.hpp"

#include <algorithm>
#include <stdexcept>

namespace rayvr {

Mat4 Mat4::translation(const Vec3& t) {
    Mat4 r = identity();
    r(0, 3) = t.x;
    r(1, 3) = t.y;
    r(2, 3) = t.z;
    return r;
}

Mat4 Mat4::scale(const Vec3& s) {
    Mat4 r;
    r(0, 0) = s.x;
    r(1, 1) = s.y;
    r(2, 2) = s.z;
    r(3, 3) = 1.0;
    return r;
}

Mat4 Mat4::rotation(const Vec3& axis, double radians) {
    const Vec3 a = normalize(axis);
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    const double k = 1.0 - c;
    Mat4 r = identity();
    r(0, 0) = c + a.x * a.x * k;
    r(0, 1) = a.x * a.y * k - a.z * s;
    r(0, 2) = a.x * a.z * k + a.y * s;
    r(1, 0) = a.y * a.x * k + a.z * s;
    r(1, 1) = c + a.y * a.y * k;
    r(1, 2) = a.y * a.z * k - a.x * s;
    r(2, 0) = a.z * a.x * k - a.y * s;
    r(2, 1) = a.z * a.y * k + a.x * s;
    r(2, 2) = c + a.z * a.z * k;
    return r;
}

std::array<double, 4> Mat4::transform4(const std::array<double, 4>& p) const {
    std::array<double, 4> out{};
    for (int row = 0; row < 4; ++row) {
        out[row] = m[row * 4 + 0] * p[0] + m[row * 4 + 1] * p[1] + m[row * 4 + 2] * p[2] +
                   m[row * 4 + 3] * p[3];
    }
    return out;
}

std::array<double, 4> Mat4::transform_homogeneous(const Vec3& p) const {
    return transform4({p.x, p.y, p.z, 1.0});
}

Vec3 Mat4::transform_point(const Vec3& p) const {
    const auto h = transform_homogeneous(p);
    return {h[0] / h[3], h[1] / h[3], h[2] / h[3]};
}

Vec3 Mat4::transform_vector(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[4] * v.x + m[5] * v.y + m[6] * v.z,
            m[8] * v.x + m[9] * v.y + m[10] * v.z};
}

Mat4 Mat4::transposed() const {
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) r(i, j) = (*this)(j, i);
    }
    return r;
}

Mat4 operator*(const Mat4& a, const Mat4& b) {
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double sum = 0.0;
            for (int k = 0; k < 4; ++k) sum += a(i, k) * b(k, j);
            r(i, j) = sum;
        }
    }
    return r;
}

namespace {

// Cofactor expansion; returns the adjugate (transposed cofactors) and determinant.
Mat4 adjugate(const Mat4& a, double& det) {
    const auto& m = a.m;
    Mat4 inv;
    auto& o = inv.m;
    o[0] = m[5] * m[10] * m[15] - m[5] * m[11] * m[14] - m[9] * m[6] * m[15] +
           m[9] * m[7] * m[14] + m[13] * m[6] * m[11] - m[13] * m[7] * m[10];
    o[4] = -m[4] * m[10] * m[15] + m[4] * m[11] * m[14] + m[8] * m[6] * m[15] -
           m[8] * m[7] * m[14] - m[12] * m[6] * m[11] + m[12] * m[7] * m[10];
    o[8] = m[4] * m[9] * m[15] - m[4] * m[11] * m[13] - m[8] * m[5] * m[15] +
           m[8] * m[7] * m[13] + m[12] * m[5] * m[11] - m[12] * m[7] * m[9];
    o[12] = -m[4] * m[9] * m[14] + m[4] * m[10] * m[13] + m[8] * m[5] * m[14] -
            m[8] * m[6] * m[13] - m[12] * m[5] * m[10] + m[12] * m[6] * m[9];
    o[1] = -m[1] * m[10] * m[15] + m[1] * m[11] * m[14] + m[9] * m[2] * m[15] -
           m[9] * m[3] * m[14] - m[13] * m[2] * m[11] + m[13] * m[3] * m[10];
    o[5] = m[0] * m[10] * m[15] - m[0] * m[11] * m[14] - m[8] * m[2] * m[15] +
           m[8] * m[3] * m[14] + m[12] * m[2] * m[11] - m[12] * m[3] * m[10];
    o[9] = -m[0] * m[9] * m[15] + m[0] * m[11] * m[13] + m[8] * m[1] * m[15] -
           m[8] * m[3] * m[13] - m[12] * m[1] * m[11] + m[12] * m[3] * m[9];
    o[13] = m[0] * m[9] * m[14] - m[0] * m[10] * m[13] - m[8] * m[1] * m[14] +
            m[8] * m[2] * m[13] + m[12] * m[1] * m[10] - m[12] * m[2] * m[9];
    o[2] = m[1] * m[6] * m[15] - m[1] * m[7] * m[14] - m[5] * m[2] * m[15] +
           m[5] * m[3] * m[14] + m[13] * m[2] * m[7] - m[13] * m[3] * m[6];
    o[6] = -m[0] * m[6] * m[15] + m[0] * m[7] * m[14] + m[4] * m[2] * m[15] -
           m[4] * m[3] * m[14] - m[12] * m[2] * m[7] + m[12] * m[3] * m[6];
    o[10] = m[0] * m[5] * m[15] - m[0] * m[7] * m[13] - m[4] * m[1] * m[15] +
            m[4] * m[3] * m[13] + m[12] * m[1] * m[7] - m[12] * m[3] * m[5];
    o[14] = -m[0] * m[5] * m[14] + m[0] * m[6] * m[13] + m[4] * m[1] * m[14] -
            m[4] * m[2] * m[13] - m[12] * m[1] * m[6] + m[12] * m[2] * m[5];
    o[3] = -m[1] * m[6] * m[11] + m[1] * m[7] * m[10] + m[5] * m[2] * m[11] -
           m[5] * m[3] * m[10] - m[9] * m[2] * m[7] + m[9] * m[3] * m[6];
    o[7] = m[0] * m[6] * m[11] - m[0] * m[7] * m[10] - m[4] * m[2] * m[11] +
           m[4] * m[3] * m[10] + m[8] * m[2] * m[7] - m[8] * m[3] * m[6];
    o[11] = -m[0] * m[5] * m[11] + m[0] * m[7] * m[9] + m[4] * m[1] * m[11] -
            m[4] * m[3] * m[9] - m[8] * m[1] * m[7] + m[8] * m[3] * m[5];
    o[15] = m[0] * m[5] * m[10] - m[0] * m[6] * m[9] - m[4] * m[1] * m[10] +
            m[4] * m[2] * m[9] + m[8] * m[1] * m[6] - m[8] * m[2] * m[5];
    det = m[0] * o[0] + m[1] * o[4] + m[2] * o[8] + m[3] * o[12];
    return inv;
}

}  // namespace

double Mat4::determinant() const {
    double det = 0.0;
    adjugate(*this, det);
    return det;
}

Mat4 inverse(const Mat4& a) {
    double det = 0.0;
    Mat4 inv = adjugate(a, det);
    if (det == 0.0 || !std::isfinite(det)) throw std::domain_error("matrix is singular");
    const double inv_det = 1.0 / det;
    for (double& v : inv.m) {
        v *= inv_det;
        if (!std::isfinite(v)) throw std::domain_error("matrix is singular");
    }
    return inv;
}

Aabb transform_bounds(const Mat4& m, const Aabb& box) {
    Aabb out;
    if (box.empty()) return out;
    for (int i = 0; i < 8; ++i) {
        const Vec3 corner{(i & 1) ? box.hi.x : box.lo.x, (i & 2) ? box.hi.y : box.lo.y,
                          (i & 4) ? box.hi.z : box.lo.z};
        out.expand(m.transform_point(corner));
    }
    return out;
}

double max_abs_diff(const Mat4& a, const Mat4& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < 16; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
    return d;
}

}  // namespace rayvr
