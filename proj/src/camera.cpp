#include "rayvr/camera.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rayvr {

namespace {

// Camera space (y up, looking down -z) to raster-aligned space (y down, z forward).
const Mat4 kCameraToRasterAligned = Mat4::scale({1.0, -1.0, -1.0});

}  // namespace

void ProjectionParams::validate() const {
    if (!(near > 0.0)) throw std::invalid_argument("projection: near must be > 0");
    if (!(far > near)) throw std::invalid_argument("projection: far must be > near");
    if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) {
        throw std::invalid_argument("projection: fov_y must lie in (0, pi)");
    }
    if (!(aspect > 0.0)) throw std::invalid_argument("projection: aspect must be > 0");
}

FrustumTangents FrustumTangents::symmetric(const ProjectionParams& p) {
    const double t = std::tan(p.fov_y / 2.0);
    return {-p.aspect * t, p.aspect * t, -t, t};
}

bool FrustumTangents::is_symmetric(double tolerance) const {
    return std::abs(left + right) <= tolerance && std::abs(top + bottom) <= tolerance;
}

double fov_scale(double fov_y) {
    if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) {
        throw std::domain_error("fov_scale: field of view must lie in (0, pi)");
    }
    return 1.0 / std::tan(fov_y / 2.0);
}

Mat4 make_perspective(const FrustumTangents& fr, double near, double far) {
    if (!(near > 0.0)) throw std::invalid_argument("projection: near must be > 0");
    if (!(far > near)) throw std::invalid_argument("projection: far must be > near");
    if (!(fr.right > fr.left) || !(fr.bottom > fr.top)) {
        throw std::invalid_argument("projection: degenerate frustum");
    }
    Mat4 m;
    m(0, 0) = 2.0 / (fr.right - fr.left);
    m(0, 2) = -(fr.right + fr.left) / (fr.right - fr.left);
    m(1, 1) = 2.0 / (fr.bottom - fr.top);
    m(1, 2) = -(fr.bottom + fr.top) / (fr.bottom - fr.top);
    m(2, 2) = far / (far - near);
    m(2, 3) = -far * near / (far - near);
    m(3, 2) = 1.0;
    return m;
}

Mat4 make_perspective(const ProjectionParams& p) {
    p.validate();
    const double s = fov_scale(p.fov_y);
    Mat4 m;
    m(0, 0) = s / p.aspect;
    m(1, 1) = s;
    m(2, 2) = p.far / (p.far - p.near);
    m(2, 3) = -p.far * p.near / (p.far - p.near);
    m(3, 2) = 1.0;
    return m;
}

Vec2 raster_to_ndc(Vec2 r, ImageSize d) {
    if (d.width <= 0 || d.height <= 0) throw std::out_of_range("raster_to_ndc: empty image");
    if (!(r.x >= 0.0 && r.x < d.width && r.y >= 0.0 && r.y < d.height)) {
        throw std::out_of_range("raster_to_ndc: pixel outside the image");
    }
    return {2.0 * (r.x + 0.5) / d.width - 1.0, 2.0 * (r.y + 0.5) / d.height - 1.0};
}

Vec2 pixel_sample_to_ndc(PixelCoord pixel, Vec2 offset, ImageSize d) {
    return {2.0 * (pixel.x + offset.x) / d.width - 1.0, 2.0 * (pixel.y + offset.y) / d.height - 1.0};
}

Vec2 ndc_to_raster(Vec2 ndc, ImageSize d) {
    return {(ndc.x + 1.0) * 0.5 * d.width, (ndc.y + 1.0) * 0.5 * d.height};
}

Pose Pose::look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
    return {position, target - position, up};
}

Vec3 Pose::right() const {
    const double fl = length(forward);
    const double ul = length(up);
    if (!(fl > 0.0) || !(ul > 0.0)) throw std::invalid_argument("pose: zero-length axis");
    const Vec3 r = cross(forward / fl, up / ul);
    const double rl = length(r);
    if (!(rl > 1e-9)) throw std::invalid_argument("pose: forward is parallel to up");
    return r / rl;
}

Eye make_eye(const Pose& pose, const ProjectionParams& params, std::optional<FrustumTangents> frustum) {
    params.validate();
    Eye eye;
    eye.params = params;
    eye.frustum = frustum.value_or(FrustumTangents::symmetric(params));
    eye.origin = pose.position;

    const Vec3 right = pose.right();
    const Vec3 forward = normalize(pose.forward);
    eye.u = right;
    eye.v = cross(right, forward);
    eye.w = -forward;

    Mat4 view = Mat4::identity();
    const Vec3 rows[3] = {eye.u, eye.v, eye.w};
    for (int i = 0; i < 3; ++i) {
        view(i, 0) = rows[i].x;
        view(i, 1) = rows[i].y;
        view(i, 2) = rows[i].z;
        view(i, 3) = -dot(rows[i], eye.origin);
    }
    eye.view = view;
    eye.proj = make_perspective(eye.frustum, params.near, params.far) * kCameraToRasterAligned;
    eye.view_proj = eye.proj * eye.view;
    eye.inv_view_proj = inverse(eye.view_proj);
    return eye;
}

double eye_distance(const Eye& a, const Eye& b) {
    return std::max(max_abs_diff(a.view_proj, b.view_proj), length(a.origin - b.origin));
}

std::optional<Vec2> project_to_raster(const Eye& eye, const Vec3& world, ImageSize dims) {
    const auto h = eye.view_proj.transform_homogeneous(world);
    if (!(h[3] > 0.0)) return std::nullopt;
    return ndc_to_raster({h[0] / h[3], h[1] / h[3]}, dims);
}

StereoRig make_stereo_rig(const Pose& center, double ipd, const ProjectionParams& params,
                          std::optional<EyeFrusta> per_eye_frusta) {
    if (!(ipd >= 0.0)) throw std::invalid_argument("stereo rig: ipd must be >= 0");
    const Vec3 right = center.right();
    Pose left_pose = center;
    Pose right_pose = center;
    left_pose.position = center.position - right * (ipd / 2.0);
    right_pose.position = center.position + right * (ipd / 2.0);

    StereoRig rig;
    rig.ipd = ipd;
    rig.center = center;
    rig.left = make_eye(left_pose, params, per_eye_frusta ? std::optional{per_eye_frusta->first} : std::nullopt);
    rig.right = make_eye(right_pose, params, per_eye_frusta ? std::optional{per_eye_frusta->second} : std::nullopt);
    return rig;
}

std::string_view to_string(RayGenMode mode) {
    switch (mode) {
        case RayGenMode::OptimizedExpression: return "optimized";
        case RayGenMode::InverseMatrix: return "inverse";
        case RayGenMode::GBufferDerived: return "gbuffer";
    }
    return "unknown";
}

RayGenMode parse_raygen_mode(std::string_view name) {
    if (name == "optimized") return RayGenMode::OptimizedExpression;
    if (name == "inverse") return RayGenMode::InverseMatrix;
    if (name == "gbuffer") return RayGenMode::GBufferDerived;
    throw std::invalid_argument("unknown ray generation mode '" + std::string(name) + "'");
}

Ray gen_ray_optimized(PixelCoord pixel, ImageSize dims, const Eye& eye, const ProjectionParams& p, Vec2 offset) {
    const Vec2 n = pixel_sample_to_ndc(pixel, offset, dims);
    const double t = std::tan(p.fov_y / 2.0);
    Ray ray;
    ray.origin = eye.origin;
    ray.direction = normalize(p.aspect * t * (n.x * eye.u) - (t * (n.y * eye.v)) - eye.w);
    return ray;
}

Ray gen_ray_inverse_matrix(PixelCoord pixel, ImageSize dims, const Eye& eye, Vec2 offset) {
    const Vec2 n = pixel_sample_to_ndc(pixel, offset, dims);
    const auto h = eye.inv_view_proj.transform4({n.x, n.y, 0.0, 1.0});
    if (!(std::abs(h[3]) > 0.0)) throw std::domain_error("unprojection produced a point at infinity");
    const Vec3 on_near{h[0] / h[3], h[1] / h[3], h[2] / h[3]};
    Ray ray;
    ray.origin = eye.origin;
    ray.direction = normalize(on_near - eye.origin);
    return ray;
}

std::optional<Ray> gen_ray_from_gbuffer(const std::optional<Vec3>& position, const Eye& eye) {
    if (!position) return std::nullopt;
    Ray ray;
    ray.origin = eye.origin;
    ray.direction = normalize(*position - eye.origin);
    return ray;
}

}  // namespace rayvr
