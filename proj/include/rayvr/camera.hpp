#pragma once

#include <limits>
#include <optional>
#include <string_view>
#include <utility>

#include "rayvr/math.hpp"

// Camera conventions
// ------------------
// World and camera space are right-handed with +y up; a camera looks down its
// -w axis (w = -forward). The projection works in a "raster-aligned" space
// obtained by rotating camera space 180 degrees about x: +x right, +y down,
// +z forward. In that space the canonical perspective maps depth z in [n, f]
// to z' in [0, 1], and NDC y grows downward, matching raster rows.

namespace rayvr {

struct ImageSize {
    int width = 0;
    int height = 0;

    constexpr double aspect() const { return static_cast<double>(width) / height; }
    constexpr long long pixel_count() const { return static_cast<long long>(width) * height; }
    friend constexpr bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct PixelCoord {
    int x = 0;
    int y = 0;
};

inline constexpr double kDefaultNear = 0.1;
inline constexpr double kDefaultFar = 1000.0;

struct ProjectionParams {
    double near = kDefaultNear;
    double far = kDefaultFar;
    double fov_y = radians(60.0);
    double aspect = 1.0;

    /// Throws std::invalid_argument if n <= 0, f <= n, fov outside (0, pi) or aspect <= 0.
    void validate() const;
};

/// Signed tangents of the frustum edges in raster-aligned space:
/// x/z spans [left, right] and y/z spans [top, bottom] (y down).
struct FrustumTangents {
    double left = -1, right = 1, top = -1, bottom = 1;

    static FrustumTangents symmetric(const ProjectionParams& p);
    bool is_symmetric(double tolerance = 1e-12) const;
};

/// 1 / tan(fov_y / 2). Throws std::domain_error outside (0, pi).
double fov_scale(double fov_y);

/// Canonical perspective (z' = f(z - n) / (z (f - n))) scaled by the FOV
/// factor in y and FOV factor / aspect in x. Operates on raster-aligned points.
Mat4 make_perspective(const ProjectionParams& p);

/// Off-center variant used for asymmetric per-eye frusta.
Mat4 make_perspective(const FrustumTangents& frustum, double near, double far);

/// n = 2(r + 0.5)/d - 1 per axis. Throws std::out_of_range unless 0 <= r < d.
Vec2 raster_to_ndc(Vec2 raster, ImageSize dims);

/// NDC of a sample at `offset` within pixel (offset {0.5, 0.5} is the center).
Vec2 pixel_sample_to_ndc(PixelCoord pixel, Vec2 offset, ImageSize dims);

/// Inverse of pixel_sample_to_ndc: continuous raster position where pixel
/// (x, y) covers [x, x+1) x [y, y+1).
Vec2 ndc_to_raster(Vec2 ndc, ImageSize dims);

struct Pose {
    Vec3 position{};
    Vec3 forward{0, 0, -1};
    Vec3 up{0, 1, 0};

    static Pose look_at(const Vec3& position, const Vec3& target, const Vec3& up);
    /// Unit right vector; throws std::invalid_argument for a degenerate pose.
    Vec3 right() const;
};

/// Per-eye camera state. Immutable after construction.
struct Eye {
    Vec3 origin{};
    // Columns of the inverse view matrix: right, up, backward.
    Vec3 u{1, 0, 0};
    Vec3 v{0, 1, 0};
    Vec3 w{0, 0, 1};
    Mat4 view = Mat4::identity();
    Mat4 proj = Mat4::identity();
    Mat4 view_proj = Mat4::identity();
    Mat4 inv_view_proj = Mat4::identity();
    ProjectionParams params{};
    FrustumTangents frustum{};
};

/// Builds an eye from a pose. When `frustum` is empty the projection is the
/// symmetric frustum described by `params`.
Eye make_eye(const Pose& pose, const ProjectionParams& params,
             std::optional<FrustumTangents> frustum = std::nullopt);

/// Largest entry-wise difference between two eyes' view_proj matrices and origins.
double eye_distance(const Eye& a, const Eye& b);

/// Continuous raster position of a world point, or nothing when it is behind
/// the eye.
std::optional<Vec2> project_to_raster(const Eye& eye, const Vec3& world, ImageSize dims);

struct StereoRig {
    Eye left;
    Eye right;
    double ipd = 0.0;
    Pose center{};
};

using EyeFrusta = std::pair<FrustumTangents, FrustumTangents>;

/// Eyes sit at center -/+ ipd/2 along the pose's right vector with parallel
/// view axes. Throws std::invalid_argument for ipd < 0 or a degenerate pose.
StereoRig make_stereo_rig(const Pose& center, double ipd, const ProjectionParams& params,
                          std::optional<EyeFrusta> per_eye_frusta = std::nullopt);

struct RayPayload {
    int depth = 0;
    Rgb throughput{1.0};
};

struct Ray {
    Vec3 origin{};
    Vec3 direction{0, 0, -1};
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
    RayPayload payload{};
};

enum class RayGenMode { OptimizedExpression, InverseMatrix, GBufferDerived };

std::string_view to_string(RayGenMode mode);
/// Accepts "optimized", "inverse" and "gbuffer". Throws std::invalid_argument.
RayGenMode parse_raygen_mode(std::string_view name);

/// normalize(a*t*n_x*u - t*n_y*v - w) with t = tan(fov_y/2). Ignores any
/// asymmetric frustum on the eye, which is why it misregisters HMD stereo.
Ray gen_ray_optimized(PixelCoord pixel, ImageSize dims, const Eye& eye, const ProjectionParams& p,
                      Vec2 offset = {0.5, 0.5});

/// Unprojects the pixel's NDC point on the near plane through inv_view_proj.
Ray gen_ray_inverse_matrix(PixelCoord pixel, ImageSize dims, const Eye& eye,
                           Vec2 offset = {0.5, 0.5});

/// Ray from the eye through a stored G-buffer position; empty for uncovered pixels.
std::optional<Ray> gen_ray_from_gbuffer(const std::optional<Vec3>& gbuffer_position, const Eye& eye);

}  // namespace rayvr
