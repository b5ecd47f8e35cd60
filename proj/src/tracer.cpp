#include "rayvr/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rayvr {

void TraceSettings::validate() const {
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (path_max_depth < 0) throw std::invalid_argument("path_max_depth must be >= 0");
    if (spp < 1) throw std::invalid_argument("spp must be >= 1");
}

RayCounters& RayCounters::operator+=(const RayCounters& o) {
    primary += o.primary;
    shadow += o.shadow;
    reflection += o.reflection;
    indirect += o.indirect;
    return *this;
}

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

SampleRng::SampleRng(std::uint64_t seed, std::uint32_t eye, std::uint32_t pixel, std::uint32_t frame,
                     std::uint32_t sample) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ ((static_cast<std::uint64_t>(eye) << 32) | pixel));
    h = mix64(h ^ ((static_cast<std::uint64_t>(frame) << 32) | sample));
    key_ = h;
}

double SampleRng::uniform(std::uint32_t bounce, std::uint32_t dim) const {
    const std::uint64_t bits = mix64(key_ ^ ((static_cast<std::uint64_t>(bounce) << 32) | dim));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

namespace {

// Random dimensions used within one bounce.
enum : std::uint32_t { kDimLight = 0, kDimLobe = 1, kDimDir0 = 2, kDimDir1 = 3, kDimJitter0 = 4, kDimJitter1 = 5 };

inline void count(std::uint64_t RayCounters::*field, RayCounters* counters) {
    if (counters) ++(counters->*field);
}

// Cosine-weighted direction about n.
Vec3 sample_cosine(const Vec3& n, double u1, double u2) {
    const double r = std::sqrt(u1);
    const double phi = 2.0 * std::numbers::pi * u2;
    const double x = r * std::cos(phi);
    const double y = r * std::sin(phi);
    const double z = std::sqrt(std::max(0.0, 1.0 - u1));
    Vec3 t, b;
    orthonormal_basis(n, t, b);
    return normalize(t * x + b * y + n * z);
}

}  // namespace

double shadow_visibility(const Vec3& point, const Light& light, const Tlas& tlas, const Scene& scene,
                         RayCounters* counters) {
    const LightSample ls = sample_light(light, point);
    Ray ray;
    ray.origin = point;
    ray.direction = ls.wi;
    ray.t_min = scene.ray_epsilon();
    ray.t_max = ls.distance;
    count(&RayCounters::shadow, counters);
    // Miss leaves visibility at 1; any opaque hit keeps the default 0.
    return intersect_any(ray, tlas, scene) ? 0.0 : 1.0;
}

Rgb shade_direct(const Hit& hit, const Scene& scene, const Tlas& tlas, bool with_shadows, RayCounters* counters) {
    Rgb c = scene.material_at(hit.material_index).emissive;
    for (const Light& light : scene.lights) {
        const Rgb e = eval_material(hit, light, scene);
        if (e.is_black()) continue;
        if (with_shadows && shadow_visibility(hit.position, light, tlas, scene, counters) == 0.0) continue;
        c += e;
    }
    return c;
}

Rgb shade_mirror(const Hit& hit, const TraceContext& ctx, const RayPayload& payload) {
    const Material& m = ctx.scene.material_at(hit.material_index);
    const Rgb direct = shade_direct(hit, ctx.scene, ctx.tlas, true, ctx.counters);
    const Vec3 r = normalize(reflect(-hit.wo, hit.normal));
    Rgb reflected;
    if (payload.depth < ctx.settings.max_depth) {
        Ray ray;
        ray.origin = hit.position;
        ray.direction = r;
        ray.t_min = ctx.scene.ray_epsilon();
        ray.payload = {payload.depth + 1, payload.throughput * m.specular};
        count(&RayCounters::reflection, ctx.counters);
        if (auto next = intersect_closest(ray, ctx.tlas, ctx.scene)) {
            reflected = shade_mirror(*next, ctx, ray.payload);
        } else {
            reflected = ctx.scene.environment.lookup(r);
        }
    } else {
        reflected = ctx.scene.environment.lookup(r);
    }
    return direct + m.specular * reflected;
}

Rgb path_trace_from_hit(const Hit& first, const TraceContext& ctx, const SampleRng& rng) {
    const Scene& scene = ctx.scene;
    const auto light_count = static_cast<double>(scene.lights.size());
    Rgb radiance;
    Rgb throughput(1.0);
    Hit hit = first;
    for (int bounce = 0;; ++bounce) {
        const Material& m = scene.material_at(hit.material_index);
        radiance += throughput * m.emissive;

        // Direct: one light chosen uniformly, weighted by the light count.
        if (!scene.lights.empty()) {
            const double ul = rng.uniform(bounce, kDimLight);
            const auto li = std::min(static_cast<std::size_t>(ul * light_count), scene.lights.size() - 1);
            const Rgb e = eval_material(hit, scene.lights[li], scene);
            if (!e.is_black() && shadow_visibility(hit.position, scene.lights[li], ctx.tlas, scene, ctx.counters) > 0.0) {
                radiance += throughput * e * light_count;
            }
        }
        if (bounce >= ctx.settings.path_max_depth) break;

        // Indirect: diffuse or mirror lobe, chosen by max component.
        const double wd = m.albedo.max_component();
        const double ws = m.specular.max_component();
        if (wd + ws <= 0.0) break;
        const double p_diffuse = wd / (wd + ws);
        Vec3 wi;
        if (rng.uniform(bounce, kDimLobe) < p_diffuse) {
            wi = sample_cosine(hit.normal, rng.uniform(bounce, kDimDir0), rng.uniform(bounce, kDimDir1));
            throughput *= m.albedo / p_diffuse;
        } else {
            wi = normalize(reflect(-hit.wo, hit.normal));
            throughput *= m.specular / (1.0 - p_diffuse);
        }
        Ray ray;
        ray.origin = hit.position;
        ray.direction = wi;
        ray.t_min = scene.ray_epsilon();
        ray.payload.depth = bounce + 1;
        count(&RayCounters::indirect, ctx.counters);
        auto next = intersect_closest(ray, ctx.tlas, scene);
        if (!next) {
            radiance += throughput * scene.environment.lookup(wi);
            break;
        }
        hit = *next;
    }
    return radiance;
}

Rgb path_trace_ray(const Ray& ray, const TraceContext& ctx, const SampleRng& rng) {
    count(&RayCounters::primary, ctx.counters);
    auto hit = intersect_closest(ray, ctx.tlas, ctx.scene);
    if (!hit) return ctx.scene.environment.lookup(ray.direction);
    return path_trace_from_hit(*hit, ctx, rng);
}

Ray camera_ray(PixelCoord pixel, ImageSize dims, const Eye& eye, RayGenMode mode, Vec2 offset) {
    if (mode == RayGenMode::OptimizedExpression) return gen_ray_optimized(pixel, dims, eye, eye.params, offset);
    return gen_ray_inverse_matrix(pixel, dims, eye, offset);
}

namespace {

std::uint32_t pixel_key(PixelCoord pixel, ImageSize dims) {
    return static_cast<std::uint32_t>(static_cast<std::uint64_t>(pixel.y) * dims.width + pixel.x);
}

// Sub-pixel offset for sample s of n: stratified over the largest square grid, uniform beyond it.
Vec2 jitter(int s, int n, const SampleRng& rng) {
    const int k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
    const double j0 = rng.uniform(0, kDimJitter0);
    const double j1 = rng.uniform(0, kDimJitter1);
    if (s < k * k) return {((s % k) + j0) / k, ((s / k) + j1) / k};
    return {j0, j1};
}

}  // namespace

Rgb path_trace_pixel(PixelCoord pixel, ImageSize dims, const Eye& eye, const TraceContext& ctx, std::uint32_t eye_index,
                     std::uint32_t frame) {
    const int n = ctx.settings.spp;
    Rgb sum;
    for (int s = 0; s < n; ++s) {
        const SampleRng rng(ctx.settings.seed, eye_index, pixel_key(pixel, dims), frame, static_cast<std::uint32_t>(s));
        const Ray ray = camera_ray(pixel, dims, eye, ctx.settings.raygen_mode, jitter(s, n, rng));
        sum += path_trace_ray(ray, ctx, rng);
    }
    return sum / n;
}

Rgb trace_pixel_dispatch(PixelCoord pixel, ImageSize dims, const Eye& eye, const GBuffer* gbuffer,
                         const TraceContext& ctx, std::uint32_t eye_index, std::uint32_t frame) {
    const Scene& scene = ctx.scene;
    const RayGenMode mode = ctx.settings.raygen_mode;
    if (mode == RayGenMode::GBufferDerived && !gbuffer) {
        throw std::invalid_argument("G-buffer ray generation needs a G-buffer");
    }

    std::optional<Hit> hit;
    bool from_gbuffer = false;
    if (gbuffer) {
        const bool covered = gbuffer->covered(pixel.x, pixel.y);
        if (covered) {
            const std::size_t idx = gbuffer->index(pixel.x, pixel.y);
            const EffectId fx =
                scene.material_at(scene.instances[gbuffer->instance[idx]].material_index).effect;
            // Raster effects always take their first hit from the rasterizer.
            if (mode == RayGenMode::GBufferDerived || fx == EffectId::Raster || fx == EffectId::RasterShadows) {
                hit = gbuffer_hit(*gbuffer, pixel.x, pixel.y, scene, eye);
                from_gbuffer = true;
            }
        } else if (mode == RayGenMode::GBufferDerived) {
            return scene.environment.lookup(gen_ray_inverse_matrix(pixel, dims, eye).direction);
        }
    }

    if (!from_gbuffer) {
        const Ray ray = camera_ray(pixel, dims, eye, mode);
        count(&RayCounters::primary, ctx.counters);
        hit = intersect_closest(ray, ctx.tlas, scene);
        if (!hit) return scene.environment.lookup(ray.direction);
        if (scene.material_at(hit->material_index).effect == EffectId::PathTraced) {
            // Jittered primaries; the center ray above only selected the effect.
            return path_trace_pixel(pixel, dims, eye, ctx, eye_index, frame);
        }
    }

    switch (scene.material_at(hit->material_index).effect) {
        case EffectId::Raster:
            return shade_direct(*hit, scene, ctx.tlas, false, ctx.counters);
        case EffectId::RasterShadows:
            return shade_direct(*hit, scene, ctx.tlas, true, ctx.counters);
        case EffectId::Mirror:
            return shade_mirror(*hit, ctx, RayPayload{});
        case EffectId::PathTraced: {
            Rgb sum;
            const int n = ctx.settings.spp;
            for (int s = 0; s < n; ++s) {
                const SampleRng rng(ctx.settings.seed, eye_index, pixel_key(pixel, dims), frame,
                                    static_cast<std::uint32_t>(s));
                sum += path_trace_from_hit(*hit, ctx, rng);
            }
            return sum / n;
        }
    }
    return {};
}

const HdrImage& Accumulator::accumulate(const HdrImage& current, bool reset) {
    if (reset || frame_index_ == 0 || history_.size() != current.size()) {
        history_ = current;
        frame_index_ = 1;
        return history_;
    }
    ++frame_index_;
    const double inv = 1.0 / frame_index_;
    for (std::size_t i = 0; i < history_.pixels.size(); ++i) {
        history_.pixels[i] += (current.pixels[i] - history_.pixels[i]) * inv;
    }
    return history_;
}

HdrImage accumulate(const HdrImage& history, const HdrImage& current, int frame_index, bool camera_moved) {
    if (camera_moved || frame_index <= 1) return current;
    if (history.size() != current.size()) throw std::invalid_argument("accumulate: image size mismatch");
    HdrImage out = history;
    const double inv = 1.0 / frame_index;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] += (current.pixels[i] - history.pixels[i]) * inv;
    return out;
}

std::uint8_t tonemap_channel(double c) {
    if (!(c > 0.0)) return 0;
    if (std::isinf(c)) return 255;
    const double mapped = c / (1.0 + c);
    return static_cast<std::uint8_t>(std::clamp(std::lround(srgb_encode(mapped) * 255.0), 0L, 255L));
}

Rgb8 tonemap(const Rgb& c) { return {tonemap_channel(c.r), tonemap_channel(c.g), tonemap_channel(c.b)}; }

LdrImage tonemap(const HdrImage& hdr) {
    LdrImage out(hdr.width, hdr.height);
    for (std::size_t i = 0; i < hdr.pixels.size(); ++i) out.pixels[i] = tonemap(hdr.pixels[i]);
    return out;
}

}  // namespace rayvr
