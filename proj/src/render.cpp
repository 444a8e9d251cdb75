#include "seamgrid/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seamgrid/threading.hpp"

namespace seamgrid {

void Camera::validate() const {
    if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0))
        throw std::invalid_argument("camera fov must be in (0, 180) degrees");
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("camera resolution must be positive");
    Vec3 forward = look_at - position;
    if (forward.norm() == 0.0)
        throw std::invalid_argument("camera position equals look_at");
    if (forward.normalized().cross(up).norm() < 1e-9)
        throw std::invalid_argument("camera up vector is parallel to the view direction");
}

Ray camera_ray(const Camera& cam, int px, int py) {
    Vec3 forward = (cam.look_at - cam.position).normalized();
    Vec3 right = forward.cross(cam.up).normalized();
    Vec3 true_up = right.cross(forward);

    double tan_half = std::tan(cam.vertical_fov_deg * M_PI / 360.0);
    double aspect = double(cam.width) / double(cam.height);
    double u = ((px + 0.5) / cam.width * 2.0 - 1.0) * aspect * tan_half;
    double v = (1.0 - (py + 0.5) / cam.height * 2.0) * tan_half;
    return {cam.position, (forward + right * u + true_up * v).normalized()};
}

std::vector<Ray> generate_camera_rays(const Camera& cam) {
    cam.validate();
    std::vector<Ray> rays;
    rays.reserve(std::size_t(cam.width) * cam.height);
    for (int py = 0; py < cam.height; ++py)
        for (int px = 0; px < cam.width; ++px) rays.push_back(camera_ray(cam, px, py));
    return rays;
}

double resolve_step(const MergedField& m, const RenderOptions& opt) {
    if (opt.step > 0.0) return opt.step;
    double shortest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.entries.size(); ++i)
        shortest = std::min(shortest, m.entry_bounds(i).extent().min_component());
    return shortest / 256.0;
}

CompositeResult composite_emission_absorption(std::span<const RaySample> samples) {
    CompositeResult r{{}, 0.0, 1.0};
    for (const RaySample& s : samples) {
        double alpha = 1.0 - std::exp(-s.sigma * s.step);
        double w = r.transmittance * alpha;
        r.rgb += s.color * w;
        r.weight_sum += w;
        r.transmittance *= 1.0 - alpha;
    }
    return r;
}

namespace {

// intersection of a ray with an aabb; false when the box is missed
bool ray_aabb(const Ray& ray, const Aabb& box, double& t0, double& t1) {
    t0 = 0.0;
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        double o = ray.origin[a], d = ray.direction[a];
        if (std::abs(d) < 1e-300) {
            if (o < box.min[a] || o > box.max[a]) return false;
            continue;
        }
        double lo = (box.min[a] - o) / d;
        double hi = (box.max[a] - o) / d;
        if (lo > hi) std::swap(lo, hi);
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
        if (t0 > t1) return false;
    }
    return true;
}

}  // namespace

CompositeResult trace_ray(const MergedField& m, const Ray& ray, const RenderOptions& opt,
                          const DeltaOverrides* deltas) {
    // march over the union of all per-entry intervals
    double enter = std::numeric_limits<double>::infinity();
    double exit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        double t0, t1;
        if (ray_aabb(ray, m.entry_bounds(i), t0, t1)) {
            enter = std::min(enter, t0);
            exit = std::max(exit, t1);
        }
    }
    CompositeResult r{{}, 0.0, 1.0};
    if (!(enter < exit)) return r;

    double step = resolve_step(m, opt);
    auto count = std::size_t(std::ceil((exit - enter) / step));
    if (count == 0) count = 1;
    double dt = (exit - enter) / double(count);

    for (std::size_t j = 0; j < count; ++j) {
        double t = enter + (double(j) + 0.5) * dt;
        Vec3 x = ray.origin + ray.direction * t;
        double sigma = merged_density(m, x);
        if (sigma > 0.0) {
            double alpha = 1.0 - std::exp(-sigma * dt);
            double w = r.transmittance * alpha;
            r.rgb += merged_color(m, x, ray.direction, deltas) * w;
            r.weight_sum += w;
            r.transmittance *= 1.0 - alpha;
            if (r.transmittance < opt.min_transmittance) break;
        }
    }
    return r;
}

Rgb render_ray(const MergedField& m, const Ray& ray, const RenderOptions& opt,
               const DeltaOverrides* deltas) {
    CompositeResult r = trace_ray(m, ray, opt, deltas);
    Rgb c = r.rgb + opt.background * r.transmittance;
    return {std::clamp(c.x, 0.0, 1.0), std::clamp(c.y, 0.0, 1.0), std::clamp(c.z, 0.0, 1.0)};
}

ImageBuffer render_image(const MergedField& m, const Camera& cam, const RenderOptions& opt,
                         const DeltaOverrides* deltas) {
    cam.validate();
    ImageBuffer img{cam.width, cam.height,
                    std::vector<float>(std::size_t(cam.width) * cam.height * 3)};
    std::size_t n = std::size_t(cam.width) * cam.height;
    parallel_for(n, opt.threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t p = begin; p < end; ++p) {
            int px = int(p % cam.width), py = int(p / cam.width);
            Rgb c = render_ray(m, camera_ray(cam, px, py), opt, deltas);
            float* out = img.pixel(px, py);
            out[0] = float(c.x);
            out[1] = float(c.y);
            out[2] = float(c.z);
        }
    });
    return img;
}

}  // namespace seamgrid
