#pragma once

#include <span>
#include <vector>

#include "seamgrid/transform.hpp"
#include "seamgrid/vec3.hpp"

namespace seamgrid {

struct Camera {
    Vec3 position;
    Vec3 look_at;
    Vec3 up{0, 0, 1};
    double vertical_fov_deg = 45.0;
    int width = 0, height = 0;

    void validate() const;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

struct ImageBuffer {
    int width = 0, height = 0;
    std::vector<float> rgb;  // row-major, 3 floats per pixel

    float* pixel(int px, int py) { return rgb.data() + 3 * (std::size_t(py) * width + px); }
    const float* pixel(int px, int py) const {
        return rgb.data() + 3 * (std::size_t(py) * width + px);
    }
};

// pinhole ray through the center of pixel (px, py); row 0 is the top
Ray camera_ray(const Camera& cam, int px, int py);
// one ray per pixel, row-major
std::vector<Ray> generate_camera_rays(const Camera& cam);

struct RenderOptions {
    double step = 0.0;  // 0 = shortest unified aabb edge / 256
    Rgb background{1, 1, 1};
    double min_transmittance = 1e-4;  // early-out threshold
    int threads = 0;
};

double resolve_step(const MergedField& m, const RenderOptions& opt);

struct RaySample {
    double sigma;
    Rgb color;
    double step;
};

struct CompositeResult {
    Rgb rgb;              // accumulated emission, no background
    double weight_sum;    // sum of per-sample weights tau_j
    double transmittance; // residual after the last sample
};

// emission-absorption compositing: weight_j = T_j * (1 - exp(-sigma_j * step_j))
// with T_j the transmittance accumulated over samples before j
CompositeResult composite_emission_absorption(std::span<const RaySample> samples);

// marches the ray across the union of unified field bounds at a fixed
// step; background is NOT composited and rgb is unclamped
CompositeResult trace_ray(const MergedField& m, const Ray& ray, const RenderOptions& opt,
                          const DeltaOverrides* deltas = nullptr);

// full pixel value: trace, composite residual transmittance against the
// background, clamp to [0, 1]
Rgb render_ray(const MergedField& m, const Ray& ray, const RenderOptions& opt,
               const DeltaOverrides* deltas = nullptr);

ImageBuffer render_image(const MergedField& m, const Camera& cam, const RenderOptions& opt,
                         const DeltaOverrides* deltas = nullptr);

}  // namespace seamgrid
