#pragma once

// Hand-built scenes shared by the unit tests. The canonical layout puts
// the target box on the low-x side of the source with the overlap at the
// target's high-x end, so forward differences cross the seam.

#include <cmath>

#include "seamgrid/ray_bank.hpp"
#include "seamgrid/sampling.hpp"
#include "seamgrid/transform.hpp"

namespace seamgrid::testing {

inline RadianceField solid_box(double density, Rgb color, int res = 4, int degree = 0) {
    RadianceField f;
    f.aabb = {{0, 0, 0}, {1, 1, 1}};
    f.density.dims = {2, 2, 2};
    f.density.values.assign(8, density);
    f.color.dims = {res, res, res};
    f.color.degree = degree;
    f.color.coeffs.assign(f.color.coeff_count(), 0.0);
    for (std::size_t n = 0; n < f.color.dims.node_count(); ++n)
        for (int ch = 0; ch < 3; ++ch)
            f.color.coeffs[f.color.coeff_index(n, ch, 0)] = color[ch] / kSh0;
    return f;
}

// source box on [0,1]^3 (density 10), target on [-0.75, 0.25] x [0,1]^2
// (density 8); the overlap [0, 0.25] is source-owned
inline MergedField overlap_boxes(Rgb source_color = {0.9, 0.6, 0.3},
                                 Rgb target_color = {0.2, 0.4, 0.8}, int res = 4,
                                 int degree = 0) {
    MergedField m;
    m.entries.push_back({solid_box(10.0, source_color, res, degree),
                         AffineTransform::identity(), 1.0});
    m.entries.push_back({solid_box(8.0, target_color, res, degree),
                         AffineTransform::translation({0.75, 0, 0}), 1.0});
    m.validate();
    return m;
}

inline std::vector<Camera> ring_cameras(const Vec3& center, int count = 4, double radius = 3.0,
                                        double height = 0.0) {
    std::vector<Camera> cams;
    for (int i = 0; i < count; ++i) {
        double a = 2.0 * M_PI * i / count;
        Camera cam;
        cam.position = center + Vec3{radius * std::cos(a), radius * std::sin(a), height};
        cam.look_at = center;
        cam.up = {0, 0, 1};
        cam.width = 40;
        cam.height = 30;
        cams.push_back(cam);
    }
    return cams;
}

inline RayBank scene_bank(const MergedField& m, int count = 4) {
    Aabb bounds = m.scene_bounds();
    auto cams = ring_cameras(bounds.center(), count);
    RayBank bank = RayBank::from_cameras(cams, 16);
    bank.build_index(bounds.inflated(bounds.extent().max_component()));
    return bank;
}

}  // namespace seamgrid::testing
