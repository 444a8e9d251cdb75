#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seamgrid/render.hpp"
#include "seamgrid/vec3.hpp"

namespace seamgrid {

struct PointToRay {
    Vec3 closest;
    double distance;
};

// foot of the perpendicular from x onto the infinite line through the
// ray; the projection parameter is deliberately not clamped to t >= 0
PointToRay point_to_ray_distance(const Ray& ray, const Vec3& x);

// The set of training-camera rays used to assign a view direction to an
// arbitrary point. An optional uniform-grid index accelerates the argmin;
// it expands cell shells around the query with a conservative lower bound
// and falls back to a full scan whenever the bound cannot certify the
// result, so indexed lookups always equal the exhaustive scan.
class RayBank {
  public:
    explicit RayBank(std::vector<Ray> rays);

    // every stride-th pixel ray from each camera, in camera order
    static RayBank from_cameras(std::span<const Camera> cameras, int pixel_stride = 16);

    void build_index(const Aabb& domain, int cells_per_axis = 32);
    bool has_index() const { return cells_ > 0; }

    const std::vector<Ray>& rays() const { return rays_; }
    std::size_t size() const { return rays_.size(); }

    std::size_t closest_index(const Vec3& x) const;       // indexed when available
    std::size_t closest_index_scan(const Vec3& x) const;  // exhaustive reference
    Vec3 closest_direction(const Vec3& x) const;
    std::vector<Vec3> assign_directions(std::span<const Vec3> points, int threads = 0) const;

  private:
    std::vector<Ray> rays_;
    // cubic cell grid over domain_
    Aabb domain_{};
    int cells_ = 0;
    double cell_size_ = 0.0;
    std::vector<std::vector<uint32_t>> cell_rays_;

    std::size_t cell_of(int ix, int iy, int iz) const;
    bool better(double d, std::size_t i, double best_d, std::size_t best_i) const;
};

}  // namespace seamgrid
