#include "seamgrid/ray_bank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seamgrid/threading.hpp"

namespace seamgrid {

PointToRay point_to_ray_distance(const Ray& ray, const Vec3& x) {
    Vec3 off = ray.origin - x;
    Vec3 foot = ray.origin - ray.direction * off.dot(ray.direction);
    return {foot, (foot - x).norm()};
}

RayBank::RayBank(std::vector<Ray> rays) : rays_(std::move(rays)) {
    if (rays_.empty()) throw std::invalid_argument("ray bank must not be empty");
    for (Ray& r : rays_) r.direction = r.direction.normalized();
}

RayBank RayBank::from_cameras(std::span<const Camera> cameras, int pixel_stride) {
    if (pixel_stride < 1) throw std::invalid_argument("pixel stride must be >= 1");
    std::vector<Ray> rays;
    for (const Camera& cam : cameras) {
        cam.validate();
        std::size_t pixels = std::size_t(cam.width) * cam.height;
        for (std::size_t p = 0; p < pixels; p += std::size_t(pixel_stride))
            rays.push_back(camera_ray(cam, int(p % cam.width), int(p / cam.width)));
    }
    return RayBank(std::move(rays));
}

std::size_t RayBank::cell_of(int ix, int iy, int iz) const {
    return std::size_t(ix) + std::size_t(cells_) * (std::size_t(iy) + std::size_t(cells_) * iz);
}

void RayBank::build_index(const Aabb& domain, int cells_per_axis) {
    if (!domain.valid()) throw std::invalid_argument("index domain must be a valid aabb");
    if (cells_per_axis < 2) throw std::invalid_argument("index needs at least 2 cells per axis");

    // cube the domain so shell distance bounds use one cell size
    Vec3 c = domain.center();
    double half = 0.5 * domain.extent().max_component();
    domain_ = {c - Vec3{half, half, half}, c + Vec3{half, half, half}};
    cells_ = cells_per_axis;
    cell_size_ = 2.0 * half / cells_;
    cell_rays_.assign(std::size_t(cells_) * cells_ * cells_, {});

    // conservative DDA: walk each ray through the grid and record it in
    // every cell the segment inside the domain touches
    for (uint32_t ri = 0; ri < rays_.size(); ++ri) {
        const Ray& r = rays_[ri];
        double t0 = -std::numeric_limits<double>::infinity();
        double t1 = std::numeric_limits<double>::infinity();
        bool hit = true;
        for (int a = 0; a < 3 && hit; ++a) {
            double o = r.origin[a], d = r.direction[a];
            if (std::abs(d) < 1e-300) {
                if (o < domain_.min[a] || o > domain_.max[a]) hit = false;
                continue;
            }
            double lo = (domain_.min[a] - o) / d;
            double hi = (domain_.max[a] - o) / d;
            if (lo > hi) std::swap(lo, hi);
            t0 = std::max(t0, lo);
            t1 = std::min(t1, hi);
            if (t0 > t1) hit = false;
        }
        if (!hit) continue;
        // sample the segment at sub-cell resolution; the query-side safety
        // margin of one cell absorbs any cells a grazing line may skip
        double span = t1 - t0;
        int steps = std::max(1, int(std::ceil(span / (cell_size_ * 0.5))));
        std::size_t last = std::size_t(-1);
        for (int s = 0; s <= steps; ++s) {
            Vec3 p = r.origin + r.direction * (t0 + span * double(s) / steps);
            int ix = std::clamp(int((p.x - domain_.min.x) / cell_size_), 0, cells_ - 1);
            int iy = std::clamp(int((p.y - domain_.min.y) / cell_size_), 0, cells_ - 1);
            int iz = std::clamp(int((p.z - domain_.min.z) / cell_size_), 0, cells_ - 1);
            std::size_t cell = cell_of(ix, iy, iz);
            if (cell != last) {
                if (cell_rays_[cell].empty() || cell_rays_[cell].back() != ri)
                    cell_rays_[cell].push_back(ri);
                last = cell;
            }
        }
    }
}

bool RayBank::better(double d, std::size_t i, double best_d, std::size_t best_i) const {
    return d < best_d || (d == best_d && i < best_i);
}

std::size_t RayBank::closest_index_scan(const Vec3& x) const {
    std::size_t best = 0;
    double best_d = point_to_ray_distance(rays_[0], x).distance;
    for (std::size_t i = 1; i < rays_.size(); ++i) {
        double d = point_to_ray_distance(rays_[i], x).distance;
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::size_t RayBank::closest_index(const Vec3& x) const {
    if (cells_ == 0) return closest_index_scan(x);
    if (!domain_.contains(x)) return closest_index_scan(x);

    int cx = std::clamp(int((x.x - domain_.min.x) / cell_size_), 0, cells_ - 1);
    int cy = std::clamp(int((x.y - domain_.min.y) / cell_size_), 0, cells_ - 1);
    int cz = std::clamp(int((x.z - domain_.min.z) / cell_size_), 0, cells_ - 1);

    // distance from x to the domain boundary: rays that never enter the
    // domain (and thus were never indexed) cannot come closer than this
    double boundary = std::min({x.x - domain_.min.x, domain_.max.x - x.x,
                                x.y - domain_.min.y, domain_.max.y - x.y,
                                x.z - domain_.min.z, domain_.max.z - x.z});

    double best_d = std::numeric_limits<double>::infinity();
    std::size_t best = rays_.size();

    for (int ring = 0; ring < cells_; ++ring) {
        // everything in ring k or beyond is at least (k-1) whole cells
        // away; one extra cell of slack covers rasterization skips
        double ring_bound = double(ring - 2) * cell_size_;
        if (best < rays_.size() && best_d < ring_bound && best_d < boundary - cell_size_)
            return best;

        int lo_x = cx - ring, hi_x = cx + ring;
        int lo_y = cy - ring, hi_y = cy + ring;
        int lo_z = cz - ring, hi_z = cz + ring;
        bool any_inside = false;
        for (int iz = lo_z; iz <= hi_z; ++iz) {
            if (iz < 0 || iz >= cells_) continue;
            for (int iy = lo_y; iy <= hi_y; ++iy) {
                if (iy < 0 || iy >= cells_) continue;
                for (int ix = lo_x; ix <= hi_x; ++ix) {
                    if (ix < 0 || ix >= cells_) continue;
                    any_inside = true;
                    // shell only: skip the interior already visited
                    if (ring > 0 && ix != lo_x && ix != hi_x && iy != lo_y && iy != hi_y &&
                        iz != lo_z && iz != hi_z)
                        continue;
                    for (uint32_t ri : cell_rays_[cell_of(ix, iy, iz)]) {
                        double d = point_to_ray_distance(rays_[ri], x).distance;
                        if (better(d, ri, best_d, best)) {
                            best_d = d;
                            best = ri;
                        }
                    }
                }
            }
        }
        if (!any_inside) break;  // shells exhausted, all indexed rays seen
    }
    // after full shell coverage only rays that never enter the domain
    // remain, and those cannot beat a result closer than the boundary
    if (best < rays_.size() && best_d < boundary) return best;
    return closest_index_scan(x);
}

Vec3 RayBank::closest_direction(const Vec3& x) const {
    return rays_[closest_index(x)].direction;
}

std::vector<Vec3> RayBank::assign_directions(std::span<const Vec3> points, int threads) const {
    std::vector<Vec3> out(points.size());
    parallel_for(points.size(), threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) out[i] = closest_direction(points[i]);
    });
    return out;
}

}  // namespace seamgrid
