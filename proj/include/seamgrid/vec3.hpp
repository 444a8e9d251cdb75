#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace seamgrid {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
        return *this / n;
    }
    Vec3 cwise_mul(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
    Vec3 cwise_min(const Vec3& o) const {
        return {std::fmin(x, o.x), std::fmin(y, o.y), std::fmin(z, o.z)};
    }
    Vec3 cwise_max(const Vec3& o) const {
        return {std::fmax(x, o.x), std::fmax(y, o.y), std::fmax(z, o.z)};
    }
    double min_component() const { return std::fmin(x, std::fmin(y, z)); }
    double max_component() const { return std::fmax(x, std::fmax(y, z)); }
    bool all_finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// color triplet, stored unclamped until image write
using Rgb = Vec3;

struct Aabb {
    Vec3 min, max;

    bool valid() const { return min.x < max.x && min.y < max.y && min.z < max.z; }
    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
    Vec3 extent() const { return max - min; }
    Vec3 center() const { return (min + max) * 0.5; }
    Aabb intersect(const Aabb& o) const {
        return {min.cwise_max(o.min), max.cwise_min(o.max)};
    }
    Aabb unite(const Aabb& o) const {
        return {min.cwise_min(o.min), max.cwise_max(o.max)};
    }
    Aabb inflated(double r) const { return {min - Vec3{r, r, r}, max + Vec3{r, r, r}}; }
    double volume() const {
        Vec3 e = extent();
        return e.x * e.y * e.z;
    }
};

// deterministic 64-bit mix, used wherever seeded randomness must be
// reproducible across platforms and standard library versions
struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // uniform in [0, 1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    Vec3 unit_vector() {
        // rejection sample inside the unit ball, then normalize
        for (;;) {
            Vec3 v{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
            double n2 = v.norm2();
            if (n2 > 1e-6 && n2 <= 1.0) return v / std::sqrt(n2);
        }
    }
};

}  // namespace seamgrid
