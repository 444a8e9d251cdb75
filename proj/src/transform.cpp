#include "seamgrid/transform.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace seamgrid {

AffineTransform AffineTransform::translation(const Vec3& t) {
    AffineTransform a;
    a.m[3] = t.x;
    a.m[7] = t.y;
    a.m[11] = t.z;
    return a;
}

bool AffineTransform::is_identity(double tol) const {
    static constexpr std::array<double, 12> id{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
    for (int i = 0; i < 12; ++i)
        if (std::abs(m[i] - id[i]) > tol) return false;
    return true;
}

bool AffineTransform::linear_is_identity(double tol) const {
    AffineTransform lin = *this;
    lin.m[3] = lin.m[7] = lin.m[11] = 0.0;
    return lin.is_identity(tol);
}

double AffineTransform::linear_det() const {
    return m[0] * (m[5] * m[10] - m[6] * m[9]) - m[1] * (m[4] * m[10] - m[6] * m[8]) +
           m[2] * (m[4] * m[9] - m[5] * m[8]);
}

std::array<double, 9> AffineTransform::linear_inverse() const {
    double det = linear_det();
    if (std::abs(det) < 1e-9)
        throw std::invalid_argument("transform linear part is singular");
    double inv = 1.0 / det;
    return {(m[5] * m[10] - m[6] * m[9]) * inv,  (m[2] * m[9] - m[1] * m[10]) * inv,
            (m[1] * m[6] - m[2] * m[5]) * inv,   (m[6] * m[8] - m[4] * m[10]) * inv,
            (m[0] * m[10] - m[2] * m[8]) * inv,  (m[2] * m[4] - m[0] * m[6]) * inv,
            (m[4] * m[9] - m[5] * m[8]) * inv,   (m[1] * m[8] - m[0] * m[9]) * inv,
            (m[0] * m[5] - m[1] * m[4]) * inv};
}

Vec3 AffineTransform::apply_linear(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[4] * v.x + m[5] * v.y + m[6] * v.z,
            m[8] * v.x + m[9] * v.y + m[10] * v.z};
}

Vec3 AffineTransform::inverse_point(const Vec3& local) const {
    std::array<double, 9> a = linear_inverse();
    Vec3 r{local.x - m[3], local.y - m[7], local.z - m[11]};
    return {a[0] * r.x + a[1] * r.y + a[2] * r.z,
            a[3] * r.x + a[4] * r.y + a[5] * r.z,
            a[6] * r.x + a[7] * r.y + a[8] * r.z};
}

Aabb AffineTransform::unified_bounds(const Aabb& local) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Aabb out{{inf, inf, inf}, {-inf, -inf, -inf}};
    for (int corner = 0; corner < 8; ++corner) {
        Vec3 p{corner & 1 ? local.max.x : local.min.x,
               corner & 2 ? local.max.y : local.min.y,
               corner & 4 ? local.max.z : local.min.z};
        Vec3 u = inverse_point(p);
        out.min = out.min.cwise_min(u);
        out.max = out.max.cwise_max(u);
    }
    return out;
}

Vec3 transform_point(const AffineTransform& t, const Vec3& x) {
    const auto& m = t.m;
    return {m[0] * x.x + m[1] * x.y + m[2] * x.z + m[3],
            m[4] * x.x + m[5] * x.y + m[6] * x.z + m[7],
            m[8] * x.x + m[9] * x.y + m[10] * x.z + m[11]};
}

Vec3 transform_direction(const AffineTransform& t, const Vec3& d) {
    Vec3 v = t.apply_linear(d);
    double n = v.norm();
    if (n < 1e-12)
        throw std::invalid_argument("direction maps to zero under transform");
    return v / n;
}

void MergedField::validate() const {
    if (entries.size() < 2)
        throw std::invalid_argument("merged field needs at least 2 entries");
    if (!entries[0].transform.is_identity(0.0))
        throw std::invalid_argument("source field transform must be the identity");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].beta <= 0.0)
            throw std::invalid_argument("beta must be positive");
        if (std::abs(entries[i].transform.linear_det()) < 1e-9)
            throw std::invalid_argument("transform linear part is singular");
        entries[i].field.validate();
    }
}

Aabb MergedField::entry_bounds(std::size_t i) const {
    return entries[i].transform.unified_bounds(entries[i].field.aabb);
}

Aabb MergedField::scene_bounds() const {
    Aabb out = entry_bounds(0);
    for (std::size_t i = 1; i < entries.size(); ++i) out = out.unite(entry_bounds(i));
    return out;
}

std::size_t select_field(const MergedField& m, const Vec3& x) {
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const MergedEntry& e = m.entries[i];
        double score = e.beta * sample_density(e.field, transform_point(e.transform, x));
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

double merged_density(const MergedField& m, const Vec3& x) {
    const MergedEntry& e = m.entries[select_field(m, x)];
    return sample_density(e.field, transform_point(e.transform, x));
}

Rgb merged_color(const MergedField& m, const Vec3& x, const Vec3& d,
                 const DeltaOverrides* deltas) {
    std::size_t s = select_field(m, x);
    const MergedEntry& e = m.entries[s];
    std::span<const double> delta;
    if (deltas && s < deltas->size()) delta = (*deltas)[s];
    return sample_color(e.field, transform_point(e.transform, x),
                        transform_direction(e.transform, d), delta);
}

}  // namespace seamgrid
