#pragma once

#include <array>
#include <span>
#include <vector>

#include "seamgrid/field.hpp"
#include "seamgrid/vec3.hpp"

namespace seamgrid {

// Row-major 3x4 affine map from unified space into a field's local frame.
// Points transform with an implicit homogeneous 1 (translation applies),
// directions with an implicit 0 (translation drops out).
struct AffineTransform {
    std::array<double, 12> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};

    static AffineTransform identity() { return {}; }
    static AffineTransform translation(const Vec3& t);

    bool is_identity(double tol = 0.0) const;
    bool linear_is_identity(double tol = 0.0) const;
    double linear_det() const;
    // inverse of the linear 3x3 block; throws when |det| < 1e-9
    std::array<double, 9> linear_inverse() const;
    Vec3 apply_linear(const Vec3& v) const;
    // maps a local-frame box back to unified space and returns the
    // axis-aligned bounds of its 8 corners
    Aabb unified_bounds(const Aabb& local) const;
    Vec3 inverse_point(const Vec3& local) const;
};

Vec3 transform_point(const AffineTransform& t, const Vec3& x);
// linear part applied and renormalized; throws if the image is zero
Vec3 transform_direction(const AffineTransform& t, const Vec3& d);

struct MergedEntry {
    RadianceField field;
    AffineTransform transform;
    double beta = 1.0;
};

// Ordered piecewise field. Entry 0 is the source and must carry the
// identity transform; each point is owned by the entry whose
// beta-weighted density is largest (ties go to the lowest index, so the
// source wins empty space).
struct MergedField {
    std::vector<MergedEntry> entries;

    void validate() const;
    Aabb entry_bounds(std::size_t i) const;  // unified-space bounds of entry i
    Aabb scene_bounds() const;               // union over entries
};

std::size_t select_field(const MergedField& m, const Vec3& x);

// density of the selected field; beta scales selection only, never the value
double merged_density(const MergedField& m, const Vec3& x);

// optional per-entry trainable color coefficient arrays; an empty span
// means the entry has no delta. Indexing matches MergedField::entries.
using DeltaOverrides = std::vector<std::span<const double>>;

Rgb merged_color(const MergedField& m, const Vec3& x, const Vec3& d,
                 const DeltaOverrides* deltas = nullptr);

}  // namespace seamgrid
