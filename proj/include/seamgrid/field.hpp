#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "seamgrid/vec3.hpp"

namespace seamgrid {

struct GridDims {
    int nx = 0, ny = 0, nz = 0;

    std::size_t node_count() const {
        return std::size_t(nx) * std::size_t(ny) * std::size_t(nz);
    }
    std::size_t node_index(int ix, int iy, int iz) const {
        return std::size_t(ix) + std::size_t(nx) * (std::size_t(iy) + std::size_t(ny) * std::size_t(iz));
    }
    bool operator==(const GridDims&) const = default;
};

// Dense nonnegative extinction values on a node-centered lattice. Node
// (0,0,0) sits at aabb.min and node (nx-1,ny-1,nz-1) at aabb.max.
struct DensityGrid {
    GridDims dims;
    std::vector<double> values;  // x-fastest, size = node_count()
};

// Per-node spherical-harmonics color coefficients. Layout per node is
// channel-major: coeffs[node*3*B + channel*B + basis] with B = (degree+1)^2.
struct ShColorGrid {
    GridDims dims;
    int degree = 0;  // 0 or 1
    std::vector<double> coeffs;

    int basis_count() const { return (degree + 1) * (degree + 1); }
    std::size_t coeff_count() const { return dims.node_count() * 3 * basis_count(); }
    std::size_t coeff_index(std::size_t node, int channel, int basis) const {
        return node * 3 * basis_count() + std::size_t(channel) * basis_count() + basis;
    }
};

// One voxel radiance field: frozen geometry (density) plus view-dependent
// color over a shared axis-aligned box. Density and color grids may have
// different resolutions. Queries outside the box are empty (0 density,
// 0 color).
struct RadianceField {
    Aabb aabb;
    DensityGrid density;
    ShColorGrid color;

    // throws std::invalid_argument when an invariant is broken
    void validate() const;
    Vec3 color_node_position(int ix, int iy, int iz) const;
    // node spacing of the color grid in local units (axes with a single
    // node report the full extent)
    Vec3 color_pitch() const;
};

inline constexpr int kMaxShBasis = 4;
inline constexpr double kSh0 = 0.28209479177387814;  // 1 / (2 sqrt(pi))
inline constexpr double kSh1 = 0.4886025119029199;   // sqrt(3 / (4 pi))

int sh_basis_count(int degree);

// Real spherical harmonics up to degree 1, order (l,m) =
// (0,0), (1,-1), (1,0), (1,1) -> [k0, k1*y, k1*z, k1*x].
// d must be unit length within 1e-6; degree must be 0 or 1.
void eval_sh_basis(const Vec3& d, int degree, std::span<double> out);
std::array<double, kMaxShBasis> eval_sh_basis(const Vec3& d, int degree);

// Trilinear interpolation footprint of a point, used both to evaluate
// grids and to scatter analytic loss gradients through the same weights.
struct TrilinearStencil {
    std::array<std::size_t, 8> nodes;
    std::array<double, 8> weights;
};

// x must lie inside aabb; grid coordinates within 1e-9 of a node snap to
// it so node-aligned sampling is exact.
TrilinearStencil trilinear_stencil(const GridDims& dims, const Aabb& aabb, const Vec3& x);

double interpolate(const DensityGrid& grid, const Aabb& aabb, const Vec3& x);

// density at x; 0 outside the field's box, never negative
double sample_density(const RadianceField& field, const Vec3& x);

// view-dependent color at (x, d); unclamped, 0 outside the box.
// delta, when nonempty, is a trainable coefficient array congruent to
// field.color.coeffs and is added to the frozen coefficients.
Rgb sample_color(const RadianceField& field, const Vec3& x, const Vec3& d,
                 std::span<const double> delta = {});

}  // namespace seamgrid
