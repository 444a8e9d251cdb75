#include "seamgrid/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace seamgrid {

namespace {

void check(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

struct AxisStencil {
    int i0, i1;
    double w1;  // weight of i1; i0 gets 1 - w1
};

AxisStencil axis_stencil(double coord, int res) {
    if (res <= 1) return {0, 0, 0.0};
    // snap near-node coordinates so lattice-aligned samples are exact
    double r = std::round(coord);
    if (std::abs(coord - r) < 1e-9) coord = r;
    if (coord <= 0.0) return {0, 0, 0.0};
    if (coord >= double(res - 1)) return {res - 1, res - 1, 0.0};
    int i0 = int(coord);
    if (i0 > res - 2) i0 = res - 2;
    return {i0, i0 + 1, coord - double(i0)};
}

}  // namespace

void RadianceField::validate() const {
    check(aabb.valid(), "field aabb must satisfy min < max");
    check(density.dims.nx > 0 && density.dims.ny > 0 && density.dims.nz > 0,
          "density resolution must be positive");
    check(color.dims.nx > 0 && color.dims.ny > 0 && color.dims.nz > 0,
          "color resolution must be positive");
    check(color.degree == 0 || color.degree == 1, "sh degree must be 0 or 1");
    check(density.values.size() == density.dims.node_count(),
          "density value count does not match resolution");
    check(color.coeffs.size() == color.coeff_count(),
          "color coefficient count does not match resolution and degree");
    for (double v : density.values)
        check(v >= 0.0 && std::isfinite(v), "density values must be finite and >= 0");
    for (double v : color.coeffs)
        check(std::isfinite(v), "color coefficients must be finite");
}

Vec3 RadianceField::color_node_position(int ix, int iy, int iz) const {
    Vec3 e = aabb.extent();
    auto axis = [](double lo, double ext, int i, int res) {
        return res <= 1 ? lo : lo + ext * double(i) / double(res - 1);
    };
    return {axis(aabb.min.x, e.x, ix, color.dims.nx),
            axis(aabb.min.y, e.y, iy, color.dims.ny),
            axis(aabb.min.z, e.z, iz, color.dims.nz)};
}

Vec3 RadianceField::color_pitch() const {
    Vec3 e = aabb.extent();
    return {color.dims.nx > 1 ? e.x / double(color.dims.nx - 1) : e.x,
            color.dims.ny > 1 ? e.y / double(color.dims.ny - 1) : e.y,
            color.dims.nz > 1 ? e.z / double(color.dims.nz - 1) : e.z};
}

int sh_basis_count(int degree) {
    if (degree != 0 && degree != 1)
        throw std::invalid_argument("sh degree must be 0 or 1, got " + std::to_string(degree));
    return (degree + 1) * (degree + 1);
}

void eval_sh_basis(const Vec3& d, int degree, std::span<double> out) {
    int n = sh_basis_count(degree);
    if (out.size() < std::size_t(n))
        throw std::invalid_argument("sh basis output span too small");
    if (std::abs(d.norm2() - 1.0) > 3e-6)
        throw std::invalid_argument("sh basis direction must be unit length");
    out[0] = kSh0;
    if (degree >= 1) {
        out[1] = kSh1 * d.y;
        out[2] = kSh1 * d.z;
        out[3] = kSh1 * d.x;
    }
}

std::array<double, kMaxShBasis> eval_sh_basis(const Vec3& d, int degree) {
    std::array<double, kMaxShBasis> out{};
    eval_sh_basis(d, degree, out);
    return out;
}

TrilinearStencil trilinear_stencil(const GridDims& dims, const Aabb& aabb, const Vec3& x) {
    Vec3 e = aabb.extent();
    AxisStencil sx = axis_stencil((x.x - aabb.min.x) / e.x * double(dims.nx - 1), dims.nx);
    AxisStencil sy = axis_stencil((x.y - aabb.min.y) / e.y * double(dims.ny - 1), dims.ny);
    AxisStencil sz = axis_stencil((x.z - aabb.min.z) / e.z * double(dims.nz - 1), dims.nz);

    TrilinearStencil s;
    int k = 0;
    for (int cz = 0; cz < 2; ++cz)
        for (int cy = 0; cy < 2; ++cy)
            for (int cx = 0; cx < 2; ++cx) {
                double w = (cx ? sx.w1 : 1.0 - sx.w1) * (cy ? sy.w1 : 1.0 - sy.w1) *
                           (cz ? sz.w1 : 1.0 - sz.w1);
                s.nodes[k] = dims.node_index(cx ? sx.i1 : sx.i0, cy ? sy.i1 : sy.i0,
                                             cz ? sz.i1 : sz.i0);
                s.weights[k] = w;
                ++k;
            }
    return s;
}

double interpolate(const DensityGrid& grid, const Aabb& aabb, const Vec3& x) {
    TrilinearStencil s = trilinear_stencil(grid.dims, aabb, x);
    double v = 0.0;
    for (int k = 0; k < 8; ++k) v += s.weights[k] * grid.values[s.nodes[k]];
    return v;
}

double sample_density(const RadianceField& field, const Vec3& x) {
    if (!field.aabb.contains(x)) return 0.0;
    double v = interpolate(field.density, field.aabb, x);
    return v < 0.0 ? 0.0 : v;
}

Rgb sample_color(const RadianceField& field, const Vec3& x, const Vec3& d,
                 std::span<const double> delta) {
    if (!field.aabb.contains(x)) return {};
    const ShColorGrid& g = field.color;
    TrilinearStencil s = trilinear_stencil(g.dims, field.aabb, x);
    auto basis = eval_sh_basis(d, g.degree);
    const int nb = g.basis_count();

    Rgb out{};
    for (int k = 0; k < 8; ++k) {
        double w = s.weights[k];
        if (w == 0.0) continue;
        const double* c = g.coeffs.data() + s.nodes[k] * 3 * nb;
        for (int ch = 0; ch < 3; ++ch) {
            double acc = 0.0;
            for (int b = 0; b < nb; ++b) acc += c[ch * nb + b] * basis[b];
            out[ch] += w * acc;
        }
        if (!delta.empty()) {
            const double* dc = delta.data() + s.nodes[k] * 3 * nb;
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (int b = 0; b < nb; ++b) acc += dc[ch * nb + b] * basis[b];
                out[ch] += w * acc;
            }
        }
    }
    return out;
}

}  // namespace seamgrid
