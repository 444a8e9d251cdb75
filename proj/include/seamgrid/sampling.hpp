#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seamgrid/ray_bank.hpp"
#include "seamgrid/transform.hpp"

namespace seamgrid {

enum class RegionKind { Boundary, Interior };

enum class DirectionMode {
    ClosestRay,  // direction of the nearest training camera ray
    RandomUnit,  // test-only comparator: seeded uniform directions
};

// Frozen sample set feeding the blending losses. Its reference colors and
// color differences are computed once at construction and never change
// while the optimizer runs.
struct SampleSet {
    RegionKind kind = RegionKind::Boundary;
    std::size_t target_entry = 0;
    std::vector<Vec3> points;      // unified space
    std::vector<Vec3> directions;  // unit, one per point
    // boundary: source color at (x, d), the pinning target
    std::vector<Rgb> boundary_reference;
    // interior: per-axis finite differences of the original target color
    std::vector<std::array<Rgb, 3>> interior_reference;
    Vec3 delta_step;  // interior: unified-space step used per axis

    std::size_t size() const { return points.size(); }
};

struct SamplerOptions {
    double t_th = 1.0;  // minimal density considered non-empty
    int grid_res = 64;  // lattice nodes per axis
    // interior finite-difference step; 0 = unified-space pitch of the
    // target color grid along that axis
    Vec3 delta_step{0, 0, 0};
    // sample exactly at the target's color grid nodes instead of a free
    // lattice (requires a translation-only target transform)
    bool node_aligned = false;
    bool jitter = false;  // offset lattice points by up to half a cell
    uint64_t seed = 0;
    DirectionMode direction_mode = DirectionMode::ClosestRay;
    int threads = 0;
};

// resolves the per-axis finite-difference step for a target entry
Vec3 resolve_delta_step(const MergedField& m, std::size_t target, const SamplerOptions& opt);

// Lattice points owned by the source where the target is still dense:
// the seam where radiance pinning applies. Throws when the fields do not
// touch (empty boundary).
SampleSet detect_boundary(const MergedField& m, std::size_t target, const RayBank& bank,
                          const SamplerOptions& opt);

// Lattice points owned by the target, with frozen per-axis color
// differences of the original target. Throws when empty.
SampleSet sample_interior(const MergedField& m, std::size_t target, const RayBank& bank,
                          const SamplerOptions& opt);

std::string sample_set_to_json(const SampleSet& set);

}  // namespace seamgrid
