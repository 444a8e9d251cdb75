#include "seamgrid/sampling.hpp"

#include <json.hpp>
#include <stdexcept>

#include "seamgrid/threading.hpp"

namespace seamgrid {

namespace {

void check_target(const MergedField& m, std::size_t target) {
    if (target == 0 || target >= m.entries.size())
        throw std::invalid_argument("target index must name a non-source entry");
}

// lattice the sampler scans: either a regular grid over `box` or the
// target's color grid nodes mapped to unified space
std::vector<Vec3> lattice_points(const MergedField& m, std::size_t target, const Aabb& box,
                                 const SamplerOptions& opt) {
    std::vector<Vec3> pts;
    if (opt.node_aligned) {
        const MergedEntry& e = m.entries[target];
        if (!e.transform.linear_is_identity(1e-12))
            throw std::invalid_argument(
                "node-aligned sampling requires a translation-only target transform");
        const GridDims& d = e.field.color.dims;
        pts.reserve(d.node_count());
        for (int iz = 0; iz < d.nz; ++iz)
            for (int iy = 0; iy < d.ny; ++iy)
                for (int ix = 0; ix < d.nx; ++ix)
                    pts.push_back(e.transform.inverse_point(e.field.color_node_position(ix, iy, iz)));
        return pts;
    }
    if (!box.valid()) return pts;
    int res = opt.grid_res;
    if (res < 2) throw std::invalid_argument("lattice resolution must be >= 2");
    Vec3 cell = box.extent() / double(res - 1);
    SplitMix64 rng(opt.seed ^ 0x5eed5a3'1ce5ull);
    pts.reserve(std::size_t(res) * res * res);
    for (int iz = 0; iz < res; ++iz)
        for (int iy = 0; iy < res; ++iy)
            for (int ix = 0; ix < res; ++ix) {
                Vec3 p = box.min + Vec3{cell.x * ix, cell.y * iy, cell.z * iz};
                if (opt.jitter) {
                    p.x += cell.x * rng.uniform(-0.5, 0.5);
                    p.y += cell.y * rng.uniform(-0.5, 0.5);
                    p.z += cell.z * rng.uniform(-0.5, 0.5);
                }
                pts.push_back(p);
            }
    return pts;
}

std::vector<Vec3> make_directions(const RayBank& bank, std::span<const Vec3> points,
                                  const SamplerOptions& opt) {
    if (opt.direction_mode == DirectionMode::RandomUnit) {
        std::vector<Vec3> dirs(points.size());
        SplitMix64 rng(opt.seed ^ 0xd1ec7104'5eedull);
        for (Vec3& d : dirs) d = rng.unit_vector();
        return dirs;
    }
    return bank.assign_directions(points, opt.threads);
}

}  // namespace

Vec3 resolve_delta_step(const MergedField& m, std::size_t target, const SamplerOptions& opt) {
    check_target(m, target);
    const MergedEntry& e = m.entries[target];
    std::array<double, 9> inv = e.transform.linear_inverse();
    Vec3 pitch = e.field.color_pitch();
    Vec3 step;
    for (int a = 0; a < 3; ++a) {
        double d = opt.delta_step[a];
        if (d <= 0.0) {
            // length of the unified-space image of one local voxel step
            Vec3 col{inv[a], inv[3 + a], inv[6 + a]};
            d = (col * pitch[a]).norm();
        }
        step[a] = d;
    }
    return step;
}

SampleSet detect_boundary(const MergedField& m, std::size_t target, const RayBank& bank,
                          const SamplerOptions& opt) {
    check_target(m, target);
    if (opt.t_th <= 0.0) throw std::invalid_argument("density threshold must be positive");
    const MergedEntry& tgt = m.entries[target];

    Aabb box = m.entry_bounds(0).intersect(m.entry_bounds(target));
    std::vector<Vec3> lattice = lattice_points(m, target, box, opt);

    SampleSet set;
    set.kind = RegionKind::Boundary;
    set.target_entry = target;
    for (const Vec3& x : lattice) {
        if (select_field(m, x) != 0) continue;
        if (sample_density(tgt.field, transform_point(tgt.transform, x)) <= opt.t_th) continue;
        set.points.push_back(x);
    }
    if (set.points.empty())
        throw std::runtime_error(
            "empty boundary region: fields do not overlap above the density threshold");

    set.directions = make_directions(bank, set.points, opt);

    const MergedEntry& src = m.entries[0];
    set.boundary_reference.resize(set.points.size());
    parallel_for(set.points.size(), opt.threads, [&](std::size_t b, std::size_t e_, int) {
        for (std::size_t i = b; i < e_; ++i)
            set.boundary_reference[i] =
                sample_color(src.field, transform_point(src.transform, set.points[i]),
                             transform_direction(src.transform, set.directions[i]));
    });
    return set;
}

SampleSet sample_interior(const MergedField& m, std::size_t target, const RayBank& bank,
                          const SamplerOptions& opt) {
    check_target(m, target);
    const MergedEntry& tgt = m.entries[target];

    Aabb box = m.entry_bounds(target);
    std::vector<Vec3> lattice = lattice_points(m, target, box, opt);

    SampleSet set;
    set.kind = RegionKind::Interior;
    set.target_entry = target;
    set.delta_step = resolve_delta_step(m, target, opt);
    for (const Vec3& x : lattice)
        if (select_field(m, x) == target) set.points.push_back(x);
    if (set.points.empty())
        throw std::runtime_error("empty interior region: no lattice point is owned by the target");

    set.directions = make_directions(bank, set.points, opt);

    // freeze per-axis color differences of the original target field
    set.interior_reference.resize(set.points.size());
    parallel_for(set.points.size(), opt.threads, [&](std::size_t b, std::size_t e_, int) {
        for (std::size_t i = b; i < e_; ++i) {
            Vec3 local_d = transform_direction(tgt.transform, set.directions[i]);
            Rgb at = sample_color(tgt.field, transform_point(tgt.transform, set.points[i]), local_d);
            for (int a = 0; a < 3; ++a) {
                Vec3 xn = set.points[i];
                xn[a] += set.delta_step[a];
                Rgb ahead = sample_color(tgt.field, transform_point(tgt.transform, xn), local_d);
                set.interior_reference[i][a] = at - ahead;
            }
        }
    });
    return set;
}

std::string sample_set_to_json(const SampleSet& set) {
    nlohmann::json j;
    j["region"] = set.kind == RegionKind::Boundary ? "boundary" : "interior";
    j["target_entry"] = set.target_entry;
    j["count"] = set.points.size();
    auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); };
    auto& pts = j["points"] = nlohmann::json::array();
    auto& dirs = j["directions"] = nlohmann::json::array();
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        pts.push_back(vec(set.points[i]));
        dirs.push_back(vec(set.directions[i]));
    }
    if (set.kind == RegionKind::Boundary) {
        auto& refs = j["source_colors"] = nlohmann::json::array();
        for (const Rgb& c : set.boundary_reference) refs.push_back(vec(c));
    } else {
        j["delta_step"] = vec(set.delta_step);
        auto& refs = j["color_differences"] = nlohmann::json::array();
        for (const auto& v : set.interior_reference)
            refs.push_back(nlohmann::json::array({vec(v[0]), vec(v[1]), vec(v[2])}));
    }
    return j.dump();
}

}  // namespace seamgrid
