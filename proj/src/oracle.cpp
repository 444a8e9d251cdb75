#include "seamgrid/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "seamgrid/threading.hpp"

namespace seamgrid {

namespace {

// locates the color-grid node a unified-space point sits on; throws when
// the point is off-lattice
std::size_t node_at(const RadianceField& field, const AffineTransform& t, const Vec3& unified) {
    Vec3 local = transform_point(t, unified);
    Vec3 e = field.aabb.extent();
    const GridDims& d = field.color.dims;
    int idx[3];
    for (int a = 0; a < 3; ++a) {
        int res = a == 0 ? d.nx : (a == 1 ? d.ny : d.nz);
        double u = res <= 1 ? 0.0
                            : (local[a] - field.aabb.min[a]) / e[a] * double(res - 1);
        double r = std::round(u);
        if (std::abs(u - r) > 1e-6)
            throw std::invalid_argument("sample lattice is not aligned with the color grid");
        idx[a] = int(r);
        if (idx[a] < 0 || idx[a] >= res)
            throw std::invalid_argument("sample lattice node outside the color grid");
    }
    return d.node_index(idx[0], idx[1], idx[2]);
}

}  // namespace

NodeSystem assemble_system(const MergedField& m, const SampleSet& boundary,
                           const SampleSet& interior, double lambda) {
    if (boundary.kind != RegionKind::Boundary || interior.kind != RegionKind::Interior)
        throw std::invalid_argument("sample sets have the wrong region kinds");
    if (boundary.target_entry != interior.target_entry)
        throw std::invalid_argument("sample sets name different targets");
    if (m.entries.size() != 2)
        throw std::invalid_argument("oracle supports exactly one source and one target");
    std::size_t target = boundary.target_entry;
    const MergedEntry& tgt = m.entries[target];
    if (tgt.field.color.degree != 0)
        throw std::invalid_argument("oracle requires a degree-0 target");
    if (!tgt.transform.linear_is_identity(1e-12))
        throw std::invalid_argument("oracle requires a translation-only target transform");
    if (boundary.points.empty())
        throw std::invalid_argument("no boundary rows: system would be singular");

    NodeSystem sys;
    sys.target_entry = target;
    std::unordered_map<std::size_t, int> index_of;
    auto unknown_id = [&](std::size_t node) {
        auto [it, inserted] = index_of.try_emplace(node, int(sys.unknown_nodes.size()));
        if (inserted) sys.unknown_nodes.push_back(node);
        return it->second;
    };

    double pin_w = 1.0 / double(boundary.size());
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        int a = unknown_id(node_at(tgt.field, tgt.transform, boundary.points[i]));
        sys.pins.push_back({a, -1, boundary.boundary_reference[i], pin_w});
    }

    double diff_w = lambda / double(3 * interior.size());
    for (std::size_t i = 0; i < interior.size(); ++i) {
        int a = unknown_id(node_at(tgt.field, tgt.transform, interior.points[i]));
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 y = interior.points[i];
            y[axis] += interior.delta_step[axis];
            const Rgb& v = interior.interior_reference[i][axis];
            if (select_field(m, y) == target) {
                int b = unknown_id(node_at(tgt.field, tgt.transform, y));
                sys.diffs.push_back({a, b, v, diff_w});
            } else {
                // neighbor evaluates to a frozen merged color
                Rgb c = merged_color(m, y, interior.directions[i]);
                sys.diffs.push_back({a, -1, v + c, diff_w});
            }
        }
    }
    return sys;
}

NodeSystem assemble_system(const MergedField& m, std::size_t target, const RayBank& bank,
                           const BlendConfig& config) {
    SamplerOptions sopt = config.sampler_options();
    sopt.node_aligned = true;
    sopt.jitter = false;
    SampleSet boundary = detect_boundary(m, target, bank, sopt);
    SampleSet interior = sample_interior(m, target, bank, sopt);
    return assemble_system(m, boundary, interior, config.lambda);
}

namespace {

// out = (A^T A) v for one channel, rows applied in parallel with
// per-worker buffers reduced in worker order
void apply_normal(const NodeSystem& sys, int channel, const std::vector<double>& v,
                  std::vector<double>& out, std::vector<std::vector<double>>& scratch,
                  int threads) {
    const std::size_t n = v.size();
    int t = resolve_threads(threads);
    if (scratch.size() != std::size_t(t)) scratch.assign(std::size_t(t), {});
    auto run_rows = [&](const std::vector<NodeSystem::Row>& rows) {
        parallel_for(rows.size(), t, [&](std::size_t b, std::size_t e, int w) {
            std::vector<double>& buf = scratch[w];
            for (std::size_t i = b; i < e; ++i) {
                const NodeSystem::Row& row = rows[i];
                double r = v[row.a] - (row.b >= 0 ? v[row.b] : 0.0);
                buf[row.a] += row.w * r;
                if (row.b >= 0) buf[row.b] -= row.w * r;
            }
        });
    };
    for (auto& buf : scratch) buf.assign(n, 0.0);
    run_rows(sys.pins);
    run_rows(sys.diffs);
    out.assign(n, 0.0);
    for (auto& buf : scratch)
        for (std::size_t i = 0; i < n; ++i) out[i] += buf[i];
    (void)channel;
}

double dot(const std::vector<double>& a, const std::vector<double>& b, int threads) {
    int t = resolve_threads(threads);
    std::vector<double> partial(std::size_t(t), 0.0);
    parallel_for(a.size(), t, [&](std::size_t lo, std::size_t hi, int w) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[w] = s;
    });
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

}  // namespace

CgResult solve_cg(const NodeSystem& sys, double tol, int max_iter, int threads) {
    if (sys.pins.empty())
        throw std::invalid_argument("no boundary rows: system is singular");
    const std::size_t n = sys.size();
    if (max_iter <= 0) max_iter = int(10 * n) + 100;

    CgResult result;
    result.solution.assign(n, Rgb{});
    result.converged = true;

    std::vector<std::vector<double>> scratch;
    for (int ch = 0; ch < 3; ++ch) {
        // right-hand side: A^T b
        std::vector<double> rhs(n, 0.0);
        for (const auto& row : sys.pins) rhs[row.a] += row.w * row.q[ch];
        for (const auto& row : sys.diffs) {
            rhs[row.a] += row.w * row.q[ch];
            if (row.b >= 0) rhs[row.b] -= row.w * row.q[ch];
        }

        std::vector<double> x(n, 0.0), r = rhs, p = rhs, ap;
        double rhs_norm = std::sqrt(dot(rhs, rhs, threads));
        if (rhs_norm == 0.0) continue;  // zero solution
        double rr = dot(r, r, threads);
        int iter = 0;
        for (; iter < max_iter; ++iter) {
            if (std::sqrt(rr) / rhs_norm <= tol) break;
            apply_normal(sys, ch, p, ap, scratch, threads);
            double pap = dot(p, ap, threads);
            if (pap <= 0.0) break;  // numerical breakdown
            double alpha = rr / pap;
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
            for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
            double rr_next = dot(r, r, threads);
            double beta = rr_next / rr;
            rr = rr_next;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        }
        double rel = std::sqrt(rr) / rhs_norm;
        result.residual = std::max(result.residual, rel);
        result.iterations = std::max(result.iterations, iter);
        if (rel > tol) result.converged = false;
        for (std::size_t i = 0; i < n; ++i) result.solution[i][ch] = x[i];
    }
    return result;
}

std::vector<double> delta_from_solution(const NodeSystem& sys, const CgResult& cg,
                                        const RadianceField& target) {
    if (target.color.degree != 0)
        throw std::invalid_argument("oracle solution maps to a degree-0 target");
    std::vector<double> delta(target.color.coeff_count(), 0.0);
    for (std::size_t i = 0; i < sys.size(); ++i) {
        std::size_t node = sys.unknown_nodes[i];
        for (int ch = 0; ch < 3; ++ch) {
            double base = target.color.coeffs[node * 3 + ch];
            delta[node * 3 + ch] = cg.solution[i][ch] / kSh0 - base;
        }
    }
    return delta;
}

OracleReport compare_with_optimizer(const NodeSystem& sys, const CgResult& cg,
                                    const RadianceField& target, const BlendState& state) {
    if (state.delta.size() != target.color.coeff_count())
        throw std::invalid_argument("optimizer state does not match the target grid");
    if (target.color.degree != 0)
        throw std::invalid_argument("comparison requires a degree-0 target");
    double sum = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        std::size_t node = sys.unknown_nodes[i];
        for (int ch = 0; ch < 3; ++ch) {
            double opt = kSh0 * (target.color.coeffs[node * 3 + ch] + state.delta[node * 3 + ch]);
            double d = cg.solution[i][ch] - opt;
            sum += d * d;
        }
    }
    OracleReport rep;
    rep.node_count = sys.size();
    rep.rmse = sys.size() == 0 ? 0.0 : std::sqrt(sum / double(sys.size() * 3));
    return rep;
}

}  // namespace seamgrid
