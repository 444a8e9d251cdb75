#pragma once

#include <vector>

#include "seamgrid/optimizer.hpp"

namespace seamgrid {

// Node-aligned restriction of the blending objective for a degree-0
// target: unknowns are effective node colors u = k0 * (coeff + delta) at
// boundary and interior nodes, pins tie boundary nodes to the frozen
// source color, and difference rows tie interior nodes to their axis
// neighbors (or to a frozen constant when the neighbor leaves the
// target). Row weights carry the same mean normalization the iterative
// optimizer uses, so both minimize the identical quadratic.
struct NodeSystem {
    // w * (u[a] - (b < 0 ? 0 : u[b]) - q)^2
    struct Row {
        int a;
        int b;  // -1 when the row references no second unknown
        Rgb q;
        double w;
    };

    std::size_t target_entry = 0;
    std::vector<std::size_t> unknown_nodes;  // color-grid node indices
    std::vector<Row> pins;                   // boundary constraint rows
    std::vector<Row> diffs;                  // finite-difference rows

    std::size_t size() const { return unknown_nodes.size(); }
};

// Node-aligned assembly from the same frozen sample sets the optimizer
// consumes. Requires a degree-0 target, a translation-only transform,
// samples exactly on color nodes, and a two-entry merge (neighbors may
// not couple a second trainable field).
NodeSystem assemble_system(const MergedField& m, const SampleSet& boundary,
                           const SampleSet& interior, double lambda);

// convenience: builds the node-aligned sample sets itself
NodeSystem assemble_system(const MergedField& m, std::size_t target, const RayBank& bank,
                           const BlendConfig& config);

struct CgResult {
    std::vector<Rgb> solution;  // per unknown node
    bool converged = false;
    double residual = 0.0;  // worst relative residual across channels
    int iterations = 0;     // worst channel
};

// per-channel conjugate gradients on the normal equations, matrix-free;
// throws when the system has no pin rows (singular)
CgResult solve_cg(const NodeSystem& sys, double tol = 1e-8, int max_iter = 0, int threads = 0);

// zero-filled delta array realizing the oracle solution on the target
std::vector<double> delta_from_solution(const NodeSystem& sys, const CgResult& cg,
                                        const RadianceField& target);

struct OracleReport {
    double rmse = 0.0;
    std::size_t node_count = 0;
};

// RMSE between oracle node colors and the optimizer's frozen + delta
// node colors over the unknown set
OracleReport compare_with_optimizer(const NodeSystem& sys, const CgResult& cg,
                                    const RadianceField& target, const BlendState& state);

}  // namespace seamgrid
