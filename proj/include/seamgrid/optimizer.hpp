#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "seamgrid/objective.hpp"

namespace seamgrid {

struct AdamParams {
    double learning_rate = 3e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct BlendConfig {
    double lambda = 0.1;
    AdamParams adam;
    int iterations = 500;
    double t_th = 1.0;
    int grid_res = 64;
    Vec3 delta_step{0, 0, 0};  // 0 = target color pitch
    bool node_aligned = false;
    bool jitter = false;
    uint64_t seed = 0;
    DirectionMode direction_mode = DirectionMode::ClosestRay;
    int ray_stride = 16;
    double color_weight = 1.0;
    int threads = 0;

    SamplerOptions sampler_options() const;
};

// Trainable side branch over one frozen target: a zero-initialized
// additive coefficient grid plus optimizer moments. At step 0 the
// effective color equals the frozen target exactly.
struct BlendState {
    std::size_t entry = 0;
    std::vector<double> delta;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step_count = 0;
};

BlendState init_side_branch(const RadianceField& target, std::size_t entry);

// bias-corrected moment update; throws on non-finite gradient entries
void adam_step(BlendState& state, std::span<const double> grad, const AdamParams& params);

struct BlendResult {
    std::vector<BlendState> states;      // one per target entry, in entry order
    std::vector<LossReport> history;     // one per iteration
    std::vector<TargetSamples> samples;  // the frozen sets the run used
    DeltaOverrides delta_views(const MergedField& m) const;
};

// Builds frozen sample sets for every non-source entry, then iterates
// analytic gradients + adam over all targets jointly. banks[i] supplies
// the training rays for entry i (index 0 is unused). Warns on stderr if
// the total loss rises over any 50-iteration window.
BlendResult blend(const MergedField& m, std::span<const RayBank* const> banks,
                  const BlendConfig& config,
                  const std::function<void(const LossReport&)>& on_iteration = {});

// common case: one shared bank for every target
BlendResult blend(const MergedField& m, const RayBank& bank, const BlendConfig& config,
                  const std::function<void(const LossReport&)>& on_iteration = {});

}  // namespace seamgrid
