#include "seamgrid/optimizer.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace seamgrid {

SamplerOptions BlendConfig::sampler_options() const {
    SamplerOptions s;
    s.t_th = t_th;
    s.grid_res = grid_res;
    s.delta_step = delta_step;
    s.node_aligned = node_aligned;
    s.jitter = jitter;
    s.seed = seed;
    s.direction_mode = direction_mode;
    s.threads = threads;
    return s;
}

BlendState init_side_branch(const RadianceField& target, std::size_t entry) {
    target.validate();
    BlendState s;
    s.entry = entry;
    s.delta.assign(target.color.coeff_count(), 0.0);
    s.first_moment.assign(s.delta.size(), 0.0);
    s.second_moment.assign(s.delta.size(), 0.0);
    return s;
}

void adam_step(BlendState& state, std::span<const double> grad, const AdamParams& params) {
    if (grad.size() != state.delta.size())
        throw std::invalid_argument("gradient size does not match delta size");
    state.step_count += 1;
    double bc1 = 1.0 - std::pow(params.beta1, double(state.step_count));
    double bc2 = 1.0 - std::pow(params.beta2, double(state.step_count));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        double g = grad[i];
        if (!std::isfinite(g))
            throw std::runtime_error("non-finite gradient at coefficient " + std::to_string(i) +
                                     " (step " + std::to_string(state.step_count) + ")");
        double m = state.first_moment[i] =
            params.beta1 * state.first_moment[i] + (1.0 - params.beta1) * g;
        double v = state.second_moment[i] =
            params.beta2 * state.second_moment[i] + (1.0 - params.beta2) * g * g;
        state.delta[i] -= params.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + params.epsilon);
    }
}

DeltaOverrides BlendResult::delta_views(const MergedField& m) const {
    DeltaOverrides views(m.entries.size());
    for (const BlendState& s : states) views[s.entry] = s.delta;
    return views;
}

BlendResult blend(const MergedField& m, std::span<const RayBank* const> banks,
                  const BlendConfig& config,
                  const std::function<void(const LossReport&)>& on_iteration) {
    m.validate();
    if (banks.size() != m.entries.size())
        throw std::invalid_argument("need one ray bank slot per merged entry");
    if (config.iterations < 0) throw std::invalid_argument("iterations must be >= 0");

    SamplerOptions sopt = config.sampler_options();

    BlendProblem problem;
    problem.merged = &m;
    problem.lambda = config.lambda;
    problem.color_weight = config.color_weight;
    problem.threads = config.threads;

    BlendResult result;
    for (std::size_t i = 1; i < m.entries.size(); ++i) {
        if (!banks[i]) throw std::invalid_argument("missing ray bank for target entry");
        TargetSamples t;
        t.entry = i;
        t.boundary = detect_boundary(m, i, *banks[i], sopt);
        t.interior = sample_interior(m, i, *banks[i], sopt);
        problem.targets.push_back(std::move(t));
        result.states.push_back(init_side_branch(m.entries[i].field, i));
    }

    CompiledObjective objective(problem);
    DeltaOverrides deltas(m.entries.size());
    std::vector<std::vector<double>> grads;
    result.history.reserve(std::size_t(config.iterations));
    for (int iter = 0; iter < config.iterations; ++iter) {
        for (const BlendState& s : result.states) deltas[s.entry] = s.delta;
        LossReport report = objective.evaluate(deltas, &grads);
        for (std::size_t t = 0; t < result.states.size(); ++t)
            adam_step(result.states[t], grads[t], config.adam);
        result.history.push_back(report);
        if (on_iteration) on_iteration(report);
    }

    // soft monotonicity check over a 50-iteration window
    int violations = 0;
    for (std::size_t i = 50; i < result.history.size(); ++i)
        if (result.history[i].total > result.history[i - 50].total) ++violations;
    if (violations > 0)
        std::cerr << "warning: total loss rose over a 50-iteration window " << violations
                  << " time(s)\n";

    result.samples = std::move(problem.targets);
    return result;
}

BlendResult blend(const MergedField& m, const RayBank& bank, const BlendConfig& config,
                  const std::function<void(const LossReport&)>& on_iteration) {
    std::vector<const RayBank*> banks(m.entries.size(), &bank);
    return blend(m, banks, config, on_iteration);
}

}  // namespace seamgrid
