#include "seamgrid/gradient_check.hpp"

#include <cmath>

#include "seamgrid/optimizer.hpp"

namespace seamgrid {

namespace {

RadianceField random_box_field(SplitMix64& rng, const Aabb& aabb, double density, int res,
                               int degree) {
    RadianceField f;
    f.aabb = aabb;
    f.density.dims = {2, 2, 2};
    f.density.values.assign(8, density);
    f.color.dims = {res, res, res};
    f.color.degree = degree;
    f.color.coeffs.resize(f.color.coeff_count());
    for (double& c : f.color.coeffs) c = rng.uniform(-0.5, 0.5) / kSh0;
    return f;
}

}  // namespace

GradCheckResult gradient_check(uint64_t seed, int res, int n_coefficients, double lambda,
                               int threads) {
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ull + 0x6ead);
    int degree = int(rng.next() & 1);

    MergedField m;
    m.entries.push_back(
        {random_box_field(rng, {{0, 0, 0}, {1, 1, 1}}, 10.0, res, degree), {}, 1.0});
    Vec3 offset{0.6 + rng.uniform(-0.05, 0.05), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
    m.entries.push_back({random_box_field(rng, {{0, 0, 0}, {1, 1, 1}}, 8.0, res, degree),
                         AffineTransform::translation(-offset), 1.0});
    m.validate();

    std::vector<Camera> cams;
    Vec3 center = m.scene_bounds().center();
    for (int i = 0; i < 3; ++i) {
        double a = 2.0 * M_PI * i / 3.0 + rng.uniform(0.0, 0.5);
        Camera cam;
        cam.position = center + Vec3{2.5 * std::cos(a), 2.5 * std::sin(a), rng.uniform(-0.4, 0.4)};
        cam.look_at = center;
        cam.width = 40;
        cam.height = 30;
        cams.push_back(cam);
    }
    Aabb bounds = m.scene_bounds();
    RayBank bank = RayBank::from_cameras(cams, 16);
    bank.build_index(bounds.inflated(bounds.extent().max_component()));

    SamplerOptions sopt;
    sopt.t_th = 1.0;
    sopt.grid_res = 10;
    sopt.seed = seed;
    sopt.threads = threads;

    BlendProblem p;
    p.merged = &m;
    p.lambda = lambda;
    p.threads = threads;
    p.targets.push_back({1, detect_boundary(m, 1, bank, sopt), sample_interior(m, 1, bank, sopt)});

    // evaluate at a random nonzero delta so the check is not a special case
    std::vector<double> delta(m.entries[1].field.color.coeff_count());
    for (double& d : delta) d = rng.uniform(-0.3, 0.3);

    CompiledObjective objective(p);
    DeltaOverrides deltas(m.entries.size());
    deltas[1] = delta;
    std::vector<std::vector<double>> grads;
    objective.evaluate(deltas, &grads);

    const double h = 1e-3;
    GradCheckResult result;
    result.coefficients_checked = std::size_t(n_coefficients);
    for (int c = 0; c < n_coefficients; ++c) {
        std::size_t i = std::size_t(rng.next() % delta.size());
        double saved = delta[i];
        delta[i] = saved + h;
        double up = objective.evaluate(deltas).total;
        delta[i] = saved - h;
        double down = objective.evaluate(deltas).total;
        delta[i] = saved;
        double fd = (up - down) / (2.0 * h);
        double analytic = grads[0][i];
        if (analytic != 0.0) ++result.nonzero_gradients;
        double rel = std::abs(analytic - fd) /
                     std::max({std::abs(analytic), std::abs(fd), 1e-6});
        result.max_rel_error = std::max(result.max_rel_error, rel);
    }
    return result;
}

}  // namespace seamgrid
