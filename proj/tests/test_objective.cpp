#include <doctest.h>

#include <cmath>

#include "seamgrid/gradient_check.hpp"
#include "seamgrid/objective.hpp"
#include "test_scenes.hpp"

using namespace seamgrid;
using namespace seamgrid::testing;

namespace {

struct Fixture {
    MergedField m;
    RayBank bank;
    SampleSet boundary, interior;

    explicit Fixture(int grid_res = 7, Rgb source_color = {0.9, 0.6, 0.3},
                     Rgb target_color = {0.2, 0.4, 0.8})
        : m(overlap_boxes(source_color, target_color)), bank(scene_bank(m)) {
        SamplerOptions opt;
        opt.grid_res = grid_res;
        boundary = detect_boundary(m, 1, bank, opt);
        interior = sample_interior(m, 1, bank, opt);
    }

    DeltaOverrides deltas(std::span<const double> d) const {
        DeltaOverrides v(m.entries.size());
        v[1] = d;
        return v;
    }
};

}  // namespace

TEST_CASE("total_loss combines terms with the default weighting") {
    LossReport r = total_loss(1.0, 2.0, 0.1);
    CHECK(r.total == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(total_loss(0.7, 123.0, 0.0).total == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(total_loss(0.0, 0.0, 5.0).total == 0.0);
    CHECK_THROWS(total_loss(1.0, 1.0, -0.1));
    // decomposition invariant
    CHECK(std::abs(r.total - (r.color_loss + r.lambda * r.grad_loss)) <= 1e-9 * r.total);
}

TEST_CASE("color loss: matching fields give zero, unit gap gives one") {
    Fixture fx;
    DeltaOverrides none = fx.deltas({});

    SUBCASE("target equals source color everywhere") {
        Fixture same(7, {0.4, 0.5, 0.6}, {0.4, 0.5, 0.6});
        double l = color_loss(same.m, same.boundary, same.deltas({}));
        CHECK(l <= 1e-20);
    }
    SUBCASE("single point with a unit color gap") {
        SampleSet one;
        one.kind = RegionKind::Boundary;
        one.target_entry = 1;
        one.points = {{0.1, 0.5, 0.5}};
        one.directions = {{0, 0, 1}};
        // target renders (0.2, 0.4, 0.8); pin to (0.2, 0.4, 0.8) + (1,0,0)
        one.boundary_reference = {Rgb{1.2, 0.4, 0.8}};
        CHECK(color_loss(fx.m, one, none) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("delta closing the gap zeroes the loss") {
        SampleSet one;
        one.kind = RegionKind::Boundary;
        one.target_entry = 1;
        one.points = {{-0.5 + 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};  // not node aligned, still fine
        one.directions = {{0, 0, 1}};
        one.boundary_reference = {Rgb{0.2, 0.4, 0.8}};  // already the target color
        CHECK(color_loss(fx.m, one, none) <= 1e-18);
    }
}

TEST_CASE("grad loss self-consistency and translation invariance") {
    Fixture fx;
    // points whose +k neighbors all stay in the target
    SampleSet deep = fx.interior;
    deep.points.clear();
    deep.directions.clear();
    deep.interior_reference.clear();
    for (std::size_t i = 0; i < fx.interior.size(); ++i) {
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
            Vec3 y = fx.interior.points[i];
            y[a] += fx.interior.delta_step[a];
            if (select_field(fx.m, y) != 1) inside = false;
        }
        if (!inside) continue;
        deep.points.push_back(fx.interior.points[i]);
        deep.directions.push_back(fx.interior.directions[i]);
        deep.interior_reference.push_back(fx.interior.interior_reference[i]);
    }
    REQUIRE(deep.size() > 0);

    SUBCASE("zero delta reproduces the frozen differences exactly inside") {
        CHECK(grad_loss(fx.m, deep, fx.deltas({})) == 0.0);
        // seam-crossing edges carry the source/target mismatch instead
        CHECK(grad_loss(fx.m, fx.interior, fx.deltas({})) > 1e-6);
    }
    SUBCASE("constant delta cancels when neighbors stay interior") {
        std::vector<double> shift(fx.m.entries[1].field.color.coeff_count(), 0.37);
        CHECK(grad_loss(fx.m, deep, fx.deltas(shift)) <= 1e-18);
        // the same shift is NOT free once seam-crossing edges are included
        CHECK(grad_loss(fx.m, fx.interior, fx.deltas(shift)) > 1e-6);
    }
}

TEST_CASE("boundary gradient concentrates on the sampled node") {
    Fixture fx;
    // one boundary sample exactly on a color node of the target:
    // local (1, 2/3, 1/3) -> unified (0.25, 2/3, 1/3)
    SampleSet one;
    one.kind = RegionKind::Boundary;
    one.target_entry = 1;
    one.points = {{0.25, 2.0 / 3.0, 1.0 / 3.0}};
    one.directions = {{0, 0, 1}};
    one.boundary_reference = {Rgb{0.9, 0.6, 0.3}};

    BlendProblem p;
    p.merged = &fx.m;
    p.lambda = 0.0;
    p.targets.push_back({1, one, fx.interior});

    std::vector<std::vector<double>> grads;
    DeltaOverrides none = fx.deltas({});
    eval_loss_and_gradients(p, none, grads);

    const ShColorGrid& g = fx.m.entries[1].field.color;
    std::size_t node = g.dims.node_index(3, 2, 1);
    double expect_r = 2.0 * (0.2 - 0.9) * kSh0;  // 2 (c - c1) k0 / N, N = 1
    CHECK(grads[0][g.coeff_index(node, 0, 0)] == doctest::Approx(expect_r).epsilon(1e-9));
    // every other coefficient stays zero
    double off_node = 0.0;
    for (std::size_t i = 0; i < grads[0].size(); ++i)
        if (i / 3 != node) off_node += std::abs(grads[0][i]);
    CHECK(off_node == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
    GradCheckResult r = gradient_check(7, 8, 60, 0.1, 2);
    CHECK(r.max_rel_error <= 1e-4);
    CHECK(r.nonzero_gradients > 10);
}

TEST_CASE("loss is an exact quadratic along any delta line") {
    Fixture fx(6);
    SplitMix64 rng(77);
    std::size_t n = fx.m.entries[1].field.color.coeff_count();
    std::vector<double> a(n), b(n);
    for (double& v : a) v = rng.uniform(-0.5, 0.5);
    for (double& v : b) v = rng.uniform(-0.5, 0.5);

    BlendProblem p;
    p.merged = &fx.m;
    p.lambda = 0.1;
    p.targets.push_back({1, fx.boundary, fx.interior});

    auto eval_at = [&](double t) {
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = a[i] + t * b[i];
        DeltaOverrides v(fx.m.entries.size());
        v[1] = d;
        return eval_loss(p, v).total;
    };
    // third finite difference of a quadratic vanishes
    double f0 = eval_at(0), f1 = eval_at(1), f2 = eval_at(2), f3 = eval_at(3);
    double third = f3 - 3 * f2 + 3 * f1 - f0;
    double scale = std::max({std::abs(f0), std::abs(f1), std::abs(f2), std::abs(f3), 1.0});
    CHECK(std::abs(third) / scale <= 1e-7);
}

TEST_CASE("ladder chain: propagation matches the hand-solved normal equations") {
    // Target color grid is a 3x2 ladder (x by y, z flat). The high-x
    // column lies in the source-owned overlap (pinned), the top row's +y
    // neighbors fall into vacuum (anchoring those nodes to their original
    // color), and +z steps pair nodes with themselves. With constant
    // colors s (source) and c (target) the normal equations solve to
    //   u(0,0) = (s+c)/2   u(1,0) = (2s+c)/3
    //   u(0,1) = (s+2c)/3  u(1,1) = (s+c)/2
    // with minimum loss (5 lambda / 72) |s-c|^2.
    Rgb s{0.9, 0.6, 0.3}, c{0.2, 0.4, 0.8};
    MergedField m;
    m.entries.push_back({solid_box(10.0, s, 2, 0), AffineTransform::identity(), 1.0});
    RadianceField target = solid_box(8.0, c, 2, 0);
    target.color.dims = {3, 2, 1};
    target.color.coeffs.assign(target.color.coeff_count(), 0.0);
    for (std::size_t n = 0; n < target.color.dims.node_count(); ++n)
        for (int ch = 0; ch < 3; ++ch) target.color.coeffs[n * 3 + ch] = c[ch] / kSh0;
    m.entries.push_back({target, AffineTransform::translation({0.8, 0, 0}), 1.0});
    m.validate();

    RayBank bank = scene_bank(m);
    SamplerOptions opt;
    opt.node_aligned = true;
    SampleSet boundary = detect_boundary(m, 1, bank, opt);
    SampleSet interior = sample_interior(m, 1, bank, opt);
    REQUIRE(boundary.size() == 2);   // the x = 0.2 column
    REQUIRE(interior.size() == 4);   // the rest of the ladder

    const GridDims& dims = target.color.dims;
    std::vector<double> delta(target.color.coeff_count(), 0.0);
    auto set_node = [&](int ix, int iy, const Rgb& u) {
        std::size_t n = dims.node_index(ix, iy, 0);
        for (int ch = 0; ch < 3; ++ch) delta[n * 3 + ch] = (u[ch] - c[ch]) / kSh0;
    };
    set_node(0, 0, (s + c) * 0.5);
    set_node(1, 0, (s * 2.0 + c) / 3.0);
    set_node(0, 1, (s + c * 2.0) / 3.0);
    set_node(1, 1, (s + c) * 0.5);
    set_node(2, 0, s);  // pinned column
    set_node(2, 1, s);
    DeltaOverrides deltas(m.entries.size());
    deltas[1] = delta;

    BlendProblem p;
    p.merged = &m;
    p.lambda = 0.1;
    p.targets.push_back({1, boundary, interior});

    // stationarity at the hand optimum
    std::vector<std::vector<double>> grads;
    LossReport at_opt = eval_loss_and_gradients(p, deltas, grads);
    for (double g : grads[0]) CHECK(std::abs(g) <= 1e-12);

    double d2 = (s - c).norm2();
    CHECK(at_opt.total == doctest::Approx(5.0 * 0.1 / 72.0 * d2).epsilon(1e-9));

    // any perturbation increases the loss (global minimum of the quadratic)
    SplitMix64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> shaken = delta;
        for (double& v : shaken) v += rng.uniform(-0.05, 0.05);
        DeltaOverrides v2(m.entries.size());
        v2[1] = shaken;
        CHECK(eval_loss(p, v2).total >= at_opt.total - 1e-12);
    }
}

TEST_CASE("compiled objective matches the reference evaluation") {
    Fixture fx(6);
    SplitMix64 rng(123);
    std::size_t n = fx.m.entries[1].field.color.coeff_count();
    std::vector<double> delta(n);
    for (double& v : delta) v = rng.uniform(-0.4, 0.4);

    BlendProblem p;
    p.merged = &fx.m;
    p.lambda = 0.25;
    p.threads = 3;
    p.targets.push_back({1, fx.boundary, fx.interior});

    DeltaOverrides deltas = fx.deltas(delta);
    std::vector<std::vector<double>> ga, gb;
    LossReport ra = eval_loss_and_gradients(p, deltas, ga);
    CompiledObjective compiled(p);
    LossReport rb = compiled.evaluate(deltas, &gb);

    CHECK(ra.total == doctest::Approx(rb.total).epsilon(1e-12));
    CHECK(ra.color_loss == doctest::Approx(rb.color_loss).epsilon(1e-12));
    CHECK(ra.grad_loss == doctest::Approx(rb.grad_loss).epsilon(1e-12));
    REQUIRE(ga[0].size() == gb[0].size());
    for (std::size_t i = 0; i < ga[0].size(); ++i)
        CHECK(ga[0][i] == doctest::Approx(gb[0][i]).epsilon(1e-10));
}

TEST_CASE("gradient evaluation is bit-stable for a fixed thread count") {
    Fixture fx(6);
    BlendProblem p;
    p.merged = &fx.m;
    p.lambda = 0.1;
    p.threads = 3;
    p.targets.push_back({1, fx.boundary, fx.interior});
    std::vector<double> delta(fx.m.entries[1].field.color.coeff_count(), 0.123);
    DeltaOverrides deltas = fx.deltas(delta);

    std::vector<std::vector<double>> g1, g2;
    LossReport r1 = eval_loss_and_gradients(p, deltas, g1);
    LossReport r2 = eval_loss_and_gradients(p, deltas, g2);
    CHECK(r1.total == r2.total);
    for (std::size_t i = 0; i < g1[0].size(); ++i) CHECK(g1[0][i] == g2[0][i]);
}

TEST_CASE("empty sample sets are rejected") {
    Fixture fx;
    SampleSet empty;
    empty.kind = RegionKind::Boundary;
    empty.target_entry = 1;
    CHECK_THROWS(color_loss(fx.m, empty, fx.deltas({})));
    empty.kind = RegionKind::Interior;
    CHECK_THROWS(grad_loss(fx.m, empty, fx.deltas({})));
}
