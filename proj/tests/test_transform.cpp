#include <doctest.h>

#include <cmath>

#include "seamgrid/transform.hpp"

using namespace seamgrid;

namespace {

RadianceField box_field(double density, Rgb color) {
    RadianceField f;
    f.aabb = {{0, 0, 0}, {1, 1, 1}};
    f.density.dims = {2, 2, 2};
    f.density.values.assign(8, density);
    f.color.dims = {2, 2, 2};
    f.color.degree = 0;
    f.color.coeffs.assign(f.color.coeff_count(), 0.0);
    for (std::size_t n = 0; n < 8; ++n)
        for (int ch = 0; ch < 3; ++ch) f.color.coeffs[n * 3 + ch] = color[ch] / kSh0;
    return f;
}

AffineTransform rotation_z_90() {
    AffineTransform t;
    t.m = {0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0};
    return t;
}

}  // namespace

TEST_CASE("transform_point applies rotation, scale, and translation") {
    CHECK((transform_point(AffineTransform::identity(), {1, 2, 3}) - Vec3{1, 2, 3}).norm() == 0.0);

    AffineTransform t = AffineTransform::translation({0.5, -1, 2});
    CHECK((transform_point(t, {1, 2, 3}) - Vec3{1.5, 1, 5}).norm() <= 1e-12);

    AffineTransform s;
    s.m = {2, 0, 0, 0, 0, 2, 0, 0, 0, 0, 2, 0};
    CHECK((transform_point(s, {1, 2, 3}) - Vec3{2, 4, 6}).norm() <= 1e-12);
}

TEST_CASE("transform_direction drops translation and renormalizes") {
    AffineTransform t = AffineTransform::translation({5, 5, 5});
    CHECK((transform_direction(t, {0, 1, 0}) - Vec3{0, 1, 0}).norm() <= 1e-12);

    Vec3 r = transform_direction(rotation_z_90(), {1, 0, 0});
    CHECK((r - Vec3{0, 1, 0}).norm() <= 1e-12);

    AffineTransform s;
    s.m = {2, 0, 0, 0, 0, 2, 0, 0, 0, 0, 2, 0};
    Vec3 d = transform_direction(s, {1, 0, 0});
    CHECK((d - Vec3{1, 0, 0}).norm() <= 1e-12);
    CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("select_field is a beta-weighted argmax with lowest-index ties") {
    MergedField m;
    m.entries.push_back({box_field(0.5, {1, 0, 0}), AffineTransform::identity(), 1.0});
    m.entries.push_back({box_field(2.0, {0, 1, 0}), AffineTransform::identity(), 1.0});
    m.validate();

    Vec3 x{0.5, 0.5, 0.5};
    CHECK(select_field(m, x) == 1);

    // precedence weight overrides raw density: 10 * 0.5 > 1 * 2.0
    m.entries[0].beta = 10.0;
    CHECK(select_field(m, x) == 0);
    CHECK(merged_density(m, x) == doctest::Approx(0.5).epsilon(1e-9));  // not scaled by beta

    // empty space goes to the source by the tie rule
    CHECK(select_field(m, {5, 5, 5}) == 0);
    CHECK(merged_density(m, {5, 5, 5}) == 0.0);
}

TEST_CASE("beta rescaling leaves the selector unchanged") {
    SplitMix64 rng(7);
    MergedField m;
    m.entries.push_back({box_field(3.0, {1, 0, 0}), AffineTransform::identity(), 1.3});
    m.entries.push_back(
        {box_field(5.0, {0, 1, 0}), AffineTransform::translation({0.4, 0, 0}), 0.8});
    m.validate();

    MergedField scaled = m;
    for (auto& e : scaled.entries) e.beta *= 37.5;

    for (int i = 0; i < 200; ++i) {
        Vec3 x{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)};
        CHECK(select_field(m, x) == select_field(scaled, x));
    }
}

TEST_CASE("merged evaluation is piecewise consistent with the selected field") {
    SplitMix64 rng(13);
    MergedField m;
    m.entries.push_back({box_field(6.0, {0.9, 0.1, 0.1}), AffineTransform::identity(), 1.0});
    m.entries.push_back({box_field(8.0, {0.1, 0.8, 0.2}), rotation_z_90(), 1.0});
    m.validate();

    for (int i = 0; i < 100; ++i) {
        Vec3 x{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-0.2, 1.2)};
        Vec3 d = rng.unit_vector();
        std::size_t s = select_field(m, x);
        const MergedEntry& e = m.entries[s];
        CHECK(merged_density(m, x) ==
              sample_density(e.field, transform_point(e.transform, x)));
        Rgb direct = sample_color(e.field, transform_point(e.transform, x),
                                  transform_direction(e.transform, d));
        CHECK((merged_color(m, x, d) - direct).norm() == 0.0);
    }
}

TEST_CASE("merged_color applies the delta override of the selected entry only") {
    MergedField m;
    m.entries.push_back({box_field(10.0, {0.5, 0.5, 0.5}), AffineTransform::identity(), 1.0});
    m.entries.push_back(
        {box_field(8.0, {0.1, 0.8, 0.2}), AffineTransform::translation({0.75, 0, 0}), 1.0});
    m.validate();

    std::vector<double> delta(m.entries[1].field.color.coeff_count(), 0.0);
    for (std::size_t n = 0; n < 8; ++n) delta[n * 3 + 0] = 0.4 / kSh0;  // red shift
    DeltaOverrides deltas(2);
    deltas[1] = delta;

    Vec3 d{0, 0, 1};
    Vec3 deep_target{-0.6, 0.5, 0.5};  // target occupies [-0.75, 0.25]
    CHECK(select_field(m, deep_target) == 1);
    Rgb with = merged_color(m, deep_target, d, &deltas);
    Rgb without = merged_color(m, deep_target, d);
    CHECK(with.x - without.x == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(with.y == doctest::Approx(without.y).epsilon(1e-12));

    // source point is unaffected
    Vec3 in_source{0.8, 0.5, 0.5};
    CHECK(select_field(m, in_source) == 0);
    CHECK((merged_color(m, in_source, d, &deltas) - merged_color(m, in_source, d)).norm() == 0.0);

    // all-zero override is exactly the plain evaluation
    std::vector<double> zeros(delta.size(), 0.0);
    deltas[1] = zeros;
    CHECK((merged_color(m, deep_target, d, &deltas) - without).norm() == 0.0);
}

TEST_CASE("merged field validation") {
    MergedField m;
    m.entries.push_back({box_field(1.0, {0, 0, 0}), AffineTransform::identity(), 1.0});
    CHECK_THROWS(m.validate());  // needs two entries

    m.entries.push_back({box_field(1.0, {0, 0, 0}), AffineTransform::identity(), -1.0});
    CHECK_THROWS(m.validate());  // bad beta
    m.entries[1].beta = 1.0;
    CHECK_NOTHROW(m.validate());

    m.entries[0].transform = AffineTransform::translation({1, 0, 0});
    CHECK_THROWS(m.validate());  // source transform must be identity
}

TEST_CASE("unified bounds invert the transform") {
    AffineTransform t = AffineTransform::translation({0.75, 0, 0});
    Aabb local{{0, 0, 0}, {1, 1, 1}};
    Aabb u = t.unified_bounds(local);
    CHECK(u.min.x == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(u.max.x == doctest::Approx(0.25).epsilon(1e-12));
    // rotation: the unified bounds of a unit box rotated 90deg about z
    Aabb r = rotation_z_90().unified_bounds(local);
    CHECK(r.min.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.max.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.min.y == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.max.y == doctest::Approx(0.0).epsilon(1e-12));
}
