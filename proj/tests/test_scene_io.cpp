#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "seamgrid/io.hpp"
#include "seamgrid/scene.hpp"
#include "test_scenes.hpp"

using namespace seamgrid;
using namespace seamgrid::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("seamgrid_test_" + std::to_string(SplitMix64(std::random_device{}()).next()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kMinimalScene = R"({
  "fields": [
    {"file": "a.snrf", "transform": [1,0,0,0, 0,1,0,0, 0,0,1,0]},
    {"file": "b.snrf", "transform": [1,0,0,0.75, 0,1,0,0, 0,0,1,0], "beta": 2.0}
  ],
  "cameras": [{"position": [0,-3,0.5], "look_at": [0.5,0.5,0.5], "width": 8, "height": 6}]
})";

}  // namespace

TEST_CASE("field files round-trip bit-exactly") {
    TempDir tmp;
    SplitMix64 rng(2024);
    RadianceField f = solid_box(8.0, {0.1, 0.5, 0.9}, 5, 1);
    for (double& v : f.density.values) v = rng.uniform(0.0, 9.0);
    for (double& v : f.color.coeffs) v = rng.uniform(-2.0, 2.0);
    // values must be f32-representable for exactness; files store f32
    for (double& v : f.density.values) v = double(float(v));
    for (double& v : f.color.coeffs) v = double(float(v));

    fs::path p = tmp.path / "field.snrf";
    save_field(f, p);
    RadianceField g = load_field(p);
    CHECK(g.aabb.min == f.aabb.min);
    CHECK(g.color.degree == f.color.degree);
    REQUIRE(g.density.values.size() == f.density.values.size());
    for (std::size_t i = 0; i < f.density.values.size(); ++i)
        CHECK(g.density.values[i] == f.density.values[i]);
    for (std::size_t i = 0; i < f.color.coeffs.size(); ++i)
        CHECK(g.color.coeffs[i] == f.color.coeffs[i]);

    // a second save produces identical bytes
    fs::path p2 = tmp.path / "field2.snrf";
    save_field(g, p2);
    CHECK(read_bytes(p) == read_bytes(p2));
}

TEST_CASE("field loader rejects bad magic and truncation") {
    TempDir tmp;
    fs::path p = tmp.path / "bad.snrf";
    {
        std::ofstream out(p, std::ios::binary);
        out << "JUNKxxxxxxxxxxxxxxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(load_field(p), IoError);

    RadianceField f = solid_box(8.0, {0.1, 0.5, 0.9});
    fs::path good = tmp.path / "good.snrf";
    save_field(f, good);
    auto bytes = read_bytes(good);
    bytes.resize(bytes.size() / 2);
    fs::path cut = tmp.path / "cut.snrf";
    {
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size()));
    }
    CHECK_THROWS_AS(load_field(cut), IoError);
}

TEST_CASE("delta checkpoints round-trip against their target") {
    TempDir tmp;
    RadianceField target = solid_box(8.0, {0.3, 0.3, 0.3}, 4);
    SplitMix64 rng(77);
    std::vector<double> delta(target.color.coeff_count());
    for (double& v : delta) v = double(float(rng.uniform(-1.0, 1.0)));

    fs::path p = tmp.path / "delta_1.snrd";
    save_delta(delta, target, p);
    std::vector<double> back = load_delta(p, target);
    REQUIRE(back.size() == delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) CHECK(back[i] == delta[i]);

    // wrong magic: a field file is not a delta
    fs::path f = tmp.path / "field.snrf";
    save_field(target, f);
    CHECK_THROWS_AS(load_delta(f, target), IoError);
    // mismatched grid
    RadianceField other = solid_box(8.0, {0, 0, 0}, 6);
    CHECK_THROWS_AS(load_delta(p, other), IoError);
}

TEST_CASE("ppm writer emits the exact header and saturated bytes") {
    TempDir tmp;
    ImageBuffer img{4, 3, std::vector<float>(4 * 3 * 3, 1.0f)};
    fs::path p = tmp.path / "white.ppm";
    save_ppm(img, p);
    auto bytes = read_bytes(p);
    std::string header = "P6\n4 3\n255\n";
    REQUIRE(bytes.size() == header.size() + 36);
    CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
    for (std::size_t i = header.size(); i < bytes.size(); ++i)
        CHECK(static_cast<unsigned char>(bytes[i]) == 255);
}

TEST_CASE("raw image dumps round-trip exactly") {
    TempDir tmp;
    SplitMix64 rng(4);
    ImageBuffer img{5, 4, std::vector<float>(60)};
    for (float& v : img.rgb) v = float(rng.uniform(-0.2, 1.4));
    fs::path p = tmp.path / "img.raw";
    save_raw(img, p);
    ImageBuffer back = load_raw(p);
    CHECK(back.width == 5);
    CHECK(back.height == 4);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) CHECK(back.rgb[i] == img.rgb[i]);
}

TEST_CASE("scene parsing fills defaults and validates") {
    SceneDescription scene = parse_scene(kMinimalScene);
    CHECK(scene.fields.size() == 2);
    CHECK(scene.fields[0].beta == 1.0);
    CHECK(scene.fields[1].beta == 2.0);
    CHECK(scene.blend.lambda == doctest::Approx(0.1));
    CHECK(scene.blend.t_th == doctest::Approx(1.0));
    CHECK(scene.cameras.size() == 1);
}

TEST_CASE("scene parsing failure modes are distinct") {
    SUBCASE("malformed json") {
        try {
            parse_scene("{not json");
            FAIL("expected");
        } catch (const SceneError& e) {
            CHECK(std::string(e.what()).find("malformed") != std::string::npos);
        }
    }
    SUBCASE("missing source") {
        try {
            parse_scene(R"({"fields": [], "cameras": []})");
            FAIL("expected");
        } catch (const SceneError& e) {
            CHECK(std::string(e.what()).find("source") != std::string::npos);
        }
    }
    SUBCASE("non-identity source transform") {
        std::string text = kMinimalScene;
        text.replace(text.find("[1,0,0,0,"), 9, "[1,0,0,9,");
        try {
            parse_scene(text);
            FAIL("expected");
        } catch (const SceneError& e) {
            CHECK(std::string(e.what()).find("identity") != std::string::npos);
        }
    }
    SUBCASE("bad matrix shape") {
        std::string text = R"({
          "fields": [{"file": "a.snrf", "transform": [1,0,0,0, 0,1,0,0, 0,0,1]}],
          "cameras": [{"position": [0,-3,0.5], "look_at": [0.5,0.5,0.5]}]
        })";
        try {
            parse_scene(text);
            FAIL("expected");
        } catch (const SceneError& e) {
            CHECK(std::string(e.what()).find("12 numbers") != std::string::npos);
        }
    }
    SUBCASE("missing cameras") {
        CHECK_THROWS_AS(
            parse_scene(R"({"fields": [{"file": "a.snrf"}]})"), SceneError);
    }
}

TEST_CASE("assemble_scene requires the referenced files") {
    TempDir tmp;
    SceneDescription scene = parse_scene(kMinimalScene);
    CHECK_THROWS_AS(assemble_scene(scene, tmp.path), SceneError);
}

TEST_CASE("scene json round-trips through the writer") {
    SceneDescription scene = parse_scene(kMinimalScene);
    SceneDescription back = parse_scene(scene_to_json(scene));
    CHECK(back.fields.size() == scene.fields.size());
    CHECK(back.fields[1].beta == scene.fields[1].beta);
    CHECK(back.fields[1].transform.m == scene.fields[1].transform.m);
    CHECK(back.cameras.size() == scene.cameras.size());
}

TEST_CASE("synthetic scenes are deterministic and well-formed") {
    for (auto kind :
         {SyntheticKind::TwoBox, SyntheticKind::StripedSpherePair, SyntheticKind::LShape}) {
        SyntheticScene a = generate_synthetic(kind, 42, 16);
        SyntheticScene b = generate_synthetic(kind, 42, 16);
        REQUIRE(a.fields.size() == b.fields.size());
        for (std::size_t i = 0; i < a.fields.size(); ++i) {
            CHECK(a.fields[i].color.coeffs == b.fields[i].color.coeffs);
            CHECK(a.fields[i].density.values == b.fields[i].density.values);
            for (double v : a.fields[i].density.values) CHECK(v >= 0.0);
        }
        // a different seed moves the palette
        SyntheticScene c = generate_synthetic(kind, 43, 16);
        CHECK(a.fields[0].color.coeffs != c.fields[0].color.coeffs);
        CHECK_NOTHROW(a.to_merged());
    }
}

TEST_CASE("two_box overlap covers at least a tenth of the target") {
    SyntheticScene s = generate_synthetic(SyntheticKind::TwoBox, 7, 16);
    MergedField m = s.to_merged();
    Aabb overlap = m.entry_bounds(0).intersect(m.entry_bounds(1));
    REQUIRE(overlap.valid());
    CHECK(overlap.volume() >= 0.1 * m.entry_bounds(1).volume());
}

TEST_CASE("striped target produces nonzero frozen differences across stripes") {
    SyntheticScene s = generate_synthetic(SyntheticKind::TwoBox, 7, 16);
    MergedField m = s.to_merged();
    RayBank bank = scene_bank(m);
    SamplerOptions opt;
    opt.grid_res = 12;
    SampleSet in = sample_interior(m, 1, bank, opt);
    double max_v = 0.0;
    for (const auto& v : in.interior_reference)
        for (int a = 0; a < 3; ++a) max_v = std::max(max_v, v[a].norm());
    CHECK(max_v > 0.05);
}

TEST_CASE("generated scene files round-trip through save and load") {
    TempDir tmp;
    SyntheticScene s = generate_synthetic(SyntheticKind::TwoBox, 3, 8);
    save_field(s.fields[0], tmp.path / "source.snrf");
    save_field(s.fields[1], tmp.path / "target_1.snrf");

    SceneDescription desc;
    desc.fields.push_back({"source.snrf", s.transforms[0], s.betas[0], {}});
    desc.fields.push_back({"target_1.snrf", s.transforms[1], s.betas[1], {}});
    desc.cameras = s.cameras;
    desc.render = s.render;

    LoadedScene loaded = assemble_scene(desc, tmp.path);
    CHECK(loaded.merged.entries.size() == 2);
    CHECK(loaded.banks.size() == 2);
    CHECK(loaded.banks[0] == loaded.banks[1]);  // shared bank
    Camera cam = loaded.render_camera(0);
    CHECK(cam.width == desc.render.width);
}
