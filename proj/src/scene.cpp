#include "seamgrid/scene.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace seamgrid {

using nlohmann::json;

namespace {

Vec3 vec_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw SceneError(std::string(what) + " must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Camera camera_from(const json& j) {
    Camera cam;
    cam.position = vec_from(j.at("position"), "camera position");
    cam.look_at = vec_from(j.at("look_at"), "camera look_at");
    if (j.contains("up")) cam.up = vec_from(j["up"], "camera up");
    cam.vertical_fov_deg = j.value("fov", 45.0);
    cam.width = j.value("width", 160);
    cam.height = j.value("height", 120);
    cam.validate();
    return cam;
}

json camera_to(const Camera& cam) {
    return json{{"position", {cam.position.x, cam.position.y, cam.position.z}},
                {"look_at", {cam.look_at.x, cam.look_at.y, cam.look_at.z}},
                {"up", {cam.up.x, cam.up.y, cam.up.z}},
                {"fov", cam.vertical_fov_deg},
                {"width", cam.width},
                {"height", cam.height}};
}

AffineTransform transform_from(const json& j, std::size_t entry) {
    if (!j.is_array() || j.size() != 12)
        throw SceneError("field " + std::to_string(entry) +
                         ": transform must be 12 numbers (row-major 3x4)");
    AffineTransform t;
    for (int i = 0; i < 12; ++i) t.m[i] = j[i].get<double>();
    return t;
}

DirectionMode direction_mode_from(const std::string& s) {
    if (s == "closest_ray") return DirectionMode::ClosestRay;
    if (s == "random") return DirectionMode::RandomUnit;
    throw SceneError("unknown direction mode '" + s + "' (closest_ray or random)");
}

BlendConfig blend_from(const json& j) {
    BlendConfig c;
    c.lambda = j.value("lambda", c.lambda);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.iterations = j.value("iterations", c.iterations);
    c.t_th = j.value("t_th", c.t_th);
    c.grid_res = j.value("grid_res", c.grid_res);
    if (j.contains("delta_step")) c.delta_step = vec_from(j["delta_step"], "delta_step");
    c.node_aligned = j.value("node_aligned", c.node_aligned);
    c.jitter = j.value("jitter", c.jitter);
    c.seed = j.value("seed", c.seed);
    if (j.contains("direction_mode"))
        c.direction_mode = direction_mode_from(j["direction_mode"].get<std::string>());
    c.ray_stride = j.value("ray_stride", c.ray_stride);
    c.color_weight = j.value("color_weight", c.color_weight);
    if (c.lambda < 0.0) throw SceneError("lambda must be nonnegative");
    if (c.t_th <= 0.0) throw SceneError("t_th must be positive");
    return c;
}

}  // namespace

SceneDescription parse_scene(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SceneError(std::string("scene JSON is malformed: ") + e.what());
    }

    SceneDescription scene;
    if (!j.contains("fields") || !j["fields"].is_array() || j["fields"].empty())
        throw SceneError("scene is missing the source field (fields[0])");

    for (std::size_t i = 0; i < j["fields"].size(); ++i) {
        const json& jf = j["fields"][i];
        SceneField f;
        if (!jf.contains("file")) throw SceneError("field " + std::to_string(i) + ": missing file");
        f.file = jf["file"].get<std::string>();
        if (jf.contains("transform")) f.transform = transform_from(jf["transform"], i);
        f.beta = jf.value("beta", 1.0);
        if (f.beta <= 0.0)
            throw SceneError("field " + std::to_string(i) + ": beta must be positive");
        if (jf.contains("cameras"))
            for (const json& jc : jf["cameras"]) f.cameras.push_back(camera_from(jc));
        scene.fields.push_back(std::move(f));
    }
    if (!scene.fields[0].transform.is_identity(0.0))
        throw SceneError("field 0 is the source and its transform must be the identity");

    if (!j.contains("cameras") || !j["cameras"].is_array() || j["cameras"].empty())
        throw SceneError("scene needs at least one camera");
    for (const json& jc : j["cameras"]) scene.cameras.push_back(camera_from(jc));

    if (j.contains("render")) {
        const json& jr = j["render"];
        scene.render.step = jr.value("step", 0.0);
        if (jr.contains("background"))
            scene.render.background = vec_from(jr["background"], "background");
        scene.render.width = jr.value("width", 0);
        scene.render.height = jr.value("height", 0);
    }
    if (j.contains("blend")) scene.blend = blend_from(j["blend"]);
    return scene;
}

SceneDescription load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

std::string scene_to_json(const SceneDescription& scene) {
    json j;
    j["fields"] = json::array();
    for (const SceneField& f : scene.fields) {
        json jf{{"file", f.file}, {"beta", f.beta}};
        jf["transform"] = f.transform.m;
        if (!f.cameras.empty()) {
            jf["cameras"] = json::array();
            for (const Camera& c : f.cameras) jf["cameras"].push_back(camera_to(c));
        }
        j["fields"].push_back(std::move(jf));
    }
    j["cameras"] = json::array();
    for (const Camera& c : scene.cameras) j["cameras"].push_back(camera_to(c));
    j["render"] = {{"step", scene.render.step},
                   {"background",
                    {scene.render.background.x, scene.render.background.y,
                     scene.render.background.z}},
                   {"width", scene.render.width},
                   {"height", scene.render.height}};
    const BlendConfig& b = scene.blend;
    j["blend"] = {{"lambda", b.lambda},
                  {"learning_rate", b.adam.learning_rate},
                  {"iterations", b.iterations},
                  {"t_th", b.t_th},
                  {"grid_res", b.grid_res},
                  {"node_aligned", b.node_aligned},
                  {"seed", b.seed},
                  {"ray_stride", b.ray_stride}};
    return j.dump(2) + "\n";
}

Camera LoadedScene::render_camera(std::size_t index) const {
    if (index >= desc.cameras.size())
        throw SceneError("camera index " + std::to_string(index) + " out of range");
    Camera cam = desc.cameras[index];
    if (desc.render.width > 0) cam.width = desc.render.width;
    if (desc.render.height > 0) cam.height = desc.render.height;
    return cam;
}

LoadedScene assemble_scene(const SceneDescription& desc, const std::filesystem::path& base_dir) {
    LoadedScene out;
    out.desc = desc;
    for (const SceneField& f : desc.fields) {
        std::filesystem::path p = f.file;
        if (p.is_relative()) p = base_dir / p;
        if (!std::filesystem::exists(p))
            throw SceneError("referenced field file does not exist: " + p.string());
        out.merged.entries.push_back({load_field(p), f.transform, f.beta});
    }
    out.merged.validate();

    // queries happen inside the scene; a wide index domain keeps them far
    // from the boundary so shell certification rarely falls back to scans
    Aabb bounds = out.merged.scene_bounds();
    Aabb domain = bounds.inflated(bounds.extent().max_component());
    auto make_bank = [&](std::span<const Camera> cams) {
        auto bank = std::make_unique<RayBank>(RayBank::from_cameras(cams, desc.blend.ray_stride));
        bank->build_index(domain, 40);
        return bank;
    };
    out.bank_storage.push_back(make_bank(desc.cameras));
    const RayBank* shared = out.bank_storage[0].get();
    for (const SceneField& f : desc.fields) {
        if (f.cameras.empty()) {
            out.banks.push_back(shared);
        } else {
            out.bank_storage.push_back(make_bank(f.cameras));
            out.banks.push_back(out.bank_storage.back().get());
        }
    }
    return out;
}

LoadedScene load_and_assemble(const std::filesystem::path& scene_path) {
    return assemble_scene(load_scene(scene_path), scene_path.parent_path());
}

SyntheticKind synthetic_kind_from_string(const std::string& name) {
    if (name == "two_box") return SyntheticKind::TwoBox;
    if (name == "striped_sphere_pair") return SyntheticKind::StripedSpherePair;
    if (name == "lshape") return SyntheticKind::LShape;
    throw SceneError("unknown synthetic scene kind '" + name +
                     "' (two_box, striped_sphere_pair, lshape)");
}

MergedField SyntheticScene::to_merged() const {
    MergedField m;
    for (std::size_t i = 0; i < fields.size(); ++i)
        m.entries.push_back({fields[i], transforms[i], betas[i]});
    m.validate();
    return m;
}

namespace {

// ring of cameras in the z = height plane looking at `center`
std::vector<Camera> camera_ring(const Vec3& center, double radius, double height, int count) {
    std::vector<Camera> cams;
    for (int i = 0; i < count; ++i) {
        double a = 2.0 * M_PI * double(i) / double(count);
        Camera cam;
        cam.position = center + Vec3{radius * std::cos(a), radius * std::sin(a), height};
        cam.look_at = center;
        cam.up = {0, 0, 1};
        cam.vertical_fov_deg = 45.0;
        cam.width = 160;
        cam.height = 120;
        cams.push_back(cam);
    }
    return cams;
}

RadianceField make_box_field(const Aabb& aabb, double density_value, int color_res, int degree) {
    RadianceField f;
    f.aabb = aabb;
    f.density.dims = {2, 2, 2};
    f.density.values.assign(8, density_value);
    f.color.dims = {color_res, color_res, color_res};
    f.color.degree = degree;
    f.color.coeffs.assign(f.color.coeff_count(), 0.0);
    return f;
}

// fills degree-0 coefficients from an rgb function of the local position
template <typename Fn>
void paint_diffuse(RadianceField& f, Fn&& rgb_at) {
    const GridDims& d = f.color.dims;
    const int nb = f.color.basis_count();
    for (int iz = 0; iz < d.nz; ++iz)
        for (int iy = 0; iy < d.ny; ++iy)
            for (int ix = 0; ix < d.nx; ++ix) {
                Rgb c = rgb_at(f.color_node_position(ix, iy, iz), ix, iy, iz);
                std::size_t node = d.node_index(ix, iy, iz);
                for (int ch = 0; ch < 3; ++ch)
                    f.color.coeffs[f.color.coeff_index(node, ch, 0)] = c[ch] / kSh0;
            }
    (void)nb;
}

Rgb palette(SplitMix64& rng, double lo, double hi) {
    return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

SyntheticScene make_two_box(uint64_t seed, int color_res) {
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ull + 0x7b0c5);
    SyntheticScene s;

    // warm smooth ramp on the source, cool stripes on the target
    Rgb base = Rgb{0.75, 0.45, 0.2} + palette(rng, -0.1, 0.1);
    Vec3 slope{rng.uniform(0.1, 0.25), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05)};
    RadianceField source = make_box_field({{0, 0, 0}, {1, 1, 1}}, 10.0, color_res, 0);
    paint_diffuse(source, [&](const Vec3& p, int, int, int) {
        return Rgb{base.x + slope.x * p.x, base.y + slope.y * p.y, base.z + slope.z * p.z};
    });

    Rgb stripe_a = Rgb{0.1, 0.3, 0.75} + palette(rng, -0.05, 0.05);
    Rgb stripe_b = Rgb{0.15, 0.65, 0.55} + palette(rng, -0.05, 0.05);
    RadianceField target = make_box_field({{0, 0, 0}, {1, 1, 1}}, 8.0, color_res, 0);
    paint_diffuse(target, [&](const Vec3&, int ix, int, int) {
        return (ix / 4) % 2 == 0 ? stripe_a : stripe_b;
    });

    // the target sits on the low-x side so its forward differences cross
    // the seam into source-owned space, which is what couples the
    // interior to the boundary colors
    s.fields = {std::move(source), std::move(target)};
    s.transforms = {AffineTransform::identity(), AffineTransform::translation({0.75, 0, 0})};
    s.betas = {1.0, 1.0};
    s.cameras = camera_ring({0.125, 0.5, 0.5}, 3.2, 0.0, 5);
    s.render = {0.0, {1, 1, 1}, 160, 120};
    return s;
}

SyntheticScene make_striped_sphere_pair(uint64_t seed, int color_res) {
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ull + 0xa11ce);
    SyntheticScene s;

    auto sphere_density = [](RadianceField& f, const Vec3& center, double radius, double peak) {
        int res = 24;
        f.density.dims = {res, res, res};
        f.density.values.resize(f.density.dims.node_count());
        Vec3 e = f.aabb.extent();
        for (int iz = 0; iz < res; ++iz)
            for (int iy = 0; iy < res; ++iy)
                for (int ix = 0; ix < res; ++ix) {
                    Vec3 p = f.aabb.min + Vec3{e.x * ix / double(res - 1),
                                               e.y * iy / double(res - 1),
                                               e.z * iz / double(res - 1)};
                    double d = (p - center).norm();
                    double t = std::clamp((radius - d) / 0.08, 0.0, 1.0);
                    f.density.values[f.density.dims.node_index(ix, iy, iz)] = peak * t;
                }
    };

    Rgb base = Rgb{0.8, 0.5, 0.25} + palette(rng, -0.08, 0.08);
    RadianceField source = make_box_field({{0, 0, 0}, {1, 1, 1}}, 0.0, color_res, 1);
    sphere_density(source, {0.5, 0.5, 0.5}, 0.42, 10.0);
    paint_diffuse(source, [&](const Vec3& p, int, int, int) {
        return Rgb{base.x - 0.15 * p.z, base.y + 0.1 * p.x, base.z + 0.05 * p.y};
    });

    Rgb stripe_a = Rgb{0.15, 0.25, 0.7} + palette(rng, -0.05, 0.05);
    Rgb stripe_b = Rgb{0.55, 0.6, 0.65} + palette(rng, -0.05, 0.05);
    double lobe = rng.uniform(0.25, 0.4);
    RadianceField target = make_box_field({{0, 0, 0}, {1, 1, 1}}, 0.0, color_res, 1);
    sphere_density(target, {0.5, 0.5, 0.5}, 0.42, 8.0);
    paint_diffuse(target, [&](const Vec3&, int, int, int iz) {
        return (iz / 3) % 2 == 0 ? stripe_a : stripe_b;
    });
    // vertical view-dependent lobe: visible only from above or below
    {
        const ShColorGrid& g = target.color;
        for (std::size_t node = 0; node < g.dims.node_count(); ++node)
            for (int ch = 0; ch < 3; ++ch)
                target.color.coeffs[target.color.coeff_index(node, ch, 2)] = lobe / kSh1;
    }

    s.fields = {std::move(source), std::move(target)};
    s.transforms = {AffineTransform::identity(), AffineTransform::translation({0.55, 0, 0})};
    s.betas = {1.0, 1.0};
    s.cameras = camera_ring({0.225, 0.5, 0.5}, 3.0, 0.0, 6);
    s.render = {0.0, {1, 1, 1}, 160, 120};
    return s;
}

SyntheticScene make_lshape(uint64_t seed, int color_res) {
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ull + 0x15a9e);
    SyntheticScene s;

    Rgb base = Rgb{0.7, 0.55, 0.3} + palette(rng, -0.1, 0.1);
    RadianceField source = make_box_field({{0, 0, 0}, {1, 1, 1}}, 0.0, color_res, 0);
    {
        int res = 32;
        source.density.dims = {res, res, res};
        source.density.values.resize(source.density.dims.node_count());
        for (int iz = 0; iz < res; ++iz)
            for (int iy = 0; iy < res; ++iy)
                for (int ix = 0; ix < res; ++ix) {
                    Vec3 p{ix / double(res - 1), iy / double(res - 1), iz / double(res - 1)};
                    bool inside = (p.y <= 0.4) || (p.x <= 0.4);
                    source.density.values[source.density.dims.node_index(ix, iy, iz)] =
                        inside ? 10.0 : 0.0;
                }
    }
    paint_diffuse(source, [&](const Vec3& p, int, int, int) {
        return Rgb{base.x + 0.2 * p.x, base.y + 0.15 * p.y, base.z + 0.1 * p.z};
    });

    Rgb stripe_a = Rgb{0.2, 0.4, 0.7} + palette(rng, -0.05, 0.05);
    Rgb stripe_b = Rgb{0.6, 0.3, 0.55} + palette(rng, -0.05, 0.05);
    RadianceField target = make_box_field({{0, 0, 0}, {0.6, 0.55, 0.35}}, 8.0, color_res, 0);
    paint_diffuse(target, [&](const Vec3&, int, int iy, int) {
        return (iy / 3) % 2 == 0 ? stripe_a : stripe_b;
    });

    // overlap on the target's high-x and high-y faces, touching both arms
    s.fields = {std::move(source), std::move(target)};
    s.transforms = {AffineTransform::identity(), AffineTransform::translation({0.3, 0.25, -0.2})};
    s.betas = {1.0, 1.0};
    s.cameras = camera_ring({0.35, 0.4, 0.4}, 3.0, 0.3, 5);
    s.render = {0.0, {1, 1, 1}, 160, 120};
    return s;
}

}  // namespace

SyntheticScene generate_synthetic(SyntheticKind kind, uint64_t seed, int color_res) {
    if (color_res < 2) throw SceneError("color resolution must be >= 2");
    switch (kind) {
        case SyntheticKind::TwoBox: return make_two_box(seed, color_res);
        case SyntheticKind::StripedSpherePair: return make_striped_sphere_pair(seed, color_res);
        case SyntheticKind::LShape: return make_lshape(seed, color_res);
    }
    throw SceneError("unknown synthetic scene kind");
}

}  // namespace seamgrid
