#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "seamgrid/io.hpp"
#include "seamgrid/optimizer.hpp"
#include "seamgrid/ray_bank.hpp"

namespace seamgrid {

struct SceneError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RenderSettings {
    double step = 0.0;  // 0 = auto
    Rgb background{1, 1, 1};
    int width = 0, height = 0;  // 0 = use the camera's own size
};

struct SceneField {
    std::string file;
    AffineTransform transform;
    double beta = 1.0;
    std::vector<Camera> cameras;  // optional per-field training cameras
};

struct SceneDescription {
    std::vector<SceneField> fields;  // [0] is the source
    std::vector<Camera> cameras;
    RenderSettings render;
    BlendConfig blend;
};

// Parses and validates scene JSON; defaults are filled (beta 1,
// lambda 0.1, T_th 1). Throws SceneError with a distinct message per
// failure (malformed JSON, missing source, non-identity source
// transform, bad matrix shape, missing cameras).
SceneDescription parse_scene(const std::string& text);
SceneDescription load_scene(const std::filesystem::path& path);
std::string scene_to_json(const SceneDescription& scene);

// Loaded fields plus the ray banks direction assignment uses. Each entry
// uses its own cameras when the scene provides them, otherwise the
// shared scene cameras.
struct LoadedScene {
    SceneDescription desc;
    MergedField merged;
    std::vector<std::unique_ptr<RayBank>> bank_storage;
    std::vector<const RayBank*> banks;  // per entry

    Camera render_camera(std::size_t index) const;
};

LoadedScene assemble_scene(const SceneDescription& desc, const std::filesystem::path& base_dir);
LoadedScene load_and_assemble(const std::filesystem::path& scene_path);

enum class SyntheticKind { TwoBox, StripedSpherePair, LShape };

SyntheticKind synthetic_kind_from_string(const std::string& name);

struct SyntheticScene {
    std::vector<RadianceField> fields;  // [0] is the source
    std::vector<AffineTransform> transforms;
    std::vector<double> betas;
    std::vector<Camera> cameras;
    RenderSettings render;

    MergedField to_merged() const;
};

// Deterministic desk-scale test scenes; the seed varies the palette.
// two_box: solid source box with a smooth color ramp overlapping a
// striped target box. striped_sphere_pair: overlapping spheres, target
// striped with a vertical degree-1 lobe. lshape: L-shaped source with a
// bar target touching both arms.
SyntheticScene generate_synthetic(SyntheticKind kind, uint64_t seed, int color_res = 32);

}  // namespace seamgrid
