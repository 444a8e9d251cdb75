#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "seamgrid/gradient_check.hpp"
#include "seamgrid/oracle.hpp"
#include "seamgrid/scene.hpp"

namespace fs = std::filesystem;
using namespace seamgrid;

namespace {

struct CommonFlags {
    int threads = 0;
    bool has_seed = false;
    uint64_t seed = 0;
    bool has_lambda = false;
    double lambda = 0.1;
    bool has_iters = false;
    int iters = 500;
    bool has_tth = false;
    double tth = 1.0;

    void apply(BlendConfig& cfg) const {
        cfg.threads = threads;
        if (has_seed) cfg.seed = seed;
        if (has_lambda) cfg.lambda = lambda;
        if (has_iters) cfg.iterations = iters;
        if (has_tth) cfg.t_th = tth;
    }
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--threads", f.threads, "worker threads (0 = auto)");
    cmd->add_option("--seed", f.seed, "seed override");
    cmd->add_option("--lambda", f.lambda, "gradient loss weight override");
    cmd->add_option("--iters", f.iters, "iteration count override");
    cmd->add_option("--tth", f.tth, "density threshold override");
}

RenderOptions render_options(const LoadedScene& scene, int threads) {
    RenderOptions opt;
    opt.step = scene.desc.render.step;
    opt.background = scene.desc.render.background;
    opt.threads = threads;
    return opt;
}

void write_images(const ImageBuffer& img, const std::string& prefix) {
    save_ppm(img, prefix + ".ppm");
    save_raw(img, prefix + ".raw");
    std::cout << "wrote " << prefix << ".ppm and " << prefix << ".raw\n";
}

DeltaOverrides load_deltas(const LoadedScene& scene, const fs::path& dir,
                           std::vector<std::vector<double>>& storage) {
    DeltaOverrides views(scene.merged.entries.size());
    storage.resize(scene.merged.entries.size());
    for (std::size_t i = 1; i < scene.merged.entries.size(); ++i) {
        fs::path p = dir / ("delta_" + std::to_string(i) + ".snrd");
        if (!fs::exists(p)) continue;
        storage[i] = load_delta(p, scene.merged.entries[i].field);
        views[i] = storage[i];
    }
    return views;
}

int run_generate(const std::string& kind, uint64_t seed, int res, const fs::path& out_dir) {
    SyntheticScene syn = generate_synthetic(synthetic_kind_from_string(kind), seed, res);
    fs::create_directories(out_dir);

    SceneDescription desc;
    for (std::size_t i = 0; i < syn.fields.size(); ++i) {
        std::string name = i == 0 ? "source.snrf" : "target_" + std::to_string(i) + ".snrf";
        save_field(syn.fields[i], out_dir / name);
        desc.fields.push_back({name, syn.transforms[i], syn.betas[i], {}});
    }
    desc.cameras = syn.cameras;
    desc.render = syn.render;
    desc.blend.seed = seed;

    std::ofstream out(out_dir / "scene.json");
    out << scene_to_json(desc);
    if (!out) throw IoError("cannot write scene.json");
    std::cout << "wrote " << (out_dir / "scene.json").string() << " (" << syn.fields.size()
              << " fields)\n";
    return 0;
}

int run_merge(const fs::path& scene_path, const std::string& prefix, std::size_t camera,
              int threads) {
    LoadedScene scene = load_and_assemble(scene_path);
    ImageBuffer img = render_image(scene.merged, scene.render_camera(camera),
                                   render_options(scene, threads));
    write_images(img, prefix);
    return 0;
}

int run_blend(const fs::path& scene_path, const fs::path& out_dir, const CommonFlags& flags,
              const std::string& dump_samples) {
    LoadedScene scene = load_and_assemble(scene_path);
    BlendConfig cfg = scene.desc.blend;
    flags.apply(cfg);
    fs::create_directories(out_dir);

    std::ofstream telemetry(out_dir / "loss.jsonl");
    if (!telemetry) throw IoError("cannot write loss telemetry");
    int iteration = 0;
    auto log = [&](const LossReport& r) {
        nlohmann::json j{{"iteration", iteration++},
                         {"color_loss", r.color_loss},
                         {"grad_loss", r.grad_loss},
                         {"lambda", r.lambda},
                         {"total", r.total}};
        telemetry << j.dump() << "\n";
    };

    BlendResult result = blend(scene.merged, scene.banks, cfg, log);

    for (const BlendState& s : result.states)
        save_delta(s.delta, scene.merged.entries[s.entry].field,
                   out_dir / ("delta_" + std::to_string(s.entry) + ".snrd"));

    DeltaOverrides deltas = result.delta_views(scene.merged);
    DeltaOverrides none(scene.merged.entries.size());
    nlohmann::json report;
    report["iterations"] = int(result.history.size());
    if (!result.history.empty()) {
        report["initial_total"] = result.history.front().total;
        report["final_total"] = result.history.back().total;
    }
    for (const TargetSamples& t : result.samples) {
        nlohmann::json jt{{"entry", t.entry},
                          {"boundary_count", t.boundary.size()},
                          {"interior_count", t.interior.size()},
                          {"boundary_error_before",
                           boundary_color_error(scene.merged, t.boundary, none, cfg.threads)},
                          {"boundary_error_after",
                           boundary_color_error(scene.merged, t.boundary, deltas, cfg.threads)},
                          {"interior_rms_after",
                           interior_gradient_rms(scene.merged, t.interior, deltas, cfg.threads)}};
        report["targets"].push_back(std::move(jt));
    }
    std::ofstream rep(out_dir / "blend_report.json");
    rep << report.dump(2) << "\n";

    if (!dump_samples.empty()) {
        std::ofstream dump(dump_samples);
        for (const TargetSamples& t : result.samples) {
            dump << sample_set_to_json(t.boundary) << "\n";
            dump << sample_set_to_json(t.interior) << "\n";
        }
    }
    std::cout << "blend finished: total " << (result.history.empty() ? 0.0 : result.history.back().total)
              << ", deltas in " << out_dir.string() << "\n";
    return 0;
}

int run_render(const fs::path& scene_path, const std::string& prefix, std::size_t camera,
               const std::string& deltas_dir, int threads) {
    LoadedScene scene = load_and_assemble(scene_path);
    std::vector<std::vector<double>> storage;
    DeltaOverrides deltas(scene.merged.entries.size());
    if (!deltas_dir.empty()) deltas = load_deltas(scene, deltas_dir, storage);
    ImageBuffer img = render_image(scene.merged, scene.render_camera(camera),
                                   render_options(scene, threads), &deltas);
    write_images(img, prefix);
    return 0;
}

int run_oracle(const fs::path& scene_path, const fs::path& out_dir, const CommonFlags& flags,
               const std::string& deltas_dir) {
    LoadedScene scene = load_and_assemble(scene_path);
    BlendConfig cfg = scene.desc.blend;
    flags.apply(cfg);
    fs::create_directories(out_dir);

    NodeSystem sys = assemble_system(scene.merged, 1, *scene.banks[1], cfg);
    CgResult cg = solve_cg(sys, 1e-8, 0, cfg.threads);
    if (!cg.converged)
        std::cerr << "warning: cg stopped at relative residual " << cg.residual << "\n";

    // blended target field realized by the direct solution
    const RadianceField& target = scene.merged.entries[1].field;
    std::vector<double> delta = delta_from_solution(sys, cg, target);
    RadianceField solved = target;
    for (std::size_t i = 0; i < delta.size(); ++i) solved.color.coeffs[i] += delta[i];
    save_field(solved, out_dir / "oracle_solution.snrf");

    nlohmann::json report{{"unknowns", sys.size()},
                          {"pin_rows", sys.pins.size()},
                          {"difference_rows", sys.diffs.size()},
                          {"cg_converged", cg.converged},
                          {"cg_residual", cg.residual},
                          {"cg_iterations", cg.iterations}};

    if (!deltas_dir.empty()) {
        fs::path p = fs::path(deltas_dir) / "delta_1.snrd";
        BlendState state = init_side_branch(target, 1);
        if (fs::exists(p)) state.delta = load_delta(p, target);
        OracleReport cmp = compare_with_optimizer(sys, cg, target, state);
        report["rmse_vs_optimizer"] = cmp.rmse;
        std::cout << "oracle rmse vs optimizer: " << cmp.rmse << " over " << cmp.node_count
                  << " nodes\n";
    }
    std::ofstream rep(out_dir / "rmse_report.json");
    rep << report.dump(2) << "\n";
    std::cout << "wrote " << (out_dir / "oracle_solution.snrf").string() << "\n";
    return 0;
}

int run_check_grad(uint64_t seed, int res, int scenes, int coeffs, int threads) {
    double worst = 0.0;
    for (int s = 0; s < scenes; ++s) {
        GradCheckResult r = gradient_check(seed + std::uint64_t(s), res, coeffs, 0.1, threads);
        std::cout << "scene " << s << ": max relative error " << r.max_rel_error << " ("
                  << r.nonzero_gradients << "/" << r.coefficients_checked
                  << " nonzero gradients)\n";
        worst = std::max(worst, r.max_rel_error);
    }
    std::cout << "max relative error: " << worst << (worst <= 1e-4 ? " (pass)" : " (FAIL)")
              << "\n";
    return worst <= 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seamgrid: merge voxel radiance fields and blend their appearance"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic scene to a directory");
    std::string gen_kind = "two_box";
    uint64_t gen_seed = 0;
    int gen_res = 32;
    std::string gen_out = ".";
    gen->add_option("--kind", gen_kind, "two_box, striped_sphere_pair, or lshape");
    gen->add_option("--seed", gen_seed, "palette seed");
    gen->add_option("--res", gen_res, "color grid resolution per axis");
    gen->add_option("--out", gen_out, "output directory");

    // merge
    auto* merge = app.add_subcommand("merge", "render the direct merge of a scene");
    std::string merge_scene, merge_out = "merge";
    std::size_t merge_cam = 0;
    CommonFlags merge_flags;
    merge->add_option("scene", merge_scene, "scene JSON path")->required();
    merge->add_option("--out", merge_out, "output image prefix");
    merge->add_option("--camera", merge_cam, "camera index");
    merge->add_option("--threads", merge_flags.threads, "worker threads (0 = auto)");

    // blend
    auto* blend_cmd = app.add_subcommand("blend", "optimize target appearance deltas");
    std::string blend_scene, blend_out = ".", blend_dump;
    CommonFlags blend_flags;
    blend_cmd->add_option("scene", blend_scene, "scene JSON path")->required();
    blend_cmd->add_option("--out", blend_out, "output directory");
    blend_cmd->add_option("--dump-samples", blend_dump, "write sample sets as JSON lines");
    add_common_flags(blend_cmd, blend_flags);

    // render
    auto* render_cmd = app.add_subcommand("render", "render a scene, optionally with deltas");
    std::string render_scene, render_out = "render", render_deltas;
    std::size_t render_cam = 0;
    CommonFlags render_flags;
    render_cmd->add_option("scene", render_scene, "scene JSON path")->required();
    render_cmd->add_option("--out", render_out, "output image prefix");
    render_cmd->add_option("--camera", render_cam, "camera index");
    render_cmd->add_option("--deltas", render_deltas, "directory with delta_<i>.snrd files");
    render_cmd->add_option("--threads", render_flags.threads, "worker threads (0 = auto)");

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "direct linear solve of the blending problem");
    std::string oracle_scene, oracle_out = ".", oracle_deltas;
    CommonFlags oracle_flags;
    oracle_cmd->add_option("scene", oracle_scene, "scene JSON path")->required();
    oracle_cmd->add_option("--out", oracle_out, "output directory");
    oracle_cmd->add_option("--deltas", oracle_deltas, "optimizer output to compare against");
    add_common_flags(oracle_cmd, oracle_flags);

    // check-grad
    auto* check = app.add_subcommand("check-grad", "compare analytic and numeric gradients");
    uint64_t check_seed = 7;
    int check_res = 8, check_scenes = 3, check_coeffs = 100, check_threads = 0;
    check->add_option("--seed", check_seed, "base seed");
    check->add_option("--res", check_res, "grid resolution per axis");
    check->add_option("--scenes", check_scenes, "number of random scenes");
    check->add_option("--coeffs", check_coeffs, "coefficients per scene");
    check->add_option("--threads", check_threads, "worker threads (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    for (auto [cmd, flags] : {std::pair{blend_cmd, &blend_flags}, {oracle_cmd, &oracle_flags}}) {
        flags->has_seed = cmd->count("--seed") > 0;
        flags->has_lambda = cmd->count("--lambda") > 0;
        flags->has_iters = cmd->count("--iters") > 0;
        flags->has_tth = cmd->count("--tth") > 0;
    }

    try {
        if (gen->parsed()) return run_generate(gen_kind, gen_seed, gen_res, gen_out);
        if (merge->parsed()) return run_merge(merge_scene, merge_out, merge_cam, merge_flags.threads);
        if (blend_cmd->parsed()) return run_blend(blend_scene, blend_out, blend_flags, blend_dump);
        if (render_cmd->parsed())
            return run_render(render_scene, render_out, render_cam, render_deltas,
                              render_flags.threads);
        if (oracle_cmd->parsed()) return run_oracle(oracle_scene, oracle_out, oracle_flags, oracle_deltas);
        if (check->parsed())
            return run_check_grad(check_seed, check_res, check_scenes, check_coeffs, check_threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
