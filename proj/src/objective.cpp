#include "seamgrid/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "seamgrid/threading.hpp"

namespace seamgrid {

namespace {

// one color evaluation with everything needed to push a residual back
// onto the evaluated entry's delta coefficients
struct ColorFootprint {
    std::size_t entry = 0;
    bool inside = false;
    Rgb color;
    TrilinearStencil stencil{};
    std::array<double, kMaxShBasis> basis{};
    int nb = 1;
};

ColorFootprint eval_entry_color(const MergedField& m, std::size_t entry, const Vec3& x,
                                const Vec3& d, const DeltaOverrides& deltas) {
    const MergedEntry& e = m.entries[entry];
    Vec3 lx = transform_point(e.transform, x);
    ColorFootprint fp;
    fp.entry = entry;
    if (!e.field.aabb.contains(lx)) return fp;
    fp.inside = true;
    fp.nb = e.field.color.basis_count();
    fp.basis = eval_sh_basis(transform_direction(e.transform, d), e.field.color.degree);
    fp.stencil = trilinear_stencil(e.field.color.dims, e.field.aabb, lx);

    std::span<const double> delta;
    if (entry < deltas.size()) delta = deltas[entry];
    const double* coeffs = e.field.color.coeffs.data();
    for (int k = 0; k < 8; ++k) {
        double w = fp.stencil.weights[k];
        if (w == 0.0) continue;
        const double* c = coeffs + fp.stencil.nodes[k] * 3 * fp.nb;
        for (int ch = 0; ch < 3; ++ch) {
            double acc = 0.0;
            for (int b = 0; b < fp.nb; ++b) acc += c[ch * fp.nb + b] * fp.basis[b];
            fp.color[ch] += w * acc;
        }
        if (!delta.empty()) {
            const double* dc = delta.data() + fp.stencil.nodes[k] * 3 * fp.nb;
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (int b = 0; b < fp.nb; ++b) acc += dc[ch * fp.nb + b] * fp.basis[b];
                fp.color[ch] += w * acc;
            }
        }
    }
    return fp;
}

ColorFootprint eval_merged_color(const MergedField& m, const Vec3& x, const Vec3& d,
                                 const DeltaOverrides& deltas) {
    return eval_entry_color(m, select_field(m, x), x, d, deltas);
}

void scatter(const ColorFootprint& fp, const Rgb& residual, double scale,
             std::span<double> grad) {
    if (!fp.inside || grad.empty()) return;
    for (int k = 0; k < 8; ++k) {
        double w = fp.stencil.weights[k] * scale;
        if (w == 0.0) continue;
        double* g = grad.data() + fp.stencil.nodes[k] * 3 * fp.nb;
        for (int ch = 0; ch < 3; ++ch) {
            double r = residual[ch] * w;
            for (int b = 0; b < fp.nb; ++b) g[ch * fp.nb + b] += r * fp.basis[b];
        }
    }
}

void check_set(const SampleSet& set, RegionKind kind) {
    if (set.kind != kind)
        throw std::invalid_argument("sample set has the wrong region kind");
    if (set.points.empty()) throw std::invalid_argument("sample set is empty");
}

// per-worker partial sums reduced in worker order
double reduce_sum(std::size_t n, int threads,
                  const std::function<double(std::size_t, std::size_t)>& fn) {
    int t = resolve_threads(threads);
    std::vector<double> partial(std::size_t(t), 0.0);
    parallel_for(n, t, [&](std::size_t b, std::size_t e, int w) { partial[w] = fn(b, e); });
    double sum = 0.0;
    for (double p : partial) sum += p;
    return sum;
}

}  // namespace

LossReport total_loss(double color, double grad, double lambda, double color_weight) {
    if (!(std::isfinite(color) && std::isfinite(grad) && std::isfinite(lambda)))
        throw std::invalid_argument("loss terms must be finite");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    LossReport r;
    r.color_loss = color;
    r.grad_loss = grad;
    r.lambda = lambda;
    r.color_weight = color_weight;
    r.total = color_weight * color + lambda * grad;
    return r;
}

double color_loss(const MergedField& m, const SampleSet& boundary, const DeltaOverrides& deltas,
                  int threads) {
    check_set(boundary, RegionKind::Boundary);
    double sum = reduce_sum(boundary.size(), threads, [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            ColorFootprint fp = eval_entry_color(m, boundary.target_entry, boundary.points[i],
                                                 boundary.directions[i], deltas);
            Rgb r = fp.color - boundary.boundary_reference[i];
            s += r.norm2();
        }
        return s;
    });
    return sum / double(boundary.size());
}

double grad_loss(const MergedField& m, const SampleSet& interior, const DeltaOverrides& deltas,
                 int threads) {
    check_set(interior, RegionKind::Interior);
    double sum = reduce_sum(interior.size(), threads, [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            ColorFootprint at =
                eval_merged_color(m, interior.points[i], interior.directions[i], deltas);
            for (int a = 0; a < 3; ++a) {
                Vec3 xn = interior.points[i];
                xn[a] += interior.delta_step[a];
                ColorFootprint ahead = eval_merged_color(m, xn, interior.directions[i], deltas);
                Rgb r = (at.color - ahead.color) - interior.interior_reference[i][a];
                s += r.norm2();
            }
        }
        return s;
    });
    return sum / double(3 * interior.size());
}

LossReport eval_loss(const BlendProblem& p, const DeltaOverrides& deltas) {
    double color = 0.0, grad = 0.0;
    std::size_t nb = 0, ni = 0;
    for (const TargetSamples& t : p.targets) {
        color += color_loss(*p.merged, t.boundary, deltas, p.threads);
        grad += grad_loss(*p.merged, t.interior, deltas, p.threads);
        nb += t.boundary.size();
        ni += t.interior.size();
    }
    LossReport r = total_loss(color, grad, p.lambda, p.color_weight);
    r.boundary_count = nb;
    r.interior_count = ni;
    return r;
}

LossReport eval_loss_and_gradients(const BlendProblem& p, const DeltaOverrides& deltas,
                                   std::vector<std::vector<double>>& grads) {
    const MergedField& m = *p.merged;
    int threads = resolve_threads(p.threads);

    // map entry index -> slot in p.targets
    std::vector<int> slot(m.entries.size(), -1);
    grads.resize(p.targets.size());
    for (std::size_t t = 0; t < p.targets.size(); ++t) {
        std::size_t entry = p.targets[t].entry;
        slot[entry] = int(t);
        grads[t].assign(m.entries[entry].field.color.coeff_count(), 0.0);
    }

    // per-worker gradient buffers, reduced in worker order
    std::vector<std::vector<std::vector<double>>> partial(
        std::size_t(threads), std::vector<std::vector<double>>(p.targets.size()));
    for (int w = 0; w < threads; ++w)
        for (std::size_t t = 0; t < p.targets.size(); ++t)
            partial[w][t].assign(grads[t].size(), 0.0);

    auto grad_for = [&](std::vector<std::vector<double>>& bufs,
                        std::size_t entry) -> std::span<double> {
        int s = slot[entry];
        return s < 0 ? std::span<double>{} : std::span<double>(bufs[s]);
    };

    double color_sum = 0.0, grad_sum = 0.0;
    std::size_t nb_total = 0, ni_total = 0;

    for (const TargetSamples& t : p.targets) {
        check_set(t.boundary, RegionKind::Boundary);
        check_set(t.interior, RegionKind::Interior);
        nb_total += t.boundary.size();
        ni_total += t.interior.size();

        double color_scale = 2.0 * p.color_weight / double(t.boundary.size());
        std::vector<double> sums(std::size_t(threads), 0.0);
        parallel_for(t.boundary.size(), threads, [&](std::size_t b, std::size_t e, int w) {
            double s = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                ColorFootprint fp = eval_entry_color(m, t.entry, t.boundary.points[i],
                                                     t.boundary.directions[i], deltas);
                Rgb r = fp.color - t.boundary.boundary_reference[i];
                s += r.norm2();
                scatter(fp, r, color_scale, grad_for(partial[w], fp.entry));
            }
            sums[w] = s;
        });
        for (int w = 0; w < threads; ++w) color_sum += sums[w] / double(t.boundary.size());

        double diff_scale = 2.0 * p.lambda / double(3 * t.interior.size());
        std::fill(sums.begin(), sums.end(), 0.0);
        parallel_for(t.interior.size(), threads, [&](std::size_t b, std::size_t e, int w) {
            double s = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                ColorFootprint at =
                    eval_merged_color(m, t.interior.points[i], t.interior.directions[i], deltas);
                for (int a = 0; a < 3; ++a) {
                    Vec3 xn = t.interior.points[i];
                    xn[a] += t.interior.delta_step[a];
                    ColorFootprint ahead =
                        eval_merged_color(m, xn, t.interior.directions[i], deltas);
                    Rgb r = (at.color - ahead.color) - t.interior.interior_reference[i][a];
                    s += r.norm2();
                    scatter(at, r, diff_scale, grad_for(partial[w], at.entry));
                    scatter(ahead, r, -diff_scale, grad_for(partial[w], ahead.entry));
                }
            }
            sums[w] = s;
        });
        for (int w = 0; w < threads; ++w) grad_sum += sums[w] / double(3 * t.interior.size());
    }

    for (int w = 0; w < threads; ++w)
        for (std::size_t t = 0; t < p.targets.size(); ++t)
            for (std::size_t i = 0; i < grads[t].size(); ++i) grads[t][i] += partial[w][t][i];

    LossReport r = total_loss(color_sum, grad_sum, p.lambda, p.color_weight);
    r.boundary_count = nb_total;
    r.interior_count = ni_total;
    return r;
}

std::vector<double> loss_gradients(const MergedField& m, const SampleSet& boundary,
                                   const SampleSet& interior, std::span<const double> delta,
                                   double lambda, int threads) {
    if (boundary.target_entry != interior.target_entry)
        throw std::invalid_argument("boundary and interior sets name different targets");
    BlendProblem p;
    p.merged = &m;
    p.lambda = lambda;
    p.threads = threads;
    p.targets.push_back({boundary.target_entry, boundary, interior});
    DeltaOverrides deltas(m.entries.size());
    deltas[boundary.target_entry] = delta;
    std::vector<std::vector<double>> grads;
    eval_loss_and_gradients(p, deltas, grads);
    return std::move(grads[0]);
}

CompiledObjective::CompiledObjective(const BlendProblem& problem) : problem_(&problem) {
    const MergedField& m = *problem.merged;
    threads_ = resolve_threads(problem.threads);

    std::vector<int> slot(m.entries.size(), -1);
    for (std::size_t t = 0; t < problem.targets.size(); ++t)
        slot[problem.targets[t].entry] = int(t);

    auto compile = [&](const ColorFootprint& fp) {
        Site s;
        s.frozen = fp.color;
        if (fp.inside && slot[fp.entry] >= 0) {
            s.slot = slot[fp.entry];
            s.stencil = fp.stencil;
            s.basis = fp.basis;
            s.nb = fp.nb;
        }
        return s;
    };

    DeltaOverrides no_deltas(m.entries.size());
    terms_.resize(problem.targets.size());
    for (std::size_t t = 0; t < problem.targets.size(); ++t) {
        const TargetSamples& ts = problem.targets[t];
        check_set(ts.boundary, RegionKind::Boundary);
        check_set(ts.interior, RegionKind::Interior);
        TargetTerms& out = terms_[t];

        out.boundary.resize(ts.boundary.size());
        parallel_for(ts.boundary.size(), threads_, [&](std::size_t b, std::size_t e, int) {
            for (std::size_t i = b; i < e; ++i)
                out.boundary[i] = compile(eval_entry_color(m, ts.entry, ts.boundary.points[i],
                                                           ts.boundary.directions[i], no_deltas));
        });

        out.interior.resize(4 * ts.interior.size());
        parallel_for(ts.interior.size(), threads_, [&](std::size_t b, std::size_t e, int) {
            for (std::size_t i = b; i < e; ++i) {
                out.interior[4 * i] = compile(eval_merged_color(m, ts.interior.points[i],
                                                                ts.interior.directions[i], no_deltas));
                for (int a = 0; a < 3; ++a) {
                    Vec3 xn = ts.interior.points[i];
                    xn[a] += ts.interior.delta_step[a];
                    out.interior[4 * i + 1 + a] =
                        compile(eval_merged_color(m, xn, ts.interior.directions[i], no_deltas));
                }
            }
        });
    }
}

LossReport CompiledObjective::evaluate(const DeltaOverrides& deltas,
                                       std::vector<std::vector<double>>* grads) const {
    const BlendProblem& p = *problem_;
    const int threads = threads_;

    auto delta_color = [&](const Site& s) -> Rgb {
        Rgb c = s.frozen;
        if (s.slot < 0) return c;
        std::size_t entry = p.targets[std::size_t(s.slot)].entry;
        if (entry >= deltas.size() || deltas[entry].empty()) return c;
        std::span<const double> delta = deltas[entry];
        for (int k = 0; k < 8; ++k) {
            double w = s.stencil.weights[k];
            if (w == 0.0) continue;
            const double* dc = delta.data() + s.stencil.nodes[k] * 3 * s.nb;
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (int b = 0; b < s.nb; ++b) acc += dc[ch * s.nb + b] * s.basis[b];
                c[ch] += w * acc;
            }
        }
        return c;
    };

    std::vector<std::vector<std::vector<double>>> partial;
    if (grads) {
        grads->resize(p.targets.size());
        for (std::size_t t = 0; t < p.targets.size(); ++t)
            (*grads)[t].assign(
                p.merged->entries[p.targets[t].entry].field.color.coeff_count(), 0.0);
        partial.assign(std::size_t(threads), std::vector<std::vector<double>>(p.targets.size()));
        for (int w = 0; w < threads; ++w)
            for (std::size_t t = 0; t < p.targets.size(); ++t)
                partial[w][t].assign((*grads)[t].size(), 0.0);
    }

    auto scatter_site = [&](const Site& s, const Rgb& residual, double scale,
                            std::vector<std::vector<double>>& bufs) {
        if (s.slot < 0) return;
        double* g = bufs[std::size_t(s.slot)].data();
        for (int k = 0; k < 8; ++k) {
            double w = s.stencil.weights[k] * scale;
            if (w == 0.0) continue;
            double* gn = g + s.stencil.nodes[k] * 3 * s.nb;
            for (int ch = 0; ch < 3; ++ch) {
                double r = residual[ch] * w;
                for (int b = 0; b < s.nb; ++b) gn[ch * s.nb + b] += r * s.basis[b];
            }
        }
    };

    double color_sum = 0.0, grad_sum = 0.0;
    std::size_t nb_total = 0, ni_total = 0;
    std::vector<double> sums(std::size_t(threads), 0.0);

    for (std::size_t t = 0; t < p.targets.size(); ++t) {
        const TargetSamples& ts = p.targets[t];
        const TargetTerms& terms = terms_[t];
        nb_total += ts.boundary.size();
        ni_total += ts.interior.size();

        double color_scale = 2.0 * p.color_weight / double(ts.boundary.size());
        std::fill(sums.begin(), sums.end(), 0.0);
        parallel_for(ts.boundary.size(), threads, [&](std::size_t b, std::size_t e, int w) {
            double local = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                const Site& s = terms.boundary[i];
                Rgb r = delta_color(s) - ts.boundary.boundary_reference[i];
                local += r.norm2();
                if (grads) scatter_site(s, r, color_scale, partial[w]);
            }
            sums[w] = local;
        });
        for (int w = 0; w < threads; ++w) color_sum += sums[w] / double(ts.boundary.size());

        double diff_scale = 2.0 * p.lambda / double(3 * ts.interior.size());
        std::fill(sums.begin(), sums.end(), 0.0);
        parallel_for(ts.interior.size(), threads, [&](std::size_t b, std::size_t e, int w) {
            double local = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                const Site& at = terms.interior[4 * i];
                Rgb at_color = delta_color(at);
                for (int a = 0; a < 3; ++a) {
                    const Site& ahead = terms.interior[4 * i + 1 + a];
                    Rgb r = (at_color - delta_color(ahead)) - ts.interior.interior_reference[i][a];
                    local += r.norm2();
                    if (grads) {
                        scatter_site(at, r, diff_scale, partial[w]);
                        scatter_site(ahead, r, -diff_scale, partial[w]);
                    }
                }
            }
            sums[w] = local;
        });
        for (int w = 0; w < threads; ++w) grad_sum += sums[w] / double(3 * ts.interior.size());
    }

    if (grads)
        for (int w = 0; w < threads; ++w)
            for (std::size_t t = 0; t < p.targets.size(); ++t)
                for (std::size_t i = 0; i < (*grads)[t].size(); ++i)
                    (*grads)[t][i] += partial[w][t][i];

    LossReport r = total_loss(color_sum, grad_sum, p.lambda, p.color_weight);
    r.boundary_count = nb_total;
    r.interior_count = ni_total;
    return r;
}

double boundary_color_error(const MergedField& m, const SampleSet& boundary,
                            const DeltaOverrides& deltas, int threads) {
    check_set(boundary, RegionKind::Boundary);
    double sum = reduce_sum(boundary.size(), threads, [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            ColorFootprint fp = eval_entry_color(m, boundary.target_entry, boundary.points[i],
                                                 boundary.directions[i], deltas);
            s += (fp.color - boundary.boundary_reference[i]).norm();
        }
        return s;
    });
    return sum / double(boundary.size());
}

double interior_gradient_rms(const MergedField& m, const SampleSet& interior,
                             const DeltaOverrides& deltas, int threads) {
    check_set(interior, RegionKind::Interior);
    double mean_sq = grad_loss(m, interior, deltas, threads) / 3.0;  // per scalar channel
    return std::sqrt(mean_sq);
}

}  // namespace seamgrid
