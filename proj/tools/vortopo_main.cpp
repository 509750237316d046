#include "vortopo/coarsegrain.hpp"
#include "vortopo/field.hpp"
#include "vortopo/gpe.hpp"
#include "vortopo/io.hpp"
#include "vortopo/topology.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace vortopo;

namespace {

// Flat or one-level-nested JSON config mapped onto CLI11 options; unknown
// keys are rejected by the parser.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const std::exception& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        if (!j.is_object()) throw CLI::FileError("config root must be an object");
        append(j, {}, items);
        return items;
    }

private:
    static void append(const nlohmann::json& j, std::vector<std::string> parents,
                       std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                append(value, p, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }
    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    }
};

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    return dir;
}

int default_nodes(std::size_t input_nodes) {
    std::size_t n = 256;
    while (n < input_nodes) n *= 2;
    return static_cast<int>(n);
}

struct TopoOptions {
    std::string input, framing = "frenet", out;
    double epsilon = 0.0;  // 0 = per-filament default
    double phi_ref = 0.0;
    int nodes = 0;  // 0 = auto (next power of two >= max(256, input))
    double round_tol = 5e-3;
    double zero_tol = 5e-3;
};

void run_topo(const TopoOptions& opt) {
    const fs::path dir = ensure_out_dir(opt.out);
    std::vector<Filament> raw = read_filaments(opt.input);
    if (raw.empty()) throw ValidationError("no filaments in " + opt.input);

    std::vector<Filament> fils;
    for (const auto& f : raw) {
        const int n = opt.nodes > 0 ? opt.nodes : default_nodes(f.size());
        fils.push_back(resample_arclength(f, n));
    }

    std::string mode = opt.framing;
    int wind_k = 0;
    if (mode.rfind("winding:", 0) == 0) {
        wind_k = std::stoi(mode.substr(8));
        mode = "winding";
    }
    if (mode != "frenet" && mode != "seifert" && mode != "winding")
        throw ValidationError("framing must be frenet, seifert or winding:k");

    std::vector<Framing> framings;
    for (std::size_t i = 0; i < fils.size(); ++i) {
        const double eps =
            opt.epsilon > 0.0 ? opt.epsilon : default_pushoff_epsilon(fils, i);
        if (mode == "frenet") {
            framings.push_back(frenet_framing(fils[i], eps));
        } else if (mode == "winding") {
            framings.push_back(winding_framing(fils[i], eps, wind_k));
        } else {
            framings.push_back(seifert_framing(fils, i, eps, opt.phi_ref));
        }
    }

    const HelicityReport rep = assemble_helicity(fils, framings, opt.round_tol);
    write_report(dir / "report.json", rep);
    write_manifest(dir, {"report.json"});

    double gamma2 = 0.0, sl_sum = 0.0, lk_sum = 0.0;
    for (std::size_t i = 0; i < fils.size(); ++i) {
        gamma2 += fils[i].gamma * fils[i].gamma;
        sl_sum += rep.sl[i];
    }
    for (Eigen::Index i = 0; i < rep.lk.rows(); ++i)
        for (Eigen::Index j = i + 1; j < rep.lk.cols(); ++j) lk_sum += rep.lk(i, j);
    std::printf("total helicity H = %.6g (Gamma^2 units)\n", rep.total);
    std::printf("lk sum = %.6g, sl sum = %.6g, lk+sl residual = %.6g\n", lk_sum,
                sl_sum, lk_sum + sl_sum);
    if (mode == "seifert" && std::abs(rep.total) > opt.zero_tol * gamma2)
        throw ToleranceError("seifert-framed helicity |" +
                             std::to_string(rep.total) + "| exceeds " +
                             std::to_string(opt.zero_tol * gamma2));
}

struct GpeOptions {
    std::string scene = "hopf-single", out;
    int grid = 96;
    double dx = 0.5, dt = 0.1, t_end = 0.0;
    int steps = -1;  // alternative to t_end
    int order = 2, stride = 10;
    bool write_fields = false;
};

void run_gpe(const GpeOptions& opt) {
    const fs::path dir = ensure_out_dir(opt.out);
    Scene scene = make_scene(opt.scene, opt.grid, opt.dx);
    GpeConfig cfg;
    cfg.dt = opt.dt;
    cfg.t_end = opt.steps >= 0 ? opt.steps * opt.dt : opt.t_end;
    cfg.order = opt.order;
    cfg.output_stride = opt.stride;
    const std::string warn = validate_config(cfg, opt.dx);
    if (!warn.empty()) std::fprintf(stderr, "warning: %s\n", warn.c_str());

    std::vector<std::string> files;
    int snap_id = 0;
    const GpeSeries series = run_experiment(
        scene, cfg, [&](const GpeSnapshot& snap, const ComplexField3D& field) {
            char name[64];
            std::snprintf(name, sizeof(name), "lines_%04d.json", snap_id);
            write_filaments(dir / name, snap.lines);
            files.emplace_back(name);
            if (opt.write_fields) {
                std::snprintf(name, sizeof(name), "field_%04d.dat", snap_id);
                write_complex_field(dir / name, field);
                files.emplace_back(name);
            }
            std::printf("t=%.3f lines=%zu length=%.3f lk_sum=%g\n", snap.t,
                        snap.lines.size(), snap.total_length, snap.lk_sum);
            ++snap_id;
        });
    write_series_csv(dir / "series.csv", series);
    files.emplace_back("series.csv");
    write_manifest(dir, files);
}

struct CoarseOptions {
    std::string input, out;
    int grid = 96;
    double dx = 0.5;
    double kernel_width = 0.0;  // 0 = grid/16 box units
};

void run_coarse(const CoarseOptions& opt) {
    const fs::path dir = ensure_out_dir(opt.out);
    const std::vector<Filament> fils = read_filaments(opt.input);
    GridSpec spec;
    spec.shape = {opt.grid, opt.grid, opt.grid};
    spec.spacing = opt.dx;
    Vec3 center = Vec3::Zero();
    if (!fils.empty()) {
        Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
        for (const auto& f : fils) {
            const auto [a, b] = f.bounding_box();
            lo = lo.cwiseMin(a);
            hi = hi.cwiseMax(b);
        }
        center = 0.5 * (lo + hi);
    }
    spec.origin = center - 0.5 * opt.dx * Vec3(opt.grid - 1, opt.grid - 1, opt.grid - 1);
    const double w =
        opt.kernel_width > 0.0 ? opt.kernel_width : opt.grid * opt.dx / 16.0;

    nlohmann::ordered_json j;
    j["kernel_width"] = w;
    if (fils.empty()) {
        j["h_cl"] = 0.0;
        j["lk_oracle"] = 0.0;
    } else {
        const VorticityGrid omega = coarse_vorticity(fils, spec, w);
        const VectorGrid v = velocity_field_on_grid(fils, spec);
        const double hcl = quasiclassical_helicity(omega, v);
        double oracle = 0.0;
        for (std::size_t i = 0; i < fils.size(); ++i)
            for (std::size_t k = i + 1; k < fils.size(); ++k)
                oracle += 2.0 * fils[i].gamma * fils[k].gamma *
                          linking_number(fils[i], fils[k]).rounded;
        j["h_cl"] = hcl;
        j["lk_oracle"] = oracle;
        std::printf("H_cl = %.6g vs linking oracle = %.6g\n", hcl, oracle);
    }
    std::ofstream outf(dir / "coarse.json", std::ios::binary);
    outf << j.dump(2) << "\n";
    outf.close();
    write_manifest(dir, {"coarse.json"});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vortex filament helicity toolkit"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file");
    app.require_subcommand(1);

    int threads = 0;
    long long seed = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = library default)");
    app.add_option("--seed", seed, "seed for randomized corpora");

    // gen ------------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate filament scenes");
    gen->require_subcommand(1);
    gen->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    TorusKnotParams tk;
    std::string gen_out, gen_name = "filaments.json";
    auto* tref = gen->add_subcommand("trefoil", "torus-knot filament");
    tref->add_option("--p", tk.p);
    tref->add_option("--q", tk.q);
    tref->add_option("--r0", tk.r0);
    tref->add_option("--a", tk.a);
    tref->add_option("--n", tk.n_points);
    tref->add_option("--gamma", tk.gamma);
    tref->add_option("--out", gen_out)->required();
    tref->add_option("--name", gen_name);

    double c_radius = 1.0, c_gamma = 1.0;
    int c_n = 256;
    std::vector<double> c_center{0.0, 0.0, 0.0}, c_normal{0.0, 0.0, 1.0};
    auto* circ = gen->add_subcommand("circle", "planar circle");
    circ->add_option("--radius", c_radius);
    circ->add_option("--n", c_n);
    circ->add_option("--gamma", c_gamma);
    circ->add_option("--center", c_center)->expected(3);
    circ->add_option("--normal", c_normal)->expected(3);
    circ->add_option("--out", gen_out)->required();
    circ->add_option("--name", gen_name);

    int hb_sat = 6, hb_n = 512;
    double hb_offset = 4.0, hb_radius = 40.5;
    auto* hopf = gen->add_subcommand(
        "hopf-bundles", "two linked ring bundles (satellites 0 = bare rings)");
    hopf->add_option("--satellites", hb_sat);
    hopf->add_option("--offset", hb_offset);
    hopf->add_option("--radius", hb_radius);
    hopf->add_option("--n", hb_n);
    hopf->add_option("--out", gen_out)->required();
    hopf->add_option("--name", gen_name);

    // topo -----------------------------------------------------------------
    TopoOptions topo;
    auto* topo_cmd = app.add_subcommand("topo", "helicity decomposition report");
    topo_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    topo_cmd->add_option("--input", topo.input)->required();
    topo_cmd->add_option("--framing", topo.framing,
                         "frenet | seifert | winding:k");
    topo_cmd->add_option("--epsilon", topo.epsilon);
    topo_cmd->add_option("--phi-ref", topo.phi_ref);
    topo_cmd->add_option("--nodes", topo.nodes);
    topo_cmd->add_option("--round-tol", topo.round_tol);
    topo_cmd->add_option("--zero-tol", topo.zero_tol);
    topo_cmd->add_option("--out", topo.out)->required();

    // gpe ------------------------------------------------------------------
    auto* gpe_cmd = app.add_subcommand("gpe", "Gross-Pitaevskii experiments");
    gpe_cmd->require_subcommand(1);
    GpeOptions gpe;
    auto* gpe_run = gpe_cmd->add_subcommand("run", "run a scene");
    gpe_run->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    gpe_run->add_option("--scene", gpe.scene, "ring | hopf-single | hopf-bundle3");
    gpe_run->add_option("--grid", gpe.grid);
    gpe_run->add_option("--dx", gpe.dx);
    gpe_run->add_option("--dt", gpe.dt);
    gpe_run->add_option("--t-end", gpe.t_end);
    gpe_run->add_option("--steps", gpe.steps);
    gpe_run->add_option("--order", gpe.order);
    gpe_run->add_option("--stride", gpe.stride);
    gpe_run->add_flag("--write-fields", gpe.write_fields);
    gpe_run->add_option("--out", gpe.out)->required();

    // coarse ---------------------------------------------------------------
    CoarseOptions coarse;
    auto* coarse_cmd = app.add_subcommand("coarse", "quasiclassical helicity");
    coarse_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    coarse_cmd->add_option("--input", coarse.input)->required();
    coarse_cmd->add_option("--grid", coarse.grid);
    coarse_cmd->add_option("--dx", coarse.dx);
    coarse_cmd->add_option("--kernel-width", coarse.kernel_width);
    coarse_cmd->add_option("--out", coarse.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    (void)seed;  // recorded for reproducibility; no command randomizes yet

    try {
        if (tref->parsed()) {
            const fs::path dir = ensure_out_dir(gen_out);
            write_filaments(dir / gen_name, {make_torus_knot(tk)});
            write_manifest(dir, {gen_name});
        } else if (circ->parsed()) {
            const fs::path dir = ensure_out_dir(gen_out);
            const Filament f = make_circle(
                Vec3(c_center[0], c_center[1], c_center[2]), c_radius,
                Vec3(c_normal[0], c_normal[1], c_normal[2]), c_n, c_gamma, 0);
            write_filaments(dir / gen_name, {f});
            write_manifest(dir, {gen_name});
        } else if (hopf->parsed()) {
            const fs::path dir = ensure_out_dir(gen_out);
            Filament ring1 = make_circle(Vec3(-20.25, 19.5, 0.0) * (hb_radius / 40.5),
                                         hb_radius, Vec3::UnitZ(), hb_n, 1.0, 0);
            Filament ring2 = make_circle(Vec3(20.25, 0.0, 0.0) * (hb_radius / 40.5),
                                         hb_radius, Vec3::UnitY(), hb_n, 1.0, 1);
            std::vector<Filament> scene;
            if (hb_sat > 0) {
                scene = make_bundle(ring1, hb_sat, hb_offset);
                auto b2 = make_bundle(ring2, hb_sat, hb_offset);
                for (auto& f : b2) {
                    f.id += static_cast<int>(scene.size());
                    scene.push_back(std::move(f));
                }
            } else {
                scene = {ring1, ring2};
            }
            write_filaments(dir / gen_name, scene);
            write_manifest(dir, {gen_name});
        } else if (topo_cmd->parsed()) {
            run_topo(topo);
        } else if (gpe_run->parsed()) {
            run_gpe(gpe);
        } else if (coarse_cmd->parsed()) {
            run_coarse(coarse);
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ToleranceError& e) {
        std::fprintf(stderr, "tolerance failure: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
