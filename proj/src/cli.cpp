#include "pcgen/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pcgen/data.hpp"
#include "pcgen/losses.hpp"
#include "pcgen/metrics.hpp"
#include "pcgen/model.hpp"
#include "pcgen/ot.hpp"
#include "pcgen/trainer.hpp"

namespace pcgen::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ----------------------------------------------------------------- SVG ---

struct Series {
    std::string name;
    std::vector<double> ys;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void write_line_chart(const std::string& path, const std::vector<Series>& series) {
    double lo = 0.0, hi = 1.0;
    std::size_t n = 0;
    bool first = true;
    for (const Series& s : series) {
        n = std::max(n, s.ys.size());
        for (double y : s.ys) {
            if (first) {
                lo = hi = y;
                first = false;
            } else {
                lo = std::min(lo, y);
                hi = std::max(hi, y);
            }
        }
    }
    if (n < 2) throw DataError("export-plot: need at least two rows to plot");
    if (hi <= lo) hi = lo + 1.0;

    const double W = 800, H = 500, ml = 70, mr = 20, mt = 20, mb = 40;
    std::ofstream out(path);
    if (!out) throw DataError("export-plot: cannot open '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb + 4
        << "\" text-anchor=\"end\" font-size=\"12\">" << fmt6(lo) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
        << "\" text-anchor=\"end\" font-size=\"12\">" << fmt6(hi) << "</text>\n";
    out << "<text x=\"" << (W - mr) << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"end\" font-size=\"12\">" << n - 1 << "</text>\n";

    int color = 0;
    double legend_y = mt + 12;
    for (const Series& s : series) {
        if (s.ys.size() < 2) continue;
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[color % 6]
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.ys.size(); ++i) {
            const double x = ml + (W - ml - mr) * static_cast<double>(i) / (n - 1);
            const double y = H - mb - (H - mt - mb) * (s.ys[i] - lo) / (hi - lo);
            out << fmt6(x) << "," << fmt6(y) << " ";
        }
        out << "\"/>\n";
        out << "<text x=\"" << W - mr - 8 << "\" y=\"" << legend_y
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << kPalette[color % 6] << "\">"
            << s.name << "</text>\n";
        legend_y += 14;
        ++color;
    }
    out << "</svg>\n";
}

void write_scatter(const std::string& path, const std::vector<std::vector<std::array<double, 2>>>& sets) {
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& pts : sets)
        for (const auto& p : pts) {
            if (first) {
                xlo = xhi = p[0];
                ylo = yhi = p[1];
                first = false;
            } else {
                xlo = std::min(xlo, p[0]);
                xhi = std::max(xhi, p[0]);
                ylo = std::min(ylo, p[1]);
                yhi = std::max(yhi, p[1]);
            }
        }
    if (first) throw DataError("export-plot: no points to plot");
    const double padx = 0.05 * std::max(xhi - xlo, 1e-9);
    const double pady = 0.05 * std::max(yhi - ylo, 1e-9);
    xlo -= padx;
    xhi += padx;
    ylo -= pady;
    yhi += pady;

    const double W = 600, H = 600;
    std::ofstream out(path);
    if (!out) throw DataError("export-plot: cannot open '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    int color = 0;
    for (const auto& pts : sets) {
        for (const auto& p : pts) {
            const double x = (p[0] - xlo) / (xhi - xlo) * W;
            const double y = H - (p[1] - ylo) / (yhi - ylo) * H;
            out << "<circle cx=\"" << fmt6(x) << "\" cy=\"" << fmt6(y)
                << "\" r=\"2\" fill=\"" << kPalette[color % 6] << "\" fill-opacity=\"0.7\"/>\n";
        }
        ++color;
    }
    out << "</svg>\n";
}

// ------------------------------------------------------------- commands ---

int cmd_gen_circles(const std::string& out_dir, int m, int n, std::uint64_t seed, double r_min,
                    double r_max, double center_offset, double center_var, bool binary,
                    std::ostream& out) {
    data::CircleDatasetConfig cfg;
    cfg.num_clouds = m;
    cfg.points_per_cloud = n;
    cfg.seed = seed;
    cfg.radius_min = r_min;
    cfg.radius_max = r_max;
    cfg.center_offset = center_offset;
    cfg.center_variance = center_var;
    const data::CircleDataset ds = data::gen_circles(cfg);

    fs::create_directories(out_dir);
    data::Manifest manifest;
    char name[64];
    for (int i = 0; i < m; ++i) {
        std::snprintf(name, sizeof(name), "cloud_%05d.%s", i, binary ? "pcb" : "txt");
        const std::string file = (fs::path(out_dir) / name).string();
        if (binary)
            data::save_cloud_binary(file, ds.clouds[static_cast<std::size_t>(i)]);
        else
            data::save_cloud_text(file, ds.clouds[static_cast<std::size_t>(i)]);
        data::ManifestEntry e;
        e.path = name;  // relative to the manifest
        e.label = "circle_" + std::to_string(i);
        e.has_truth = true;
        e.truth = ds.truths[static_cast<std::size_t>(i)];
        manifest.entries.push_back(std::move(e));
    }
    const std::string mpath = (fs::path(out_dir) / "manifest.json").string();
    data::save_manifest(mpath, manifest);
    out << "wrote " << m << " clouds and " << mpath << "\n";
    return 0;
}

int cmd_gen_mesh(const std::string& out_dir, const std::string& mesh_path, int m, int n,
                 std::uint64_t seed, bool normalize, bool augment, bool binary, std::ostream& out) {
    const metrics::Mesh mesh = data::load_mesh(mesh_path);
    data::PreprocessConfig pre = data::PreprocessConfig::defaults();
    pre.samples_per_mesh = n;
    pre.normalize = normalize;
    if (!augment) pre.augmentation_angles = {0.0};
    pre.validate();

    fs::create_directories(out_dir);
    data::Manifest manifest;
    char name[64];
    for (int i = 0; i < m; ++i) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        Cloud cloud = data::sample_surface(mesh, pre.samples_per_mesh, rng);
        const double angle =
            pre.augmentation_angles[static_cast<std::size_t>(i) % pre.augmentation_angles.size()];
        if (angle != 0.0) cloud = data::rotate_xy(cloud, angle);
        if (pre.normalize) cloud = data::normalize(cloud).cloud;
        std::snprintf(name, sizeof(name), "cloud_%05d.%s", i, binary ? "pcb" : "txt");
        const std::string file = (fs::path(out_dir) / name).string();
        if (binary)
            data::save_cloud_binary(file, cloud);
        else
            data::save_cloud_text(file, cloud);
        data::ManifestEntry e;
        e.path = name;
        e.label = fs::path(mesh_path).stem().string() + "_" + std::to_string(i);
        e.mesh = fs::absolute(mesh_path).string();
        manifest.entries.push_back(std::move(e));
    }
    const std::string mpath = (fs::path(out_dir) / "manifest.json").string();
    data::save_manifest(mpath, manifest);
    out << "wrote " << m << " clouds and " << mpath << "\n";
    if (mesh.dropped_degenerate > 0)
        out << "dropped " << mesh.dropped_degenerate << " zero-area faces\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"point-cloud generative modeling with sandwiched transport bounds"};
    app.require_subcommand(1);

    // --- gen-data ---
    auto* gen = app.add_subcommand("gen-data", "synthesize datasets (circle benchmark or mesh samples)");
    std::string gen_kind = "circles";
    gen->add_option("kind", gen_kind, "dataset kind: circles | mesh")
        ->check(CLI::IsMember({"circles", "mesh"}));
    std::string gen_out = "data";
    int gen_m = 100, gen_n = 100;
    std::uint64_t gen_seed = 0;
    double r_min = 1.6, r_max = 6.4, c_off = 16.0, c_var = 16.0;
    std::string gen_mesh;
    bool gen_normalize = false, gen_augment = false, gen_binary = false;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--m", gen_m, "number of clouds");
    gen->add_option("--n", gen_n, "points per cloud");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--r-min", r_min, "circles: minimum radius");
    gen->add_option("--r-max", r_max, "circles: maximum radius");
    gen->add_option("--center-offset", c_off, "circles: mixture mean magnitude");
    gen->add_option("--center-var", c_var, "circles: center variance per axis");
    gen->add_option("--mesh", gen_mesh, "mesh: OFF file to sample");
    gen->add_flag("--normalize", gen_normalize, "mesh: zero mean, unit global variance");
    gen->add_flag("--augment", gen_augment, "mesh: rotate clouds by 0, pi/8, ..., 7pi/8");
    gen->add_flag("--binary", gen_binary, "write binary cloud files");

    // --- train ---
    auto* train = app.add_subcommand("train", "run a training stage from a config file");
    std::string train_config;
    std::string train_stage;
    train->add_option("--config", train_config, "JSON or key=value config file")->required();
    train->add_option("--stage", train_stage, "override stage: conditional | hierarchical");

    // --- sample ---
    auto* sample = app.add_subcommand("sample", "draw point clouds from a trained checkpoint");
    std::string s_ckpt, s_out, s_cond;
    int s_n = 500, s_objects = 1;
    std::uint64_t s_seed = 0;
    bool s_binary = false;
    sample->add_option("--ckpt", s_ckpt, "checkpoint directory")->required();
    sample->add_option("--out", s_out, "output cloud file (stem when --objects > 1)")->required();
    sample->add_option("--n", s_n, "points per cloud");
    sample->add_option("--objects", s_objects, "hierarchical draws");
    sample->add_option("--cond", s_cond, "conditional mode: encode this cloud file");
    sample->add_option("--seed", s_seed, "random seed");
    sample->add_flag("--binary", s_binary, "write binary cloud files");

    // --- ot ---
    auto* otc = app.add_subcommand("ot", "transport cost between two point clouds");
    std::string ot_a, ot_b, ot_metric = "l1";
    double ot_eps_rel = 0.01;
    otc->add_option("--a", ot_a, "first cloud file")->required();
    otc->add_option("--b", ot_b, "second cloud file")->required();
    otc->add_option("--metric", ot_metric, "ground metric: l1 | l2")
        ->check(CLI::IsMember({"l1", "l2"}));
    otc->add_option("--eps-rel", ot_eps_rel, "relative epsilon for the scaled auction");

    // --- metrics ---
    auto* met = app.add_subcommand("metrics", "distance-to-face and coverage of a cloud vs a mesh");
    std::string met_cloud, met_mesh;
    double met_threshold = 0.0;
    met->add_option("--cloud", met_cloud, "cloud file")->required();
    met->add_option("--mesh", met_mesh, "OFF mesh file")->required();
    met->add_option("--cov-threshold", met_threshold,
                    "coverage threshold (0 disables thresholding)");

    // --- eval ---
    auto* ev = app.add_subcommand("eval", "reconstruction metrics over a test manifest");
    std::string ev_ckpt, ev_manifest, ev_out;
    int ev_gen = 0;
    std::uint64_t ev_seed = 0;
    double ev_eps_rel = 0.01, ev_rlo = 1.6, ev_rhi = 6.4, ev_threshold = 0.0;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint directory")->required();
    ev->add_option("--manifest", ev_manifest, "test manifest")->required();
    ev->add_option("--out", ev_out, "output CSV path")->required();
    ev->add_option("--n-gen", ev_gen, "generated points per object (0 = default)");
    ev->add_option("--seed", ev_seed, "random seed");
    ev->add_option("--eps-rel", ev_eps_rel, "transport accuracy for reconstruction cost");
    ev->add_option("--radius-lo", ev_rlo, "reference radius range low");
    ev->add_option("--radius-hi", ev_rhi, "reference radius range high");
    ev->add_option("--cov-threshold", ev_threshold, "coverage threshold (0 disables)");

    // --- lemma-check ---
    auto* lc = app.add_subcommand("lemma-check", "verify the sandwich-tightening window");
    double lc_eps1 = 0.0, lc_eps2 = 0.0, lc_w = 1.0;
    lc->add_option("--eps1", lc_eps1, "lower approximation slack")->required();
    lc->add_option("--eps2", lc_eps2, "upper approximation slack")->required();
    lc->add_option("--w", lc_w, "reference distance");

    // --- export-plot ---
    auto* ep = app.add_subcommand("export-plot", "render a loss log or cloud scatter as SVG");
    std::string ep_log, ep_out, ep_axis = "z", ep_csv;
    std::vector<std::string> ep_clouds;
    ep->add_option("--log", ep_log, "training log CSV to chart");
    ep->add_option("--cloud", ep_clouds, "cloud file(s) to scatter");
    ep->add_option("--out", ep_out, "output SVG path")->required();
    ep->add_option("--axis", ep_axis, "projection axis for 3D clouds: x | y | z")
        ->check(CLI::IsMember({"x", "y", "z"}));
    ep->add_option("--csv", ep_csv, "copy of the raw CSV (default: out with .csv)");

    std::vector<char*> argv;
    std::vector<std::string> storage;
    storage.push_back("pcgen");
    for (const std::string& a : args) storage.push_back(a);
    for (std::string& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) {
            if (gen_kind == "circles")
                return cmd_gen_circles(gen_out, gen_m, gen_n, gen_seed, r_min, r_max, c_off, c_var,
                                       gen_binary, out);
            if (gen_mesh.empty()) throw DataError("gen-data mesh: --mesh required");
            return cmd_gen_mesh(gen_out, gen_mesh, gen_m, gen_n, gen_seed, gen_normalize,
                                gen_augment, gen_binary, out);
        }

        if (train->parsed()) {
            trainer::TrainConfig cfg = trainer::load_train_config(train_config);
            if (!train_stage.empty()) cfg.stage = train_stage;
            const trainer::TrainReport report = cfg.stage == "hierarchical"
                                                    ? trainer::train_hierarchical(cfg)
                                                    : trainer::train_conditional(cfg);
            out << "steps: " << report.sandwich.size() << "\n";
            if (!report.sandwich.empty()) {
                out << "final w_upper: " << fmt6(report.w_upper.back()) << "\n";
                out << "final w_lower: " << fmt6(report.w_lower.back()) << "\n";
                out << "final sandwich: " << fmt6(report.sandwich.back()) << "\n";
            }
            out << "checkpoint: " << report.checkpoint_path << "\n";
            out << "wall seconds: " << fmt6(report.wall_seconds) << "\n";
            return 0;
        }

        if (sample->parsed()) {
            nets::Model model = nets::Model::load(s_ckpt);
            auto write = [&](const std::string& path, const Cloud& c) {
                if (s_binary)
                    data::save_cloud_binary(path, c);
                else
                    data::save_cloud_text(path, c);
            };
            if (!s_cond.empty()) {
                const Cloud raw = data::load_cloud(s_cond);
                const Cloud real = model.norm.apply(raw);
                const diff::Matrix psi = model.q.encode(real);
                Rng rng(s_seed);
                write(s_out, model.norm.invert(model.gx.generate(psi, s_n, rng)));
                out << "wrote " << s_out << "\n";
                return 0;
            }
            if (!model.gtheta_trained)
                throw DataError("sample: checkpoint has no trained object generator; "
                                "run the hierarchical stage or pass --cond");
            for (int k = 0; k < s_objects; ++k) {
                Rng rng(mix_seed(s_seed, static_cast<std::uint64_t>(k)));
                const Cloud cloud =
                    model.norm.invert(nets::hierarchical_sample(model.gtheta, model.gx, s_n, rng));
                std::string path = s_out;
                if (s_objects > 1) {
                    const fs::path p(s_out);
                    path = (p.parent_path() / (p.stem().string() + "_" + std::to_string(k) +
                                               p.extension().string()))
                               .string();
                }
                write(path, cloud);
                out << "wrote " << path << "\n";
            }
            return 0;
        }

        if (otc->parsed()) {
            const Cloud a = data::load_cloud(ot_a);
            const Cloud b = data::load_cloud(ot_b);
            const ot::Metric metric = ot_metric == "l2" ? ot::Metric::L2 : ot::Metric::L1;
            const ot::AuctionConfig cfg = ot::auction_config_rel(a, b, ot_eps_rel, metric);
            const ot::Assignment asg = ot::auction_assign(a, b, cfg, metric);
            out << "avg_cost,total_cost,gap_bound,rounds\n";
            out << fmt(asg.average_cost) << "," << fmt(asg.total_cost) << ","
                << fmt(asg.gap_bound) << "," << asg.rounds << "\n";
            return 0;
        }

        if (met->parsed()) {
            const Cloud cloud = data::load_cloud(met_cloud);
            const metrics::Mesh mesh = data::load_mesh(met_mesh);
            const double threshold =
                met_threshold > 0.0 ? met_threshold : std::numeric_limits<double>::infinity();
            out << "d2f,coverage,faces,points\n";
            out << fmt(metrics::d2f(cloud, mesh)) << ","
                << fmt(metrics::coverage(cloud, mesh, threshold)) << "," << mesh.face_count()
                << "," << cloud.rows() << "\n";
            return 0;
        }

        if (ev->parsed()) {
            trainer::EvalOptions opt;
            opt.gen_points = ev_gen;
            opt.seed = ev_seed;
            opt.eps_rel = ev_eps_rel;
            opt.radius_lo = ev_rlo;
            opt.radius_hi = ev_rhi;
            if (ev_threshold > 0.0) opt.coverage_threshold = ev_threshold;
            const trainer::EvalReport report =
                trainer::eval_reconstruction(ev_ckpt, ev_manifest, opt);
            report.write_csv(ev_out);
            out << "rows," << report.rows.size() << "\n";
            if (report.dim == 2) {
                out << "ks_radius," << fmt(report.ks_radius) << "\n";
                out << "quadrant_share," << fmt(report.quadrant_share[0]) << ","
                    << fmt(report.quadrant_share[1]) << "," << fmt(report.quadrant_share[2]) << ","
                    << fmt(report.quadrant_share[3]) << "\n";
            }
            out << "median_w_upper," << fmt(report.median_w_upper) << "\n";
            out << "mean_w_upper," << fmt(report.mean_w_upper) << "\n";
            return 0;
        }

        if (lc->parsed()) {
            const losses::Lemma1Result res = losses::lemma1_verify(lc_w, lc_eps1, lc_eps2);
            out << "window: (" << fmt(res.window_lo) << ", " << fmt(res.window_hi) << ")\n";
            out << "lambda_star: " << fmt(res.lambda_star) << "\n";
            out << "achieved_error: " << fmt(res.achieved_error) << "\n";
            out << "one_sided_error: " << fmt(std::min(res.err_upper, res.err_lower)) << "\n";
            return 0;
        }

        if (ep->parsed()) {
            if (!ep_log.empty() && !ep_clouds.empty())
                throw DataError("export-plot: pass either --log or --cloud, not both");
            if (ep_log.empty() && ep_clouds.empty())
                throw DataError("export-plot: pass --log or --cloud");
            if (!ep_log.empty()) {
                std::ifstream in(ep_log);
                if (!in) throw DataError("export-plot: cannot open '" + ep_log + "'");
                std::string header;
                if (!std::getline(in, header))
                    throw DataError("export-plot: empty log '" + ep_log + "'");
                std::vector<std::string> cols;
                {
                    std::istringstream hs(header);
                    std::string c;
                    while (std::getline(hs, c, ',')) cols.push_back(c);
                }
                std::vector<Series> series;
                for (const std::string& c : cols)
                    if (c != "step") series.push_back({c, {}});
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    std::istringstream ls(line);
                    std::string tok;
                    std::size_t si = 0;
                    for (std::size_t ci = 0; ci < cols.size() && std::getline(ls, tok, ','); ++ci) {
                        if (cols[ci] == "step") continue;
                        series[si++].ys.push_back(std::stod(tok));
                    }
                }
                write_line_chart(ep_out, series);
                std::string csv_copy = ep_csv;
                if (csv_copy.empty()) csv_copy = fs::path(ep_out).replace_extension(".csv").string();
                fs::copy_file(ep_log, csv_copy, fs::copy_options::overwrite_existing);
                out << "wrote " << ep_out << " and " << csv_copy << "\n";
                return 0;
            }
            std::vector<std::vector<std::array<double, 2>>> sets;
            for (const std::string& f : ep_clouds) {
                const Cloud c = data::load_cloud(f);
                std::vector<std::array<double, 2>> pts;
                int ax = 0, ay = 1;
                if (c.cols() == 3) {
                    if (ep_axis == "x") { ax = 1; ay = 2; }
                    else if (ep_axis == "y") { ax = 0; ay = 2; }
                    else { ax = 0; ay = 1; }
                } else if (c.cols() != 2) {
                    throw DataError("export-plot: cloud '" + f + "' must be 2D or 3D");
                }
                for (int i = 0; i < c.rows(); ++i) pts.push_back({c(i, ax), c(i, ay)});
                sets.push_back(std::move(pts));
            }
            write_scatter(ep_out, sets);
            out << "wrote " << ep_out << "\n";
            return 0;
        }
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "numeric failure: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

}  // namespace pcgen::cli
