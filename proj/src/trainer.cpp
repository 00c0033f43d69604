#include "pcgen/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pcgen::trainer {

namespace fs = std::filesystem;
using diff::Matrix;
using nlohmann::json;

void TrainConfig::validate() const {
    if (stage != "conditional" && stage != "hierarchical")
        throw std::invalid_argument("TrainConfig: stage must be conditional or hierarchical");
    if (batch_size < 1 || points_per_object < 1 || steps < 1)
        throw std::invalid_argument("TrainConfig: counts must be >= 1");
    if (!(sandwich.lambda >= 0.0 && sandwich.lambda <= 1.0))
        throw std::invalid_argument("TrainConfig: lambda must lie in [0,1]");
    if (lower.critic_steps < 1)
        throw std::invalid_argument("TrainConfig: critic_steps must be >= 1");
    if (!(lower.clip_c > 0.0)) throw std::invalid_argument("TrainConfig: clip_c must be > 0");
    if (!(lower.rho >= 0.0)) throw std::invalid_argument("TrainConfig: rho must be >= 0");
    if (!(auction_eps_factor > 0.0))
        throw std::invalid_argument("TrainConfig: auction_eps_factor must be > 0");
    if (!(optimizer.lr_gen > 0.0) || !(optimizer.lr_critic > 0.0))
        throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    if (manifest.empty()) throw std::invalid_argument("TrainConfig: manifest path required");
    model.validate();
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::string tok;
    std::istringstream in(s);
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError("config: bad boolean '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_field(TrainConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "stage") cfg.stage = value;
        else if (key == "manifest") cfg.manifest = value;
        else if (key == "batch_size") cfg.batch_size = std::stoi(value);
        else if (key == "points_per_object") cfg.points_per_object = std::stoi(value);
        else if (key == "steps") cfg.steps = std::stoi(value);
        else if (key == "lambda") cfg.sandwich.lambda = std::stod(value);
        else if (key == "critic_steps") cfg.lower.critic_steps = std::stoi(value);
        else if (key == "clip_c") {
            cfg.lower.clip_c = std::stod(value);
            cfg.model.clip_c = cfg.lower.clip_c;
        } else if (key == "rho") cfg.lower.rho = std::stod(value);
        else if (key == "auction_eps_factor") cfg.auction_eps_factor = std::stod(value);
        else if (key == "lr_gen") cfg.optimizer.lr_gen = std::stod(value);
        else if (key == "lr_critic") cfg.optimizer.lr_critic = std::stod(value);
        else if (key == "beta1") cfg.optimizer.beta1 = std::stod(value);
        else if (key == "beta2") cfg.optimizer.beta2 = std::stod(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
        else if (key == "log_path") cfg.log_path = value;
        else if (key == "normalize_data") cfg.normalize_data = parse_bool(value);
        else if (key == "checkpoint_every") cfg.checkpoint_every = std::stoi(value);
        else if (key == "init_checkpoint") cfg.init_checkpoint = value;
        else if (key == "d") cfg.model.d = std::stoi(value);
        else if (key == "d1") cfg.model.d1 = std::stoi(value);
        else if (key == "d2") cfg.model.d2 = std::stoi(value);
        else if (key == "d3") cfg.model.d3 = std::stoi(value);
        else if (key == "pool") cfg.model.pool = nets::pool_from_string(value);
        else if (key == "activation") cfg.model.act = nets::activation_from_string(value);
        else if (key == "q_pel") cfg.model.q_pel = parse_int_list(value);
        else if (key == "q_head") cfg.model.q_head = parse_int_list(value);
        else if (key == "gx_hidden") cfg.model.gx_hidden = parse_int_list(value);
        else if (key == "gtheta_hidden") cfg.model.gtheta_hidden = parse_int_list(value);
        else if (key == "critic_hidden") cfg.model.critic_hidden = parse_int_list(value);
        else if (key == "code_critic_hidden") cfg.model.code_critic_hidden = parse_int_list(value);
        else throw DataError("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw DataError("config: bad value '" + value + "' for key '" + key + "'");
    } catch (const std::out_of_range&) {
        throw DataError("config: value out of range for key '" + key + "'");
    }
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_train_config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    TrainConfig cfg;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw DataError("load_train_config: '" + path + "': " + e.what());
        }
        for (const auto& [key, val] : j.items()) {
            std::string v;
            if (val.is_string()) {
                v = val.get<std::string>();
            } else if (val.is_array()) {
                std::string acc;
                for (const auto& x : val) {
                    if (!acc.empty()) acc += ',';
                    acc += std::to_string(x.get<long>());
                }
                v = acc;
            } else if (val.is_boolean()) {
                v = val.get<bool>() ? "true" : "false";
            } else {
                v = val.dump();
            }
            apply_config_field(cfg, key, v);
        }
    } else {
        std::istringstream lines(text);
        std::string line;
        int lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw DataError("load_train_config: " + path + ":" + std::to_string(lineno) +
                                ": expected key = value");
            apply_config_field(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    // Relative paths in a config resolve against the config's directory.
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
    };
    resolve(cfg.manifest);
    resolve(cfg.checkpoint_dir);
    resolve(cfg.log_path);
    resolve(cfg.init_checkpoint);
    return cfg;
}

namespace {

struct DataSet {
    std::vector<Cloud> clouds;
    std::vector<std::string> labels;
};

DataSet load_dataset(const std::string& manifest_path, int expected_dim) {
    const data::Manifest manifest = data::load_manifest(manifest_path);
    if (manifest.entries.empty())
        throw DataError("dataset manifest '" + manifest_path + "' lists no clouds");
    DataSet ds;
    ds.clouds.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        Cloud c = data::load_cloud(e.path);
        if (c.cols() != expected_dim)
            throw DataError("cloud '" + e.path + "' is " + std::to_string(c.cols()) +
                            "D, expected " + std::to_string(expected_dim) + "D");
        ds.clouds.push_back(std::move(c));
        ds.labels.push_back(e.label);
    }
    return ds;
}

nets::Normalization fit_normalization(const std::vector<Cloud>& clouds) {
    std::size_t total = 0;
    for (const Cloud& c : clouds) total += static_cast<std::size_t>(c.rows());
    Cloud pooled(static_cast<int>(total), clouds.front().cols());
    int at = 0;
    for (const Cloud& c : clouds) {
        for (int i = 0; i < c.rows(); ++i, ++at)
            for (int j = 0; j < c.cols(); ++j) pooled(at, j) = c(i, j);
    }
    const data::NormalizeResult res = data::normalize(pooled);
    nets::Normalization norm;
    norm.offset = res.offset;
    norm.scale = res.scale;
    return norm;
}

Cloud subsample(const Cloud& cloud, int n, Rng& rng) {
    if (cloud.rows() <= n) return cloud;
    std::vector<int> idx(static_cast<std::size_t>(cloud.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    for (int i = 0; i < n; ++i) {
        const int j = rng.uniform_int(i, cloud.rows() - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    Cloud out(n, cloud.cols());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cloud.cols(); ++j) out(i, j) = cloud(idx[static_cast<std::size_t>(i)], j);
    return out;
}

Cloud vstack(const std::vector<Cloud>& parts) {
    int total = 0;
    for (const Cloud& p : parts) total += p.rows();
    Cloud out(total, parts.front().cols());
    int at = 0;
    for (const Cloud& p : parts)
        for (int i = 0; i < p.rows(); ++i, ++at)
            for (int j = 0; j < p.cols(); ++j) out(at, j) = p(i, j);
    return out;
}

Matrix scalar1x1(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

class CsvLog {
public:
    explicit CsvLog(const std::string& path) : out_(path) {
        if (!out_) throw DataError("cannot open log '" + path + "'");
        out_ << "step,w_upper,w_lower,sandwich,critic_objective,k\n";
    }
    void row(int step, double wu, double wl, double s, double co, double k) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", step, wu, wl, s, co, k);
        out_ << buf;
    }
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

[[noreturn]] void abort_with_checkpoint(const std::string& what, int step,
                                        const std::string& last_good) {
    std::string msg = what + " at step " + std::to_string(step);
    msg += last_good.empty() ? "; no checkpoint saved yet"
                             : "; last good checkpoint: " + last_good;
    throw NumericError(msg);
}

}  // namespace

TrainReport train_conditional(const TrainConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    DataSet ds = load_dataset(cfg.manifest, cfg.model.d);
    const int num_objects = static_cast<int>(ds.clouds.size());

    nets::Model model = nets::Model::build(cfg.model, mix_seed(cfg.seed, 0xA110));
    if (cfg.normalize_data) {
        model.norm = fit_normalization(ds.clouds);
        for (Cloud& c : ds.clouds) c = model.norm.apply(c);
    }

    std::vector<diff::ParamTensor*> gen_params = model.q.params();
    for (auto* p : model.gx.params()) gen_params.push_back(p);
    diff::Adam gen_opt(gen_params, {cfg.optimizer.lr_gen, cfg.optimizer.beta1,
                                    cfg.optimizer.beta2, 1e-8});
    diff::Adam critic_opt(model.critic.params(), {cfg.optimizer.lr_critic, cfg.optimizer.beta1,
                                                  cfg.optimizer.beta2, 1e-8});
    losses::LowerBoundConfig lb = cfg.lower;
    model.critic.clip(lb.clip_c);

    const double lambda = cfg.sandwich.lambda;
    Rng rng(mix_seed(cfg.seed, 0x5EED));
    CsvLog log(cfg.log_path);

    TrainReport report;
    std::string last_good;

    for (int step = 0; step < cfg.steps; ++step) {
        // Assemble the object minibatch.
        std::vector<Cloud> reals(static_cast<std::size_t>(cfg.batch_size));
        for (int b = 0; b < cfg.batch_size; ++b) {
            const int pick = rng.uniform_int(0, num_objects - 1);
            reals[static_cast<std::size_t>(b)] =
                subsample(ds.clouds[static_cast<std::size_t>(pick)], cfg.points_per_object, rng);
        }

        double critic_obj = 0.0;
        if (lambda > 0.0) {
            std::vector<Matrix> psis(reals.size());
            for (std::size_t b = 0; b < reals.size(); ++b) psis[b] = model.q.encode(reals[b]);
            const Cloud real_concat = vstack(reals);
            for (int cs = 0; cs < lb.critic_steps; ++cs) {
                std::vector<Cloud> fakes(reals.size());
                for (std::size_t b = 0; b < reals.size(); ++b)
                    fakes[b] = model.gx.generate(psis[b], reals[b].rows(), rng);
                const auto res =
                    losses::critic_update(model.critic, real_concat, vstack(fakes), lb, critic_opt);
                critic_obj = res.objective;
            }
        }

        // Generator / encoder step on the sandwiched objective.
        diff::Tape t;
        diff::Tape::NodeId total = -1;
        double wu_sum = 0.0, wl_sum = 0.0;
        for (std::size_t b = 0; b < reals.size(); ++b) {
            const Cloud& real = reals[b];
            const auto psi = model.q.forward(t, t.constant(real), true);
            const Matrix z = model.gx.sample_noise(real.rows(), rng);
            const auto fake = model.gx.forward(t, psi, z, true);

            diff::Tape::NodeId obj = -1;
            if (lambda < 1.0) {
                const Cloud& fake_vals = t.value(fake);
                const double mean_cost = ot::mean_pairwise_cost(fake_vals, real);
                const double eps = std::max(cfg.auction_eps_factor * mean_cost, 1e-12);
                const auto asg = ot::auction_assign(fake_vals, real, ot::AuctionConfig::single_phase(eps));
                Cloud matched(real.rows(), real.cols());
                for (int i = 0; i < real.rows(); ++i)
                    for (int j = 0; j < real.cols(); ++j)
                        matched(i, j) = real(asg.target_of[static_cast<std::size_t>(i)], j);
                // average per-point L1 matched cost, kept differentiable in fake
                const auto wu = t.affine(t.mean_all(t.abs(t.sub(fake, t.constant(matched)))),
                                         static_cast<double>(real.cols()), 0.0);
                wu_sum += t.value(wu)(0, 0);
                obj = t.affine(wu, 1.0 - lambda, 0.0);
            }
            if (lambda > 0.0) {
                const auto sf = model.critic.forward(t, fake, true);
                const double mean_real_score = exact_mean(model.critic.score(real).values());
                const auto wl = t.sub(t.constant(scalar1x1(mean_real_score)), t.mean_all(sf));
                wl_sum += t.value(wl)(0, 0);
                const auto term = t.affine(wl, lambda, 0.0);
                obj = obj < 0 ? term : t.add(obj, term);
            }
            total = total < 0 ? obj : t.add(total, obj);
        }
        const auto batch_loss = t.affine(total, 1.0 / cfg.batch_size, 0.0);
        t.backward_scalar(batch_loss);
        gen_opt.step();
        for (auto* p : model.critic.params()) p->zero_grad();  // from the W_L term

        const double wu_avg = wu_sum / cfg.batch_size;
        const double wl_avg = wl_sum / cfg.batch_size;
        const double sandwich = losses::sandwich_loss(wu_avg, wl_avg, lambda);
        if (!std::isfinite(wu_avg) || !std::isfinite(wl_avg) || !std::isfinite(sandwich) ||
            !std::isfinite(critic_obj))
            abort_with_checkpoint("train_conditional: non-finite loss", step, last_good);

        report.w_upper.push_back(wu_avg);
        report.w_lower.push_back(wl_avg);
        report.sandwich.push_back(sandwich);
        log.row(step, wu_avg, wl_avg, sandwich, critic_obj, model.critic.lipschitz_bound());

        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
            model.save(cfg.checkpoint_dir);
            last_good = cfg.checkpoint_dir;
        }
    }

    model.save(cfg.checkpoint_dir);
    log.flush();
    report.checkpoint_path = cfg.checkpoint_dir;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

TrainReport train_hierarchical(const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.init_checkpoint.empty())
        throw DataError("train_hierarchical: init_checkpoint (stage-1 checkpoint) required");
    const auto t0 = std::chrono::steady_clock::now();

    nets::Model model = nets::Model::load(cfg.init_checkpoint);
    DataSet ds = load_dataset(cfg.manifest, model.spec.d);
    if (!model.norm.identity())
        for (Cloud& c : ds.clouds) c = model.norm.apply(c);

    // Collect descriptors once with the frozen encoder.
    const int num_objects = static_cast<int>(ds.clouds.size());
    Matrix codes(num_objects, model.spec.d2);
    for (int m = 0; m < num_objects; ++m) {
        const Matrix psi = model.q.encode(ds.clouds[static_cast<std::size_t>(m)]);
        for (int j = 0; j < model.spec.d2; ++j) codes(m, j) = psi(0, j);
    }

    diff::Adam gt_opt(model.gtheta.params(), {cfg.optimizer.lr_gen, cfg.optimizer.beta1,
                                              cfg.optimizer.beta2, 1e-8});
    diff::Adam cc_opt(model.code_critic.params(), {cfg.optimizer.lr_critic, cfg.optimizer.beta1,
                                                   cfg.optimizer.beta2, 1e-8});
    losses::LowerBoundConfig lb = cfg.lower;
    model.code_critic.clip(lb.clip_c);

    Rng rng(mix_seed(cfg.seed, 0x5EED2));
    CsvLog log(cfg.log_path);
    TrainReport report;
    std::string last_good;

    auto sample_real_codes = [&](int count) {
        Matrix batch(count, model.spec.d2);
        for (int i = 0; i < count; ++i) {
            const int pick = rng.uniform_int(0, num_objects - 1);
            for (int j = 0; j < model.spec.d2; ++j) batch(i, j) = codes(pick, j);
        }
        return batch;
    };
    auto sample_u = [&](int count) {
        Matrix u(count, model.spec.d3);
        for (double& x : u.values()) x = rng.normal();
        return u;
    };

    for (int step = 0; step < cfg.steps; ++step) {
        const Matrix real_codes = sample_real_codes(cfg.batch_size);
        double critic_obj = 0.0;
        for (int cs = 0; cs < lb.critic_steps; ++cs) {
            const Matrix fake_codes = model.gtheta.apply(sample_u(cfg.batch_size));
            const auto res =
                losses::critic_update(model.code_critic, real_codes, fake_codes, lb, cc_opt);
            critic_obj = res.objective;
        }

        diff::Tape t;
        const auto fake = model.gtheta.forward(t, t.constant(sample_u(cfg.batch_size)), true);
        const auto sf = model.code_critic.forward(t, fake, true);
        const double mean_real = exact_mean(model.code_critic.score(real_codes).values());
        const auto wl = t.sub(t.constant(scalar1x1(mean_real)), t.mean_all(sf));
        const double wl_val = t.value(wl)(0, 0);
        t.backward_scalar(wl);
        gt_opt.step();
        for (auto* p : model.code_critic.params()) p->zero_grad();

        if (!std::isfinite(wl_val) || !std::isfinite(critic_obj))
            abort_with_checkpoint("train_hierarchical: non-finite loss", step, last_good);
        report.w_upper.push_back(0.0);
        report.w_lower.push_back(wl_val);
        report.sandwich.push_back(wl_val);
        log.row(step, 0.0, wl_val, wl_val, critic_obj, model.code_critic.lipschitz_bound());

        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
            model.gtheta_trained = true;
            model.save(cfg.checkpoint_dir);
            last_good = cfg.checkpoint_dir;
        }
    }

    model.gtheta_trained = true;
    model.save(cfg.checkpoint_dir);
    log.flush();
    report.checkpoint_path = cfg.checkpoint_dir;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void EvalReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("eval: cannot open '" + path + "'");
    char buf[256];
    if (dim == 2) {
        out << "label,center_x,center_y,radius,residual_rms,w_upper\n";
        for (const EvalRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.label.c_str(),
                          r.center_x, r.center_y, r.radius, r.residual_rms, r.w_upper);
            out << buf;
        }
    } else {
        out << "label,d2f,coverage,w_upper\n";
        for (const EvalRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", r.label.c_str(), r.d2f,
                          r.coverage, r.w_upper);
            out << buf;
        }
    }
}

EvalReport eval_reconstruction(const std::string& checkpoint_dir, const std::string& manifest_path,
                               const EvalOptions& opt) {
    nets::Model model = nets::Model::load(checkpoint_dir);
    const data::Manifest manifest = data::load_manifest(manifest_path);
    if (manifest.entries.empty())
        throw DataError("eval_reconstruction: manifest lists no clouds");

    EvalReport report;
    report.dim = model.spec.d;
    const int gen_n = opt.gen_points > 0 ? opt.gen_points : (model.spec.d == 2 ? 500 : 2048);

    std::vector<double> radii;
    std::array<int, 4> quadrant_counts{};
    int fitted = 0;
    std::vector<double> wus;

    for (std::size_t m = 0; m < manifest.entries.size(); ++m) {
        const auto& entry = manifest.entries[m];
        const Cloud raw = data::load_cloud(entry.path);
        if (raw.cols() != model.spec.d)
            throw DataError("eval_reconstruction: cloud '" + entry.path + "' is " +
                            std::to_string(raw.cols()) + "D, checkpoint expects " +
                            std::to_string(model.spec.d) + "D");
        const Cloud real = model.norm.apply(raw);
        const Matrix psi = model.q.encode(real);

        Rng rng(mix_seed(opt.seed, m));
        const Cloud gen = model.gx.generate(psi, gen_n, rng);
        const Cloud gen_raw = model.norm.invert(gen);

        EvalRow row;
        row.label = entry.label.empty() ? std::to_string(m) : entry.label;

        // Reconstruction transport cost on same-size batches, normalized units.
        const Cloud gen_match = model.gx.generate(psi, real.rows(), rng);
        row.w_upper = ot::w_upper(real, gen_match, ot::auction_config_rel(real, gen_match, opt.eps_rel));
        wus.push_back(row.w_upper);

        if (model.spec.d == 2) {
            try {
                const auto fit = metrics::fit_circle(gen_raw);
                row.center_x = fit.center[0];
                row.center_y = fit.center[1];
                row.radius = fit.radius;
                row.residual_rms = fit.residual_rms;
                radii.push_back(fit.radius);
                const int q = (fit.center[0] < 0.0 ? 1 : 0) + (fit.center[1] < 0.0 ? 2 : 0);
                ++quadrant_counts[static_cast<std::size_t>(q)];
                ++fitted;
            } catch (const NumericError&) {
                row.radius = std::numeric_limits<double>::quiet_NaN();
                row.residual_rms = std::numeric_limits<double>::quiet_NaN();
            }
        } else {
            if (entry.mesh.empty())
                throw DataError("eval_reconstruction: 3D evaluation needs a mesh per manifest entry");
            const metrics::Mesh mesh = data::load_mesh(entry.mesh);
            row.d2f = metrics::d2f(gen_raw, mesh);
            row.coverage = metrics::coverage(gen_raw, mesh, opt.coverage_threshold);
        }
        report.rows.push_back(std::move(row));
    }

    if (report.dim == 2 && !radii.empty()) {
        report.ks_radius =
            metrics::ks_statistic(radii, metrics::uniform_cdf(opt.radius_lo, opt.radius_hi));
        for (int q = 0; q < 4; ++q)
            report.quadrant_share[static_cast<std::size_t>(q)] =
                fitted > 0 ? static_cast<double>(quadrant_counts[static_cast<std::size_t>(q)]) / fitted
                           : 0.0;
    }
    if (!wus.empty()) {
        report.mean_w_upper = exact_mean(wus);
        std::vector<double> sorted = wus;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        report.median_w_upper =
            n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    return report;
}

}  // namespace pcgen::trainer
