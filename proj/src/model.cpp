#include "pcgen/model.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace pcgen::nets {

namespace fs = std::filesystem;
using nlohmann::json;

void ModelSpec::validate() const {
    if (d < 1 || d1 < 1 || d2 < 1 || d3 < 1)
        throw std::invalid_argument("ModelSpec: dimensions must be >= 1");
    if (q_pel.empty()) throw std::invalid_argument("ModelSpec: encoder needs layers");
    if (!(clip_c > 0.0)) throw std::invalid_argument("ModelSpec: clip_c must be > 0");
}

Cloud Normalization::apply(const Cloud& c) const {
    if (identity()) return c;
    if (static_cast<int>(offset.size()) != c.cols())
        throw std::invalid_argument("Normalization: dimension mismatch");
    Cloud out = c;
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j)
            out(i, j) = (out(i, j) - offset[static_cast<std::size_t>(j)]) / scale;
    return out;
}

Cloud Normalization::invert(const Cloud& c) const {
    if (identity()) return c;
    if (static_cast<int>(offset.size()) != c.cols())
        throw std::invalid_argument("Normalization: dimension mismatch");
    Cloud out = c;
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j)
            out(i, j) = out(i, j) * scale + offset[static_cast<std::size_t>(j)];
    return out;
}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    Model m;
    m.spec = spec;
    m.q = Encoder("q", spec.d, spec.q_pel, spec.pool, spec.act, spec.q_head, spec.d2, rng);
    m.gx = PointGenerator("gx", spec.d1, spec.d2, spec.gx_hidden, spec.d, spec.act, rng);
    std::vector<int> gt_widths;
    gt_widths.push_back(spec.d3);
    for (int h : spec.gtheta_hidden) gt_widths.push_back(h);
    gt_widths.push_back(spec.d2);
    m.gtheta = Mlp("gtheta", gt_widths, spec.act, Activation::Identity, rng);
    m.critic = Critic("critic", spec.d, spec.critic_hidden, spec.act, spec.clip_c, rng);
    m.code_critic = Critic("code_critic", spec.d2, spec.code_critic_hidden, spec.act, spec.clip_c, rng);
    return m;
}

namespace {

void save_net(const fs::path& dir, const std::string& file,
              std::vector<const diff::ParamTensor*> params) {
    diff::save_params((dir / file).string(), params);
}

void load_net(const fs::path& dir, const std::string& file, std::vector<diff::ParamTensor*> params) {
    diff::load_params((dir / file).string(), params);
}

}  // namespace

void Model::save(const std::string& dir) const {
    fs::create_directories(dir);
    const fs::path root(dir);

    json manifest;
    manifest["version"] = 1;
    manifest["d"] = spec.d;
    manifest["d1"] = spec.d1;
    manifest["d2"] = spec.d2;
    manifest["d3"] = spec.d3;
    manifest["q_pel"] = spec.q_pel;
    manifest["q_head"] = spec.q_head;
    manifest["pool"] = to_string(spec.pool);
    manifest["activation"] = to_string(spec.act);
    manifest["gx_hidden"] = spec.gx_hidden;
    manifest["gtheta_hidden"] = spec.gtheta_hidden;
    manifest["critic_hidden"] = spec.critic_hidden;
    manifest["code_critic_hidden"] = spec.code_critic_hidden;
    manifest["clip_c"] = spec.clip_c;
    manifest["gtheta_trained"] = gtheta_trained;
    manifest["norm_offset"] = norm.offset;
    manifest["norm_scale"] = norm.scale;
    manifest["files"] = {{"q", "q.params"},
                         {"gx", "gx.params"},
                         {"gtheta", "gtheta.params"},
                         {"critic", "critic.params"},
                         {"code_critic", "code_critic.params"}};

    std::ofstream mf(root / "manifest.json");
    if (!mf) throw DataError("Model::save: cannot write manifest in '" + dir + "'");
    mf << manifest.dump(2) << "\n";

    save_net(root, "q.params", q.params());
    save_net(root, "gx.params", gx.params());
    save_net(root, "gtheta.params", gtheta.params());
    save_net(root, "critic.params", critic.params());
    save_net(root, "code_critic.params", code_critic.params());
}

Model Model::load(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream mf(root / "manifest.json");
    if (!mf) throw DataError("Model::load: no manifest.json in '" + dir + "'");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw DataError("Model::load: bad manifest: " + std::string(e.what()));
    }

    ModelSpec spec;
    try {
        spec.d = manifest.at("d").get<int>();
        spec.d1 = manifest.at("d1").get<int>();
        spec.d2 = manifest.at("d2").get<int>();
        spec.d3 = manifest.at("d3").get<int>();
        spec.q_pel = manifest.at("q_pel").get<std::vector<int>>();
        spec.q_head = manifest.at("q_head").get<std::vector<int>>();
        spec.pool = pool_from_string(manifest.at("pool").get<std::string>());
        spec.act = activation_from_string(manifest.at("activation").get<std::string>());
        spec.gx_hidden = manifest.at("gx_hidden").get<std::vector<int>>();
        spec.gtheta_hidden = manifest.at("gtheta_hidden").get<std::vector<int>>();
        spec.critic_hidden = manifest.at("critic_hidden").get<std::vector<int>>();
        spec.code_critic_hidden = manifest.at("code_critic_hidden").get<std::vector<int>>();
        spec.clip_c = manifest.at("clip_c").get<double>();
    } catch (const json::exception& e) {
        throw DataError("Model::load: manifest missing fields: " + std::string(e.what()));
    }

    Model m = build(spec, 0);
    m.gtheta_trained = manifest.value("gtheta_trained", false);
    m.norm.offset = manifest.value("norm_offset", std::vector<double>{});
    m.norm.scale = manifest.value("norm_scale", 1.0);

    load_net(root, "q.params", m.q.params());
    load_net(root, "gx.params", m.gx.params());
    load_net(root, "gtheta.params", m.gtheta.params());
    load_net(root, "critic.params", m.critic.params());
    load_net(root, "code_critic.params", m.code_critic.params());
    return m;
}

}  // namespace pcgen::nets
