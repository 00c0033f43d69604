#include "pcgen/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pcgen {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pcgen

namespace pcgen::data {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

void CircleDatasetConfig::validate() const {
    if (num_clouds < 1) throw std::invalid_argument("gen_circles: num_clouds must be >= 1");
    if (points_per_cloud < 3)
        throw std::invalid_argument("gen_circles: points_per_cloud must be >= 3");
    if (!(radius_min > 0.0) || !(radius_max > radius_min))
        throw std::invalid_argument("gen_circles: radius range must satisfy 0 < min < max");
    if (!(center_variance >= 0.0))
        throw std::invalid_argument("gen_circles: center_variance must be >= 0");
}

CircleDataset gen_circles(const CircleDatasetConfig& cfg) {
    cfg.validate();
    CircleDataset out;
    out.clouds.reserve(static_cast<std::size_t>(cfg.num_clouds));
    out.truths.reserve(static_cast<std::size_t>(cfg.num_clouds));
    const double center_std = std::sqrt(cfg.center_variance);
    for (int m = 0; m < cfg.num_clouds; ++m) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(m)));
        const int quadrant = rng.uniform_int(0, 3);
        const double sx = (quadrant & 1) ? -1.0 : 1.0;
        const double sy = (quadrant & 2) ? -1.0 : 1.0;
        CircleTruth truth;
        truth.cx = sx * cfg.center_offset + center_std * rng.normal();
        truth.cy = sy * cfg.center_offset + center_std * rng.normal();
        truth.radius = rng.uniform(cfg.radius_min, cfg.radius_max);
        Cloud cloud(cfg.points_per_cloud, 2);
        for (int i = 0; i < cfg.points_per_cloud; ++i) {
            const double a = rng.uniform(0.0, 2.0 * kPi);
            cloud(i, 0) = truth.cx + truth.radius * std::cos(a);
            cloud(i, 1) = truth.cy + truth.radius * std::sin(a);
        }
        out.clouds.push_back(std::move(cloud));
        out.truths.push_back(truth);
    }
    return out;
}

PreprocessConfig PreprocessConfig::defaults() {
    PreprocessConfig cfg;
    for (int k = 0; k < 8; ++k) cfg.augmentation_angles.push_back(k * kPi / 8.0);
    return cfg;
}

void PreprocessConfig::validate() const {
    if (samples_per_mesh < 1)
        throw std::invalid_argument("PreprocessConfig: samples_per_mesh must be >= 1");
    for (double a : augmentation_angles)
        if (!(a >= 0.0 && a < kPi))
            throw std::invalid_argument("PreprocessConfig: angles must lie in [0, pi)");
}

namespace {

/// Next content line: strips comments and blanks, tracks the line number.
bool next_line(std::istream& in, std::string& line, int& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) {
                blank = false;
                break;
            }
        if (!blank) return true;
    }
    return false;
}

[[noreturn]] void off_error(const std::string& path, int lineno, const std::string& msg) {
    throw DataError("load_mesh: " + path + ":" + std::to_string(lineno) + ": " + msg);
}

}  // namespace

metrics::Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_mesh: cannot open '" + path + "'");

    int lineno = 0;
    std::string line;
    if (!next_line(in, line, lineno)) off_error(path, lineno, "empty file");

    std::string counts_part;
    {
        std::istringstream ls(line);
        std::string header;
        ls >> header;
        if (header.rfind("OFF", 0) != 0) off_error(path, lineno, "missing OFF header");
        if (header.size() > 3) {
            // Glued header ("OFF8 6 12"): counts start right after the tag.
            counts_part = header.substr(3);
            std::string rest;
            std::getline(ls, rest);
            counts_part += rest;
        } else {
            std::string rest;
            std::getline(ls, rest);
            for (char ch : rest)
                if (!std::isspace(static_cast<unsigned char>(ch))) {
                    counts_part = rest;
                    break;
                }
        }
    }
    if (counts_part.empty()) {
        if (!next_line(in, line, lineno)) off_error(path, lineno, "missing counts line");
        counts_part = line;
    }

    long nv = 0, nf = 0, ne = 0;
    {
        std::istringstream ls(counts_part);
        if (!(ls >> nv >> nf)) off_error(path, lineno, "malformed counts line");
        ls >> ne;  // edge count, ignored
        if (nv < 0 || nf < 0) off_error(path, lineno, "negative counts");
    }

    metrics::Mesh mesh;
    mesh.vertices = diff::Matrix(static_cast<int>(nv), 3);
    for (long v = 0; v < nv; ++v) {
        if (!next_line(in, line, lineno)) off_error(path, lineno, "unexpected end of vertices");
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) off_error(path, lineno, "malformed vertex");
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            off_error(path, lineno, "non-finite vertex");
        mesh.vertices(static_cast<int>(v), 0) = x;
        mesh.vertices(static_cast<int>(v), 1) = y;
        mesh.vertices(static_cast<int>(v), 2) = z;
    }

    for (long f = 0; f < nf; ++f) {
        if (!next_line(in, line, lineno)) off_error(path, lineno, "unexpected end of faces");
        std::istringstream ls(line);
        long k = 0;
        if (!(ls >> k) || k < 3) off_error(path, lineno, "face must list >= 3 vertices");
        std::vector<int> idx(static_cast<std::size_t>(k));
        for (long i = 0; i < k; ++i) {
            long v = 0;
            if (!(ls >> v)) off_error(path, lineno, "malformed face");
            if (v < 0 || v >= nv)
                off_error(path, lineno, "vertex index " + std::to_string(v) + " out of range");
            idx[static_cast<std::size_t>(i)] = static_cast<int>(v);
        }
        for (long i = 1; i + 1 < k; ++i)  // fan triangulation
            mesh.faces.push_back({idx[0], idx[static_cast<std::size_t>(i)],
                                  idx[static_cast<std::size_t>(i + 1)]});
    }

    mesh.compute_areas();
    return mesh;
}

Cloud sample_surface(const metrics::Mesh& mesh, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_surface: n must be >= 1");
    if (mesh.face_count() < 1 || !(mesh.total_area > 0.0))
        throw std::invalid_argument("sample_surface: mesh has no positive-area faces");

    std::vector<double> cumulative(mesh.face_areas.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < mesh.face_areas.size(); ++i) {
        acc += mesh.face_areas[i];
        cumulative[i] = acc;
    }

    Cloud out(n, 3);
    for (int i = 0; i < n; ++i) {
        const double pick = rng.uniform() * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t f = std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
        const auto& face = mesh.faces[f];
        double u = rng.uniform();
        double v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        for (int k = 0; k < 3; ++k) {
            const double a = mesh.vertices(face[0], k);
            const double b = mesh.vertices(face[1], k);
            const double c = mesh.vertices(face[2], k);
            out(i, k) = a + u * (b - a) + v * (c - a);
        }
    }
    return out;
}

NormalizeResult normalize(const Cloud& cloud) {
    const int n = cloud.rows(), d = cloud.cols();
    if (n < 2) throw std::invalid_argument("normalize: needs at least 2 points");

    NormalizeResult res;
    res.offset.assign(static_cast<std::size_t>(d), 0.0);
    std::vector<double> col(static_cast<std::size_t>(n));
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = cloud(i, j);
        res.offset[static_cast<std::size_t>(j)] = exact_sum(col) / n;
    }

    double ss = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            const double c = cloud(i, j) - res.offset[static_cast<std::size_t>(j)];
            ss += c * c;
        }
    const double variance = ss / (static_cast<double>(n) * d);
    if (!(variance > 0.0))
        throw std::invalid_argument("normalize: zero variance (all points identical)");
    res.scale = std::sqrt(variance);

    res.cloud = Cloud(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            res.cloud(i, j) = (cloud(i, j) - res.offset[static_cast<std::size_t>(j)]) / res.scale;
    return res;
}

Cloud rotate_xy(const Cloud& cloud, double angle) {
    if (cloud.cols() != 3)
        throw std::invalid_argument("rotate_xy: augmentation rotations expect 3D clouds");
    const double c = std::cos(angle), s = std::sin(angle);
    Cloud out = cloud;
    for (int i = 0; i < out.rows(); ++i) {
        const double x = cloud(i, 0), y = cloud(i, 1);
        out(i, 0) = c * x - s * y;
        out(i, 1) = s * x + c * y;
    }
    return out;
}

void save_cloud_text(const std::string& path, const Cloud& cloud) {
    std::ofstream out(path);
    if (!out) throw DataError("save_cloud_text: cannot open '" + path + "'");
    char buf[32];
    for (int i = 0; i < cloud.rows(); ++i) {
        for (int j = 0; j < cloud.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", cloud(i, j));
            if (j) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("save_cloud_text: write failed for '" + path + "'");
}

Cloud load_cloud_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_cloud_text: cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError("load_cloud_text: " + path + ":" + std::to_string(lineno) +
                            ": inconsistent dimension");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("load_cloud_text: '" + path + "' holds no points");
    return diff::Matrix::from_rows(rows);
}

namespace {
constexpr char kCloudMagic[8] = {'P', 'C', 'G', 'E', 'N', 'P', 'C', '1'};
}

void save_cloud_binary(const std::string& path, const Cloud& cloud) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_cloud_binary: cannot open '" + path + "'");
    out.write(kCloudMagic, sizeof(kCloudMagic));
    const std::uint32_t n = static_cast<std::uint32_t>(cloud.rows());
    const std::uint32_t d = static_cast<std::uint32_t>(cloud.cols());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(cloud.data()),
              static_cast<std::streamsize>(cloud.size() * sizeof(double)));
    if (!out) throw DataError("save_cloud_binary: write failed for '" + path + "'");
}

Cloud load_cloud_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_cloud_binary: cannot open '" + path + "'");
    char magic[sizeof(kCloudMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCloudMagic, sizeof(magic)) != 0)
        throw DataError("load_cloud_binary: '" + path + "' lacks the cloud magic header");
    std::uint32_t n = 0, d = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (!in || n == 0 || d == 0) throw DataError("load_cloud_binary: bad header in '" + path + "'");
    Cloud cloud(static_cast<int>(n), static_cast<int>(d));
    in.read(reinterpret_cast<char*>(cloud.data()),
            static_cast<std::streamsize>(cloud.size() * sizeof(double)));
    if (!in) throw DataError("load_cloud_binary: truncated data in '" + path + "'");
    return cloud;
}

Cloud load_cloud(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_cloud: cannot open '" + path + "'");
    char magic[sizeof(kCloudMagic)];
    in.read(magic, sizeof(magic));
    if (in && std::memcmp(magic, kCloudMagic, sizeof(magic)) == 0) {
        in.close();
        return load_cloud_binary(path);
    }
    return load_cloud_text(path);
}

void save_manifest(const std::string& path, const Manifest& manifest) {
    json entries = json::array();
    for (const ManifestEntry& e : manifest.entries) {
        json j;
        j["path"] = e.path;
        j["label"] = e.label;
        if (!e.mesh.empty()) j["mesh"] = e.mesh;
        if (e.has_truth) {
            j["center"] = {e.truth.cx, e.truth.cy};
            j["radius"] = e.truth.radius;
        }
        entries.push_back(std::move(j));
    }
    json root;
    root["clouds"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw DataError("save_manifest: cannot open '" + path + "'");
    out << root.dump(2) << "\n";
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_manifest: cannot open '" + path + "'");
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw DataError("load_manifest: '" + path + "': " + e.what());
    }
    if (!root.contains("clouds") || !root["clouds"].is_array())
        throw DataError("load_manifest: '" + path + "' lacks a clouds array");

    const fs::path base = fs::path(path).parent_path();
    Manifest manifest;
    for (const auto& j : root["clouds"]) {
        ManifestEntry e;
        if (!j.contains("path")) throw DataError("load_manifest: entry without path");
        fs::path p = j["path"].get<std::string>();
        if (p.is_relative()) p = base / p;
        e.path = p.string();
        e.label = j.value("label", std::string{});
        if (j.contains("mesh")) {
            fs::path mp = j["mesh"].get<std::string>();
            if (mp.is_relative()) mp = base / mp;
            e.mesh = mp.string();
        }
        if (j.contains("center") && j.contains("radius")) {
            const auto c = j["center"].get<std::vector<double>>();
            if (c.size() == 2) {
                e.has_truth = true;
                e.truth.cx = c[0];
                e.truth.cy = c[1];
                e.truth.radius = j["radius"].get<double>();
            }
        }
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

}  // namespace pcgen::data
