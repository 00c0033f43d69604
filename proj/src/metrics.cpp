#include "pcgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace pcgen::metrics {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 axpy(const Vec3& a, const Vec3& d, double t) {
    return {a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]};
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(sub(b, a), sub(c, a)));
}

Vec3 row3(const diff::Matrix& m, int r) { return {m(r, 0), m(r, 1), m(r, 2)}; }

/// Deterministic chunked parallel fill of out[i] = fn(i).
void parallel_fill(std::vector<double>& out, const std::function<double(int)>& fn) {
    const int n = static_cast<int>(out.size());
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk, hi = std::min(n, lo + chunk);
        pool.emplace_back([&, lo, hi] {
            for (int i = lo; i < hi; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

void Mesh::compute_areas() {
    if (vertices.cols() != 3) throw std::invalid_argument("Mesh: vertices must be 3D");
    face_areas.clear();
    face_areas.reserve(faces.size());
    std::vector<std::array<int, 3>> kept;
    kept.reserve(faces.size());
    dropped_degenerate = 0;
    for (const auto& f : faces) {
        for (int idx : f)
            if (idx < 0 || idx >= vertices.rows())
                throw DataError("Mesh: face index " + std::to_string(idx) + " out of range");
        const double area = triangle_area(row3(vertices, f[0]), row3(vertices, f[1]), row3(vertices, f[2]));
        if (area > 0.0) {
            kept.push_back(f);
            face_areas.push_back(area);
        } else {
            ++dropped_degenerate;
        }
    }
    faces = std::move(kept);
    total_area = exact_sum(face_areas);
}

double point_to_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    if (!(triangle_area(a, b, c) > 0.0))
        throw std::invalid_argument("point_to_triangle: degenerate triangle");

    // Closest-point region test (Voronoi regions of the triangle).
    const Vec3 ab = sub(b, a), ac = sub(c, a), ap = sub(p, a);
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return norm(sub(p, a));

    const Vec3 bp = sub(p, b);
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return norm(sub(p, b));

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return norm(sub(p, axpy(a, ab, v)));
    }

    const Vec3 cp = sub(p, c);
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return norm(sub(p, c));

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return norm(sub(p, axpy(a, ac, w)));
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return norm(sub(p, axpy(b, sub(c, b), w)));
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    Vec3 q = axpy(a, ab, v);
    q = axpy(q, ac, w);
    return norm(sub(p, q));
}

FaceLocator::FaceLocator(const Mesh& mesh, int brute_limit) : mesh_(mesh) {
    if (mesh.face_count() < 1) throw std::invalid_argument("FaceLocator: empty mesh");
    if (static_cast<int>(mesh.face_areas.size()) != mesh.face_count())
        throw std::invalid_argument("FaceLocator: mesh areas not computed");
    brute_ = mesh.face_count() <= brute_limit;
    if (brute_) return;

    order_.resize(mesh.faces.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    std::vector<Vec3> centroids(mesh.faces.size());
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        for (int k = 0; k < 3; ++k)
            centroids[i][static_cast<std::size_t>(k)] =
                (mesh.vertices(f[0], k) + mesh.vertices(f[1], k) + mesh.vertices(f[2], k)) / 3.0;
    }
    nodes_.reserve(2 * mesh.faces.size());
    build(0, static_cast<int>(order_.size()), centroids);
}

double FaceLocator::face_distance(int f, const Vec3& p) const {
    const auto& face = mesh_.faces[static_cast<std::size_t>(f)];
    return point_to_triangle(p, row3(mesh_.vertices, face[0]), row3(mesh_.vertices, face[1]),
                             row3(mesh_.vertices, face[2]));
}

int FaceLocator::build(int begin, int end, std::vector<Vec3>& centroids) {
    BvhNode node;
    for (int k = 0; k < 3; ++k) {
        node.lo[k] = std::numeric_limits<double>::infinity();
        node.hi[k] = -std::numeric_limits<double>::infinity();
    }
    for (int i = begin; i < end; ++i) {
        const auto& f = mesh_.faces[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
        for (int v = 0; v < 3; ++v)
            for (int k = 0; k < 3; ++k) {
                node.lo[k] = std::min(node.lo[k], mesh_.vertices(f[v], k));
                node.hi[k] = std::max(node.hi[k], mesh_.vertices(f[v], k));
            }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= 8) {
        nodes_[static_cast<std::size_t>(id)].begin = begin;
        nodes_[static_cast<std::size_t>(id)].end = end;
        return id;
    }
    int axis = 0;
    double extent = node.hi[0] - node.lo[0];
    for (int k = 1; k < 3; ++k)
        if (node.hi[k] - node.lo[k] > extent) {
            extent = node.hi[k] - node.lo[k];
            axis = k;
        }
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int fa, int fb) {
                         const double ca = centroids[static_cast<std::size_t>(fa)][static_cast<std::size_t>(axis)];
                         const double cb = centroids[static_cast<std::size_t>(fb)][static_cast<std::size_t>(axis)];
                         if (ca != cb) return ca < cb;
                         return fa < fb;  // index tiebreak keeps the build deterministic
                     });
    const int left = build(begin, mid, centroids);
    const int right = build(mid, end, centroids);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

double FaceLocator::box_distance(const BvhNode& n, const Vec3& p) const {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double v = p[static_cast<std::size_t>(k)];
        const double d = v < n.lo[k] ? n.lo[k] - v : (v > n.hi[k] ? v - n.hi[k] : 0.0);
        acc += d * d;
    }
    return std::sqrt(acc);
}

void FaceLocator::search(int id, const Vec3& p, Hit& best) const {
    const BvhNode& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            const int f = order_[static_cast<std::size_t>(i)];
            const double d = face_distance(f, p);
            if (d < best.dist || (d == best.dist && f < best.face)) {
                best.dist = d;
                best.face = f;
            }
        }
        return;
    }
    const double dl = box_distance(nodes_[static_cast<std::size_t>(node.left)], p);
    const double dr = box_distance(nodes_[static_cast<std::size_t>(node.right)], p);
    const int first = dl <= dr ? node.left : node.right;
    const int second = dl <= dr ? node.right : node.left;
    if ((dl <= dr ? dl : dr) <= best.dist) search(first, p, best);
    if ((dl <= dr ? dr : dl) <= best.dist) search(second, p, best);
}

FaceLocator::Hit FaceLocator::nearest(const Vec3& p) const {
    Hit best;
    if (brute_) {
        for (int f = 0; f < mesh_.face_count(); ++f) {
            const double d = face_distance(f, p);
            if (d < best.dist) {
                best.dist = d;
                best.face = f;
            }
        }
        return best;
    }
    search(0, p, best);
    return best;
}

double d2f(const Cloud& cloud, const Mesh& mesh) {
    if (cloud.rows() < 1) throw std::invalid_argument("d2f: empty cloud");
    if (cloud.cols() != 3) throw std::invalid_argument("d2f: cloud must be 3D");
    if (mesh.face_count() < 1) throw std::invalid_argument("d2f: empty mesh");
    const FaceLocator locator(mesh);
    std::vector<double> dists(static_cast<std::size_t>(cloud.rows()));
    parallel_fill(dists, [&](int i) {
        return locator.nearest({cloud(i, 0), cloud(i, 1), cloud(i, 2)}).dist;
    });
    return exact_sum(dists) / static_cast<double>(dists.size());
}

double coverage(const Cloud& cloud, const Mesh& mesh, double threshold) {
    if (cloud.rows() < 1) throw std::invalid_argument("coverage: empty cloud");
    if (cloud.cols() != 3) throw std::invalid_argument("coverage: cloud must be 3D");
    if (mesh.face_count() < 1) throw std::invalid_argument("coverage: empty mesh");
    if (!(threshold > 0.0)) throw std::invalid_argument("coverage: threshold must be > 0");
    const FaceLocator locator(mesh);
    std::vector<double> hits(static_cast<std::size_t>(cloud.rows()));
    parallel_fill(hits, [&](int i) {
        const auto h = locator.nearest({cloud(i, 0), cloud(i, 1), cloud(i, 2)});
        return h.dist <= threshold ? static_cast<double>(h.face) : -1.0;
    });
    std::vector<char> covered(static_cast<std::size_t>(mesh.face_count()), 0);
    for (double h : hits)
        if (h >= 0.0) covered[static_cast<std::size_t>(h)] = 1;
    int count = 0;
    for (char c : covered) count += c;
    return static_cast<double>(count) / mesh.face_count();
}

CircleFit fit_circle(const Cloud& points) {
    if (points.cols() != 2) throw std::invalid_argument("fit_circle: points must be 2D");
    const int n = points.rows();
    if (n < 3) throw std::invalid_argument("fit_circle: needs at least 3 points");

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += points(i, 0);
        my += points(i, 1);
    }
    mx /= n;
    my /= n;

    // Kasa fit in centered coordinates: solve for the center offset (u, v)
    //   [Suu Suv] [u]   1 [Suuu + Suvv]
    //   [Suv Svv] [v] = - [Svvv + Svuu]
    //                   2
    double suu = 0, svv = 0, suv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
    for (int i = 0; i < n; ++i) {
        const double u = points(i, 0) - mx;
        const double v = points(i, 1) - my;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    const double det = suu * svv - suv * suv;
    const double scale = suu + svv;
    if (!(det > 1e-12 * scale * scale))
        throw NumericError("fit_circle: collinear or degenerate points");
    const double rhs_u = 0.5 * (suuu + suvv);
    const double rhs_v = 0.5 * (svvv + svuu);
    const double uc = (svv * rhs_u - suv * rhs_v) / det;
    const double vc = (suu * rhs_v - suv * rhs_u) / det;

    CircleFit fit;
    fit.center = {mx + uc, my + vc};
    fit.radius = std::sqrt(uc * uc + vc * vc + (suu + svv) / n);

    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dx = points(i, 0) - fit.center[0];
        const double dy = points(i, 1) - fit.center[1];
        const double r = std::sqrt(dx * dx + dy * dy);
        ss += (r - fit.radius) * (r - fit.radius);
    }
    fit.residual_rms = std::sqrt(ss / n);
    return fit;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_statistic: empty samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double sup = 0.0;
    double prev_f = -1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        if (f < prev_f - 1e-12)
            throw std::invalid_argument("ks_statistic: reference CDF is not monotone");
        prev_f = f;
        sup = std::max(sup, std::abs(f - static_cast<double>(i) / n));
        sup = std::max(sup, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return std::min(sup, 1.0);
}

std::function<double(double)> uniform_cdf(double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("uniform_cdf: needs hi > lo");
    return [lo, hi](double x) {
        if (x <= lo) return 0.0;
        if (x >= hi) return 1.0;
        return (x - lo) / (hi - lo);
    };
}

}  // namespace pcgen::metrics
