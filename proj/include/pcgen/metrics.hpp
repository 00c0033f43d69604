#pragma once

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "pcgen/diffcore.hpp"

namespace pcgen::metrics {

/// Triangle mesh; faces are vertex-index triples. Zero-area faces are
/// removed at load time, so every stored face has positive area.
struct Mesh {
    diff::Matrix vertices;                  // nv x 3
    std::vector<std::array<int, 3>> faces;  // indices into vertices
    std::vector<double> face_areas;
    double total_area = 0.0;
    int dropped_degenerate = 0;  // zero-area faces removed while cleaning

    int face_count() const { return static_cast<int>(faces.size()); }
    void compute_areas();  // fills face_areas/total_area; validates indices
};

/// Exact Euclidean distance from a point to a closed triangle
/// (interior, edge, or vertex region). Degenerate triangles are rejected.
double point_to_triangle(const std::array<double, 3>& p, const std::array<double, 3>& a,
                         const std::array<double, 3>& b, const std::array<double, 3>& c);

/// Nearest-face queries; brute force for small meshes, an AABB tree above
/// `brute_limit` faces.
class FaceLocator {
public:
    explicit FaceLocator(const Mesh& mesh, int brute_limit = 20000);

    struct Hit {
        int face = -1;
        double dist = std::numeric_limits<double>::infinity();
    };
    Hit nearest(const std::array<double, 3>& p) const;

private:
    struct BvhNode {
        double lo[3], hi[3];
        int left = -1, right = -1;  // children, or
        int begin = 0, end = 0;     // leaf face range into order_
    };
    double face_distance(int f, const std::array<double, 3>& p) const;
    int build(int begin, int end, std::vector<std::array<double, 3>>& centroids);
    double box_distance(const BvhNode& n, const std::array<double, 3>& p) const;
    void search(int node, const std::array<double, 3>& p, Hit& best) const;

    const Mesh& mesh_;
    bool brute_ = true;
    std::vector<int> order_;
    std::vector<BvhNode> nodes_;
};

/// Mean over points of the distance to the nearest face.
double d2f(const Cloud& cloud, const Mesh& mesh);

/// Fraction of faces that are the nearest face of at least one point within
/// `threshold` of them. Pass infinity (the default) to disable thresholding.
double coverage(const Cloud& cloud, const Mesh& mesh,
                double threshold = std::numeric_limits<double>::infinity());

struct CircleFit {
    std::array<double, 2> center{0.0, 0.0};
    double radius = 0.0;
    double residual_rms = 0.0;
};

/// Algebraic least-squares circle fit; exact on noiseless circles.
/// Requires n >= 3 non-collinear 2D points.
CircleFit fit_circle(const Cloud& points);

/// Kolmogorov-Smirnov sup-gap between the empirical distribution of
/// `samples` and a monotone reference CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// CDF of Unif(lo, hi), for radius-distribution checks.
std::function<double(double)> uniform_cdf(double lo, double hi);

}  // namespace pcgen::metrics
