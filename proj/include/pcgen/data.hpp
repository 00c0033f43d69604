#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcgen/metrics.hpp"

namespace pcgen {
/// Splitmix-style seed derivation; keeps per-item streams independent of
/// processing order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);
}  // namespace pcgen

namespace pcgen::data {

struct CircleDatasetConfig {
    int num_clouds = 1;
    int points_per_cloud = 100;
    double center_offset = 16.0;    // mixture means at {+-offset} x {+-offset}
    double center_variance = 16.0;  // isotropic, per axis
    double radius_min = 1.6;
    double radius_max = 6.4;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CircleTruth {
    double cx = 0.0, cy = 0.0, radius = 0.0;
};

struct CircleDataset {
    std::vector<Cloud> clouds;
    std::vector<CircleTruth> truths;
};

/// Noiseless circles: center from the four-Gaussian mixture, radius uniform,
/// points uniform in angle. Ground truth is retained per cloud.
CircleDataset gen_circles(const CircleDatasetConfig& cfg);

struct PreprocessConfig {
    int samples_per_mesh = 10000;
    bool normalize = true;
    std::vector<double> augmentation_angles;  // z-axis rotations, radians in [0, pi)

    static PreprocessConfig defaults();  // angles 0, pi/8, ..., 7pi/8
    void validate() const;
};

/// OFF mesh loader. Quads and larger polygons are fan-triangulated;
/// zero-area faces are dropped (counted in Mesh::dropped_degenerate).
metrics::Mesh load_mesh(const std::string& path);

/// Area-weighted face choice plus uniform barycentric placement.
Cloud sample_surface(const metrics::Mesh& mesh, int n, Rng& rng);

struct NormalizeResult {
    Cloud cloud;
    std::vector<double> offset;  // per-axis mean removed
    double scale = 1.0;          // sqrt of global variance across coordinates
};

/// Zero mean per axis, unit global variance across all coordinates.
/// The returned offset/scale invert the transform.
NormalizeResult normalize(const Cloud& cloud);

/// Rotation about the z axis; inputs must be 3D.
Cloud rotate_xy(const Cloud& cloud, double angle);

// --- point-cloud files -------------------------------------------------
// Text: one point per line, whitespace-separated coordinates.
// Binary: magic header, little-endian doubles.

void save_cloud_text(const std::string& path, const Cloud& cloud);
Cloud load_cloud_text(const std::string& path);
void save_cloud_binary(const std::string& path, const Cloud& cloud);
Cloud load_cloud_binary(const std::string& path);

/// Sniffs the binary magic and falls back to text.
Cloud load_cloud(const std::string& path);

// --- dataset manifest ---------------------------------------------------

struct ManifestEntry {
    std::string path;  // resolved to absolute on load
    std::string label;
    std::string mesh;  // optional source mesh, for mesh-based evaluation
    bool has_truth = false;
    CircleTruth truth;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

void save_manifest(const std::string& path, const Manifest& manifest);
Manifest load_manifest(const std::string& path);

}  // namespace pcgen::data
