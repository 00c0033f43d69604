#pragma once

#include <array>
#include <string>
#include <vector>

#include "pcgen/data.hpp"
#include "pcgen/losses.hpp"
#include "pcgen/model.hpp"
#include "pcgen/ot.hpp"

namespace pcgen::trainer {

struct OptimizerConfig {
    double lr_gen = 1e-4;
    double lr_critic = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
};

struct TrainConfig {
    std::string stage = "conditional";  // conditional | hierarchical
    std::string manifest;
    int batch_size = 64;        // objects per step
    int points_per_object = 100;
    int steps = 2000;
    losses::SandwichConfig sandwich;
    losses::LowerBoundConfig lower;
    double auction_eps_factor = 0.05;  // training matchings: one phase at factor * mean cost
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    std::string checkpoint_dir = "checkpoint";
    std::string log_path = "train_log.csv";
    bool normalize_data = true;  // one global affine fit over the training points
    int checkpoint_every = 0;    // 0: final checkpoint only
    std::string init_checkpoint;  // stage-2 input (stage-1 checkpoint dir)
    nets::ModelSpec model;

    void validate() const;
};

/// Reads either JSON or `key = value` lines; every TrainConfig field is
/// addressable in both (lists as comma-separated values).
TrainConfig load_train_config(const std::string& path);
void apply_config_field(TrainConfig& cfg, const std::string& key, const std::string& value);

struct TrainReport {
    std::vector<double> w_upper;
    std::vector<double> w_lower;
    std::vector<double> sandwich;
    double wall_seconds = 0.0;
    std::string checkpoint_path;
};

/// Stage 1: jointly trains the encoder, the point generator, and the point
/// critic under the sandwiched objective.
TrainReport train_conditional(const TrainConfig& cfg);

/// Stage 2: collects descriptors with the frozen encoder from
/// `init_checkpoint` and fits the object generator to them on code space.
TrainReport train_hierarchical(const TrainConfig& cfg);

struct EvalOptions {
    int gen_points = 0;  // 0: 500 for 2D, 2048 for 3D
    std::uint64_t seed = 0;
    double eps_rel = 0.01;  // evaluation-grade transport accuracy
    double radius_lo = 1.6;
    double radius_hi = 6.4;
    double coverage_threshold = std::numeric_limits<double>::infinity();
};

struct EvalRow {
    std::string label;
    // 2D
    double center_x = 0.0, center_y = 0.0, radius = 0.0, residual_rms = 0.0;
    // 3D
    double d2f = 0.0, coverage = 0.0;
    // both
    double w_upper = 0.0;
};

struct EvalReport {
    int dim = 0;
    std::vector<EvalRow> rows;
    double ks_radius = 0.0;                        // 2D: fitted radii vs Unif(lo, hi)
    std::array<double, 4> quadrant_share{};        // 2D: fitted-center quadrant mass
    double median_w_upper = 0.0;                   // normalized units
    double mean_w_upper = 0.0;

    void write_csv(const std::string& path) const;
};

/// Encode each test cloud, regenerate points, and score the reconstruction.
EvalReport eval_reconstruction(const std::string& checkpoint_dir, const std::string& manifest_path,
                               const EvalOptions& opt);

}  // namespace pcgen::trainer
