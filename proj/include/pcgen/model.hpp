#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcgen/nets.hpp"

namespace pcgen::nets {

/// Architecture description; everything needed to rebuild the networks.
struct ModelSpec {
    int d = 2;    // point dimension
    int d1 = 10;  // per-point noise z
    int d2 = 15;  // descriptor psi
    int d3 = 10;  // object noise u
    std::vector<int> q_pel = {30, 30, 15};
    std::vector<int> q_head = {};
    Pool pool = Pool::Mean;
    Activation act = Activation::Softplus;
    std::vector<int> gx_hidden = {30, 30, 30, 30};
    std::vector<int> gtheta_hidden = {64, 64};
    std::vector<int> critic_hidden = {30, 30, 30};
    std::vector<int> code_critic_hidden = {64, 64};
    double clip_c = 0.5;

    void validate() const;
};

/// Affine map applied to point coordinates before training:
/// x_train = (x - offset) / scale. Identity until fitted.
struct Normalization {
    std::vector<double> offset;  // per-axis
    double scale = 1.0;

    bool identity() const { return offset.empty() && scale == 1.0; }
    Cloud apply(const Cloud& c) const;
    Cloud invert(const Cloud& c) const;
};

/// The trainable networks plus everything needed to persist them.
struct Model {
    ModelSpec spec;
    Encoder q;
    PointGenerator gx;
    Mlp gtheta;
    Critic critic;       // on points, R^d
    Critic code_critic;  // on descriptors, R^d2 (stage 2)
    Normalization norm;
    bool gtheta_trained = false;

    static Model build(const ModelSpec& spec, std::uint64_t seed);

    /// Writes one params file per network plus manifest.json into `dir`.
    void save(const std::string& dir) const;
    static Model load(const std::string& dir);
};

}  // namespace pcgen::nets
