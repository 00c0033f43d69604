#pragma once

#include <string>
#include <vector>

#include "pcgen/diffcore.hpp"

namespace pcgen::nets {

using diff::Matrix;
using diff::ParamTensor;
using diff::Tape;
using NodeId = diff::Tape::NodeId;

enum class Activation { Softplus, LeakyRelu, Identity };
enum class Pool { Max, Mean };

std::string to_string(Activation a);
std::string to_string(Pool p);
Activation activation_from_string(const std::string& s);
Pool pool_from_string(const std::string& s);

/// Uniform init in [-s, s] with s = sqrt(6 / (fan_in + fan_out)).
Matrix symmetric_uniform_init(int fan_in, int fan_out, Rng& rng);

/// Plain fully connected stack. `widths` runs input..output; hidden layers
/// use `hidden_act`, the last layer `out_act`.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::string name, std::vector<int> widths, Activation hidden_act, Activation out_act,
        Rng& rng);

    NodeId forward(Tape& t, NodeId x, bool train);
    Matrix apply(const Matrix& x);

    std::vector<ParamTensor*> params();
    std::vector<const ParamTensor*> params() const;
    const std::vector<int>& widths() const { return widths_; }
    bool initialized() const { return !weights_.empty(); }
    int in_dim() const;
    int out_dim() const;
    double max_abs_weight() const;
    void clamp_weights(double c);

private:
    std::string name_;
    std::vector<int> widths_;
    Activation hidden_act_ = Activation::Softplus;
    Activation out_act_ = Activation::Identity;
    std::vector<ParamTensor> weights_, biases_;
};

/// Set encoder: a stack of permutation-equivariant layers
///   h_i = act( (x_i + gamma * pool(X)) W + b )
/// followed by a final pool over the set axis and an optional MLP head.
class Encoder {
public:
    Encoder() = default;
    Encoder(std::string name, int in_dim, std::vector<int> pel_widths, Pool pool, Activation act,
            std::vector<int> head_hidden, int out_dim, Rng& rng);

    NodeId forward(Tape& t, NodeId cloud, bool train);

    /// Descriptor for one cloud (1 x out_dim). Deterministic and invariant
    /// to the order of the rows.
    Matrix encode(const Cloud& cloud);

    std::vector<ParamTensor*> params();
    std::vector<const ParamTensor*> params() const;
    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    Pool pool() const { return pool_; }
    const std::vector<int>& pel_widths() const { return pel_widths_; }
    const std::vector<int>& head_hidden() const { return head_hidden_; }
    Activation activation() const { return act_; }
    bool initialized() const { return !layers_.empty(); }

private:
    struct PelLayer {
        ParamTensor W, b, gamma;
    };
    std::string name_;
    int in_dim_ = 0, out_dim_ = 0;
    std::vector<int> pel_widths_, head_hidden_;
    Pool pool_ = Pool::Mean;
    Activation act_ = Activation::Softplus;
    std::vector<PelLayer> layers_;
    Mlp head_;
    bool has_head_ = false;
};

/// Conditional point generator: a point is net([z ; psi]) with fresh noise z
/// per point, so any number of points can be drawn for one descriptor.
class PointGenerator {
public:
    PointGenerator() = default;
    PointGenerator(std::string name, int noise_dim, int code_dim, std::vector<int> hidden,
                   int point_dim, Activation act, Rng& rng);

    /// n i.i.d. points conditioned on psi (1 x code_dim).
    Cloud generate(const Matrix& psi, int n, Rng& rng);

    /// Training path: psi enters as a tape node so gradients reach the
    /// encoder; the noise batch is fixed input.
    NodeId forward(Tape& t, NodeId psi_node, const Matrix& z, bool train);

    Matrix sample_noise(int n, Rng& rng) const;

    std::vector<ParamTensor*> params() { return net_.params(); }
    std::vector<const ParamTensor*> params() const { return net_.params(); }
    int noise_dim() const { return noise_dim_; }
    int code_dim() const { return code_dim_; }
    int point_dim() const { return point_dim_; }
    const std::vector<int>& hidden() const { return hidden_; }
    bool initialized() const { return net_.initialized(); }
    Mlp& net() { return net_; }

private:
    std::string name_;
    int noise_dim_ = 0, code_dim_ = 0, point_dim_ = 0;
    std::vector<int> hidden_;
    Mlp net_;
};

/// Scalar-valued constrained critic. After clip() every weight lies in
/// [-c, c] and lipschitz_bound() returns k = prod over layers of c * fan_in,
/// valid for |f(x) - f(y)| <= k * |x - y|_1.
class Critic {
public:
    Critic() = default;
    Critic(std::string name, int in_dim, std::vector<int> hidden, Activation act, double clip_c,
           Rng& rng);

    /// Per-point scores (n x 1).
    Matrix score(const Cloud& points);
    NodeId forward(Tape& t, NodeId points, bool train);

    void clip(double c);
    void clip() { clip(clip_c_); }
    double clip_range() const { return clip_c_; }
    double lipschitz_bound() const { return lip_k_; }
    double max_abs_weight() const { return net_.max_abs_weight(); }

    std::vector<ParamTensor*> params() { return net_.params(); }
    std::vector<const ParamTensor*> params() const { return net_.params(); }
    int in_dim() const;
    const std::vector<int>& hidden() const { return hidden_; }
    bool initialized() const { return net_.initialized(); }

private:
    void recompute_bound();

    std::string name_;
    std::vector<int> hidden_;
    Mlp net_;
    double clip_c_ = 0.5;
    double lip_k_ = 0.0;
};

/// Draw one object code u -> G_theta(u), then n conditional points.
Cloud hierarchical_sample(Mlp& g_theta, PointGenerator& g_x, int n, Rng& rng);

/// The object-noise draw and code used by hierarchical sampling, exposed so
/// callers can reuse one code for several point batches.
Matrix sample_object_code(Mlp& g_theta, int noise_dim, Rng& rng);

}  // namespace pcgen::nets
