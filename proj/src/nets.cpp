#include "pcgen/nets.hpp"

#include <cmath>

namespace pcgen::nets {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Softplus: return "softplus";
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Identity: return "identity";
    }
    return "softplus";
}

std::string to_string(Pool p) { return p == Pool::Max ? "max" : "mean"; }

Activation activation_from_string(const std::string& s) {
    if (s == "softplus") return Activation::Softplus;
    if (s == "leaky_relu") return Activation::LeakyRelu;
    if (s == "identity") return Activation::Identity;
    throw DataError("unknown activation '" + s + "'");
}

Pool pool_from_string(const std::string& s) {
    if (s == "max") return Pool::Max;
    if (s == "mean") return Pool::Mean;
    throw DataError("unknown pool '" + s + "'");
}

Matrix symmetric_uniform_init(int fan_in, int fan_out, Rng& rng) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& x : w.values()) x = rng.uniform(-s, s);
    return w;
}

namespace {
constexpr double kLeakySlope = 0.2;

NodeId activate(Tape& t, NodeId x, Activation act) {
    switch (act) {
        case Activation::Softplus: return t.softplus(x);
        case Activation::LeakyRelu: return t.leaky_relu(x, kLeakySlope);
        case Activation::Identity: return x;
    }
    return x;
}
}  // namespace

Mlp::Mlp(std::string name, std::vector<int> widths, Activation hidden_act, Activation out_act,
         Rng& rng)
    : name_(std::move(name)), widths_(std::move(widths)), hidden_act_(hidden_act), out_act_(out_act) {
    if (widths_.size() < 2) throw std::invalid_argument("Mlp '" + name_ + "': needs >= 2 widths");
    for (int w : widths_)
        if (w < 1) throw std::invalid_argument("Mlp '" + name_ + "': widths must be positive");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const int in = widths_[l], out = widths_[l + 1];
        weights_.emplace_back(name_ + ".l" + std::to_string(l) + ".W",
                              symmetric_uniform_init(in, out, rng));
        biases_.emplace_back(name_ + ".l" + std::to_string(l) + ".b", Matrix(1, out));
    }
}

NodeId Mlp::forward(Tape& t, NodeId x, bool train) {
    if (!initialized()) throw std::invalid_argument("Mlp '" + name_ + "': uninitialized network");
    if (t.value(x).cols() != widths_.front())
        throw std::invalid_argument("Mlp '" + name_ + "': input has " +
                                    std::to_string(t.value(x).cols()) + " columns, expected " +
                                    std::to_string(widths_.front()));
    NodeId h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const NodeId W = train ? t.param(weights_[l]) : t.constant(weights_[l].value);
        const NodeId b = train ? t.param(biases_[l]) : t.constant(biases_[l].value);
        h = t.add_rowvec(t.matmul(h, W), b);
        h = activate(t, h, l + 1 == weights_.size() ? out_act_ : hidden_act_);
    }
    return h;
}

Matrix Mlp::apply(const Matrix& x) {
    Tape t;
    return t.value(forward(t, t.constant(x), false));
}

std::vector<ParamTensor*> Mlp::params() {
    std::vector<ParamTensor*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

std::vector<const ParamTensor*> Mlp::params() const {
    std::vector<const ParamTensor*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

int Mlp::in_dim() const {
    if (widths_.empty()) throw std::invalid_argument("Mlp: uninitialized network");
    return widths_.front();
}

int Mlp::out_dim() const {
    if (widths_.empty()) throw std::invalid_argument("Mlp: uninitialized network");
    return widths_.back();
}

double Mlp::max_abs_weight() const {
    double m = 0.0;
    for (const ParamTensor* p : params())
        for (double v : p->value.values()) m = std::max(m, std::abs(v));
    return m;
}

void Mlp::clamp_weights(double c) {
    for (ParamTensor* p : params())
        for (double& v : p->value.values()) v = std::clamp(v, -c, c);
}

Encoder::Encoder(std::string name, int in_dim, std::vector<int> pel_widths, Pool pool,
                 Activation act, std::vector<int> head_hidden, int out_dim, Rng& rng)
    : name_(std::move(name)),
      in_dim_(in_dim),
      out_dim_(out_dim),
      pel_widths_(std::move(pel_widths)),
      head_hidden_(head_hidden),
      pool_(pool),
      act_(act) {
    if (in_dim_ < 1) throw std::invalid_argument("Encoder: in_dim must be >= 1");
    if (pel_widths_.empty()) throw std::invalid_argument("Encoder: needs at least one layer");
    int prev = in_dim_;
    for (std::size_t l = 0; l < pel_widths_.size(); ++l) {
        const int w = pel_widths_[l];
        if (w < 1) throw std::invalid_argument("Encoder: widths must be positive");
        PelLayer layer;
        layer.W = ParamTensor(name_ + ".pel" + std::to_string(l) + ".W",
                              symmetric_uniform_init(prev, w, rng));
        layer.b = ParamTensor(name_ + ".pel" + std::to_string(l) + ".b", Matrix(1, w));
        layer.gamma = ParamTensor(name_ + ".pel" + std::to_string(l) + ".gamma", Matrix(1, 1));
        layers_.push_back(std::move(layer));
        prev = w;
    }
    has_head_ = !head_hidden.empty() || prev != out_dim_;
    if (has_head_) {
        std::vector<int> widths;
        widths.push_back(prev);
        for (int h : head_hidden) widths.push_back(h);
        widths.push_back(out_dim_);
        head_ = Mlp(name_ + ".head", widths, act_, Activation::Identity, rng);
    }
}

NodeId Encoder::forward(Tape& t, NodeId cloud, bool train) {
    if (!initialized()) throw std::invalid_argument("Encoder: uninitialized network");
    const Matrix& in = t.value(cloud);
    if (in.rows() < 1) throw std::invalid_argument("Encoder: empty cloud");
    if (in.cols() != in_dim_)
        throw std::invalid_argument("Encoder: cloud has " + std::to_string(in.cols()) +
                                    " columns, expected " + std::to_string(in_dim_));
    NodeId h = cloud;
    for (PelLayer& layer : layers_) {
        const NodeId pooled = pool_ == Pool::Max ? t.max_pool_rows(h) : t.mean_pool_rows(h);
        const NodeId gamma = train ? t.param(layer.gamma) : t.constant(layer.gamma.value);
        const NodeId mixed = t.add_rowvec(h, t.mul_scalar(pooled, gamma));
        const NodeId W = train ? t.param(layer.W) : t.constant(layer.W.value);
        const NodeId b = train ? t.param(layer.b) : t.constant(layer.b.value);
        h = activate(t, t.add_rowvec(t.matmul(mixed, W), b), act_);
    }
    NodeId code = pool_ == Pool::Max ? t.max_pool_rows(h) : t.mean_pool_rows(h);
    if (has_head_) code = head_.forward(t, code, train);
    return code;
}

Matrix Encoder::encode(const Cloud& cloud) {
    Tape t;
    return t.value(forward(t, t.constant(cloud), false));
}

std::vector<ParamTensor*> Encoder::params() {
    std::vector<ParamTensor*> out;
    for (PelLayer& l : layers_) {
        out.push_back(&l.W);
        out.push_back(&l.b);
        out.push_back(&l.gamma);
    }
    if (has_head_)
        for (ParamTensor* p : head_.params()) out.push_back(p);
    return out;
}

std::vector<const ParamTensor*> Encoder::params() const {
    std::vector<const ParamTensor*> out;
    for (const PelLayer& l : layers_) {
        out.push_back(&l.W);
        out.push_back(&l.b);
        out.push_back(&l.gamma);
    }
    if (has_head_)
        for (const ParamTensor* p : head_.params()) out.push_back(p);
    return out;
}

PointGenerator::PointGenerator(std::string name, int noise_dim, int code_dim,
                               std::vector<int> hidden, int point_dim, Activation act, Rng& rng)
    : name_(std::move(name)),
      noise_dim_(noise_dim),
      code_dim_(code_dim),
      point_dim_(point_dim),
      hidden_(hidden) {
    if (noise_dim_ < 1 || code_dim_ < 1 || point_dim_ < 1)
        throw std::invalid_argument("PointGenerator: dims must be >= 1");
    std::vector<int> widths;
    widths.push_back(noise_dim_ + code_dim_);
    for (int h : hidden) widths.push_back(h);
    widths.push_back(point_dim_);
    net_ = Mlp(name_, widths, act, Activation::Identity, rng);
}

Matrix PointGenerator::sample_noise(int n, Rng& rng) const {
    Matrix z(n, noise_dim_);
    for (double& x : z.values()) x = rng.normal();
    return z;
}

Cloud PointGenerator::generate(const Matrix& psi, int n, Rng& rng) {
    if (!initialized()) throw std::invalid_argument("PointGenerator: uninitialized network");
    if (n < 1) throw std::invalid_argument("PointGenerator: n must be >= 1");
    if (psi.rows() != 1 || psi.cols() != code_dim_)
        throw std::invalid_argument("PointGenerator: descriptor must be 1x" +
                                    std::to_string(code_dim_) + ", got " + psi.shape_str());
    Tape t;
    const NodeId out = forward(t, t.constant(psi), sample_noise(n, rng), false);
    return t.value(out);
}

NodeId PointGenerator::forward(Tape& t, NodeId psi_node, const Matrix& z, bool train) {
    if (!initialized()) throw std::invalid_argument("PointGenerator: uninitialized network");
    if (z.cols() != noise_dim_)
        throw std::invalid_argument("PointGenerator: noise must have " +
                                    std::to_string(noise_dim_) + " columns");
    const NodeId zs = t.constant(z);
    const NodeId psi_rows = t.repeat_rows(psi_node, z.rows());
    return net_.forward(t, t.concat_cols(zs, psi_rows), train);
}

Critic::Critic(std::string name, int in_dim, std::vector<int> hidden, Activation act, double clip_c,
               Rng& rng)
    : name_(std::move(name)), hidden_(hidden) {
    if (!(clip_c > 0.0)) throw std::invalid_argument("Critic: clip range must be > 0");
    std::vector<int> widths;
    widths.push_back(in_dim);
    for (int h : hidden) widths.push_back(h);
    widths.push_back(1);
    net_ = Mlp(name_, widths, act, Activation::Identity, rng);
    clip_c_ = clip_c;
    clip(clip_c_);
}

Matrix Critic::score(const Cloud& points) {
    if (!initialized()) throw std::invalid_argument("Critic: uninitialized network");
    Tape t;
    return t.value(forward(t, t.constant(points), false));
}

NodeId Critic::forward(Tape& t, NodeId points, bool train) {
    return net_.forward(t, points, train);
}

void Critic::clip(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("clip_weights: clip range must be > 0");
    if (!initialized()) throw std::invalid_argument("Critic: uninitialized network");
    clip_c_ = c;
    net_.clamp_weights(c);
    recompute_bound();
}

void Critic::recompute_bound() {
    // |f(x)-f(y)| <= k |x-y|_1 with k the product over linear layers of
    // c * fan_in (L1 into the first layer, sup norm between layers).
    double k = 1.0;
    const std::vector<int>& w = net_.widths();
    for (std::size_t l = 0; l + 1 < w.size(); ++l) k *= clip_c_ * w[l];
    lip_k_ = k;
}

int Critic::in_dim() const { return net_.in_dim(); }

Matrix sample_object_code(Mlp& g_theta, int noise_dim, Rng& rng) {
    if (!g_theta.initialized())
        throw std::invalid_argument("hierarchical_sample: object generator uninitialized");
    Matrix u(1, noise_dim);
    for (double& x : u.values()) x = rng.normal();
    return g_theta.apply(u);
}

Cloud hierarchical_sample(Mlp& g_theta, PointGenerator& g_x, int n, Rng& rng) {
    if (!g_x.initialized())
        throw std::invalid_argument("hierarchical_sample: point generator uninitialized");
    if (n < 1) throw std::invalid_argument("hierarchical_sample: n must be >= 1");
    const Matrix psi = sample_object_code(g_theta, g_theta.in_dim(), rng);
    return g_x.generate(psi, n, rng);
}

}  // namespace pcgen::nets
