#include "pcgen/diffcore.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pcgen::diff {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("from_rows: empty");
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.rows(); ++r) {
        if (static_cast<int>(rows[r].size()) != m.cols())
            throw std::invalid_argument("from_rows: ragged rows");
        for (int c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

ParamTensor::ParamTensor(std::string n, Matrix v) : name(std::move(n)) {
    set_value(v);
}

void ParamTensor::set_value(const Matrix& v) {
    if (!v.finite())
        throw NumericError("ParamTensor '" + name + "': non-finite value written");
    value = v;
    if (!grad.same_shape(value)) grad = Matrix(value.rows(), value.cols());
    grad_ready = false;
}

void ParamTensor::set_entry(int r, int c, double x) {
    if (!std::isfinite(x))
        throw NumericError("ParamTensor '" + name + "': non-finite value written");
    value(r, c) = x;
}

void Tape::check_id(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw std::invalid_argument("Tape: bad node id");
}

Tape::NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::param(ParamTensor& p) {
    Node n;
    n.op = Op::Param;
    n.value = p.value;
    n.tensor = &p;
    return push(std::move(n));
}

Tape::NodeId Tape::input(Matrix m) {
    if (!m.finite()) throw NumericError("Tape::input: non-finite input");
    Node n;
    n.op = Op::Input;
    n.value = std::move(m);
    return push(std::move(n));
}

Tape::NodeId Tape::constant(Matrix m) {
    if (!m.finite()) throw NumericError("Tape::constant: non-finite input");
    Node n;
    n.op = Op::Const;
    n.value = std::move(m);
    return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows())
        throw std::invalid_argument("matmul: shape mismatch " + A.shape_str() + " * " + B.shape_str());
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    Matrix C(A.rows(), B.cols());
    const int K = A.cols(), M = B.cols();
    for (int i = 0; i < A.rows(); ++i) {
        double* out = C.data() + static_cast<std::size_t>(i) * M;
        const double* arow = A.data() + static_cast<std::size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
            const double av = arow[k];
            const double* brow = B.data() + static_cast<std::size_t>(k) * M;
            for (int j = 0; j < M; ++j) out[j] += av * brow[j];
        }
    }
    n.value = std::move(C);
    return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (!A.same_shape(B))
        throw std::invalid_argument("add: shape mismatch " + A.shape_str() + " + " + B.shape_str());
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.value = A;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] += B.data()[i];
    return push(std::move(n));
}

Tape::NodeId Tape::add_rowvec(NodeId a, NodeId row) {
    const Matrix& A = value(a);
    const Matrix& R = value(row);
    if (R.rows() != 1 || R.cols() != A.cols())
        throw std::invalid_argument("add_rowvec: shape mismatch " + A.shape_str() + " + " + R.shape_str());
    Node n;
    n.op = Op::AddRow;
    n.a = a;
    n.b = row;
    n.value = A;
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) n.value(i, j) += R(0, j);
    return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (!A.same_shape(B))
        throw std::invalid_argument("sub: shape mismatch " + A.shape_str() + " - " + B.shape_str());
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.value = A;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] -= B.data()[i];
    return push(std::move(n));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (!A.same_shape(B))
        throw std::invalid_argument("mul: shape mismatch " + A.shape_str() + " * " + B.shape_str());
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.value = A;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] *= B.data()[i];
    return push(std::move(n));
}

Tape::NodeId Tape::mul_scalar(NodeId a, NodeId s) {
    const Matrix& S = value(s);
    if (S.rows() != 1 || S.cols() != 1)
        throw std::invalid_argument("mul_scalar: scale must be 1x1, got " + S.shape_str());
    Node n;
    n.op = Op::MulScalar;
    n.a = a;
    n.b = s;
    n.value = value(a);
    const double k = S(0, 0);
    for (double& x : n.value.values()) x *= k;
    return push(std::move(n));
}

Tape::NodeId Tape::affine(NodeId a, double scale, double shift) {
    Node n;
    n.op = Op::Affine;
    n.a = a;
    n.s0 = scale;
    n.s1 = shift;
    n.value = value(a);
    for (double& x : n.value.values()) x = scale * x + shift;
    return push(std::move(n));
}

namespace {
double softplus_val(double x) {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Tape::NodeId Tape::softplus(NodeId a) {
    Node n;
    n.op = Op::Softplus;
    n.a = a;
    n.value = value(a);
    for (double& x : n.value.values()) x = softplus_val(x);
    return push(std::move(n));
}

Tape::NodeId Tape::leaky_relu(NodeId a, double slope) {
    Node n;
    n.op = Op::LeakyRelu;
    n.a = a;
    n.s0 = slope;
    n.value = value(a);
    for (double& x : n.value.values()) x = x > 0.0 ? x : slope * x;
    return push(std::move(n));
}

Tape::NodeId Tape::abs(NodeId a) {
    Node n;
    n.op = Op::Abs;
    n.a = a;
    n.value = value(a);
    for (double& x : n.value.values()) x = std::abs(x);
    return push(std::move(n));
}

Tape::NodeId Tape::square(NodeId a) {
    Node n;
    n.op = Op::Square;
    n.a = a;
    n.value = value(a);
    for (double& x : n.value.values()) x *= x;
    return push(std::move(n));
}

Tape::NodeId Tape::max_pool_rows(NodeId a) {
    const Matrix& A = value(a);
    if (A.rows() < 1) throw std::invalid_argument("max_pool_rows: empty input");
    Node n;
    n.op = Op::MaxPoolRows;
    n.a = a;
    n.value = Matrix(1, A.cols());
    n.arg_rows.assign(A.cols(), 0);
    for (int j = 0; j < A.cols(); ++j) {
        double best = A(0, j);
        int arg = 0;
        for (int i = 1; i < A.rows(); ++i) {
            if (A(i, j) > best) {  // strict: ties keep the lowest row index
                best = A(i, j);
                arg = i;
            }
        }
        n.value(0, j) = best;
        n.arg_rows[j] = arg;
    }
    return push(std::move(n));
}

Tape::NodeId Tape::mean_pool_rows(NodeId a) {
    const Matrix& A = value(a);
    if (A.rows() < 1) throw std::invalid_argument("mean_pool_rows: empty input");
    Node n;
    n.op = Op::MeanPoolRows;
    n.a = a;
    n.value = Matrix(1, A.cols());
    std::vector<double> col(static_cast<std::size_t>(A.rows()));
    for (int j = 0; j < A.cols(); ++j) {
        for (int i = 0; i < A.rows(); ++i) col[static_cast<std::size_t>(i)] = A(i, j);
        n.value(0, j) = exact_sum(col) / A.rows();
    }
    return push(std::move(n));
}

Tape::NodeId Tape::repeat_rows(NodeId a, int count) {
    const Matrix& A = value(a);
    if (A.rows() != 1) throw std::invalid_argument("repeat_rows: expects a row vector");
    if (count < 1) throw std::invalid_argument("repeat_rows: count must be >= 1");
    Node n;
    n.op = Op::RepeatRows;
    n.a = a;
    n.value = Matrix(count, A.cols());
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < A.cols(); ++j) n.value(i, j) = A(0, j);
    return push(std::move(n));
}

Tape::NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows())
        throw std::invalid_argument("concat_cols: row mismatch " + A.shape_str() + " | " + B.shape_str());
    Node n;
    n.op = Op::ConcatCols;
    n.a = a;
    n.b = b;
    n.value = Matrix(A.rows(), A.cols() + B.cols());
    for (int i = 0; i < A.rows(); ++i) {
        for (int j = 0; j < A.cols(); ++j) n.value(i, j) = A(i, j);
        for (int j = 0; j < B.cols(); ++j) n.value(i, A.cols() + j) = B(i, j);
    }
    return push(std::move(n));
}

Tape::NodeId Tape::sum_all(NodeId a) {
    Node n;
    n.op = Op::SumAll;
    n.a = a;
    n.value = Matrix(1, 1);
    n.value(0, 0) = exact_sum(value(a).values());
    return push(std::move(n));
}

Tape::NodeId Tape::mean_all(NodeId a) {
    const Matrix& A = value(a);
    if (A.size() == 0) throw std::invalid_argument("mean_all: empty input");
    Node n;
    n.op = Op::MeanAll;
    n.a = a;
    n.value = Matrix(1, 1);
    n.value(0, 0) = exact_sum(A.values()) / static_cast<double>(A.size());
    return push(std::move(n));
}

void Tape::backward_scalar(NodeId output, double seed) {
    Matrix g(1, 1);
    g(0, 0) = seed;
    backward(output, g);
}

void Tape::backward(NodeId output, const Matrix& out_grad) {
    if (consumed_) throw std::invalid_argument("Tape::backward: tape already consumed");
    check_id(output);
    if (!out_grad.same_shape(node(output).value))
        throw std::invalid_argument("Tape::backward: seed gradient shape mismatch");
    consumed_ = true;

    for (Node& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
    nodes_[static_cast<std::size_t>(output)].grad = out_grad;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        const Matrix& g = n.grad;
        switch (n.op) {
            case Op::Param:
                n.tensor->grad_ready = true;
                for (std::size_t i = 0; i < g.size(); ++i) n.tensor->grad.data()[i] += g.data()[i];
                break;
            case Op::Input:
            case Op::Const:
                break;
            case Op::MatMul: {
                const Matrix& A = nodes_[n.a].value;
                const Matrix& B = nodes_[n.b].value;
                Matrix& dA = nodes_[n.a].grad;
                Matrix& dB = nodes_[n.b].grad;
                // dA += g * B^T ; dB += A^T * g
                for (int i = 0; i < A.rows(); ++i)
                    for (int k = 0; k < A.cols(); ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < B.cols(); ++j) acc += g(i, j) * B(k, j);
                        dA(i, k) += acc;
                    }
                for (int k = 0; k < B.rows(); ++k)
                    for (int j = 0; j < B.cols(); ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < A.rows(); ++i) acc += A(i, k) * g(i, j);
                        dB(k, j) += acc;
                    }
                break;
            }
            case Op::Add:
                for (std::size_t i = 0; i < g.size(); ++i) {
                    nodes_[n.a].grad.data()[i] += g.data()[i];
                    nodes_[n.b].grad.data()[i] += g.data()[i];
                }
                break;
            case Op::AddRow: {
                Matrix& dA = nodes_[n.a].grad;
                Matrix& dR = nodes_[n.b].grad;
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) {
                        dA(i, j) += g(i, j);
                        dR(0, j) += g(i, j);
                    }
                break;
            }
            case Op::Sub:
                for (std::size_t i = 0; i < g.size(); ++i) {
                    nodes_[n.a].grad.data()[i] += g.data()[i];
                    nodes_[n.b].grad.data()[i] -= g.data()[i];
                }
                break;
            case Op::Mul: {
                const Matrix& A = nodes_[n.a].value;
                const Matrix& B = nodes_[n.b].value;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    nodes_[n.a].grad.data()[i] += g.data()[i] * B.data()[i];
                    nodes_[n.b].grad.data()[i] += g.data()[i] * A.data()[i];
                }
                break;
            }
            case Op::MulScalar: {
                const Matrix& A = nodes_[n.a].value;
                const double k = nodes_[n.b].value(0, 0);
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    nodes_[n.a].grad.data()[i] += k * g.data()[i];
                    acc += g.data()[i] * A.data()[i];
                }
                nodes_[n.b].grad(0, 0) += acc;
                break;
            }
            case Op::Affine:
                for (std::size_t i = 0; i < g.size(); ++i)
                    nodes_[n.a].grad.data()[i] += n.s0 * g.data()[i];
                break;
            case Op::Softplus: {
                const Matrix& X = nodes_[n.a].value;
                for (std::size_t i = 0; i < g.size(); ++i)
                    nodes_[n.a].grad.data()[i] += logistic(X.data()[i]) * g.data()[i];
                break;
            }
            case Op::LeakyRelu: {
                const Matrix& X = nodes_[n.a].value;
                for (std::size_t i = 0; i < g.size(); ++i)
                    nodes_[n.a].grad.data()[i] += (X.data()[i] > 0.0 ? 1.0 : n.s0) * g.data()[i];
                break;
            }
            case Op::Abs: {
                const Matrix& X = nodes_[n.a].value;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double x = X.data()[i];
                    const double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                    nodes_[n.a].grad.data()[i] += s * g.data()[i];
                }
                break;
            }
            case Op::Square: {
                const Matrix& X = nodes_[n.a].value;
                for (std::size_t i = 0; i < g.size(); ++i)
                    nodes_[n.a].grad.data()[i] += 2.0 * X.data()[i] * g.data()[i];
                break;
            }
            case Op::MaxPoolRows: {
                Matrix& dA = nodes_[n.a].grad;
                for (int j = 0; j < g.cols(); ++j) dA(n.arg_rows[j], j) += g(0, j);
                break;
            }
            case Op::MeanPoolRows: {
                Matrix& dA = nodes_[n.a].grad;
                const double inv = 1.0 / dA.rows();
                for (int i = 0; i < dA.rows(); ++i)
                    for (int j = 0; j < dA.cols(); ++j) dA(i, j) += inv * g(0, j);
                break;
            }
            case Op::RepeatRows: {
                Matrix& dA = nodes_[n.a].grad;
                for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) dA(0, j) += g(i, j);
                break;
            }
            case Op::ConcatCols: {
                Matrix& dA = nodes_[n.a].grad;
                Matrix& dB = nodes_[n.b].grad;
                for (int i = 0; i < g.rows(); ++i) {
                    for (int j = 0; j < dA.cols(); ++j) dA(i, j) += g(i, j);
                    for (int j = 0; j < dB.cols(); ++j) dB(i, j) += g(i, dA.cols() + j);
                }
                break;
            }
            case Op::SumAll: {
                Matrix& dA = nodes_[n.a].grad;
                for (double& x : dA.values()) x += g(0, 0);
                break;
            }
            case Op::MeanAll: {
                Matrix& dA = nodes_[n.a].grad;
                const double inv = 1.0 / static_cast<double>(dA.size());
                for (double& x : dA.values()) x += inv * g(0, 0);
                break;
            }
        }
    }
}

const Matrix& Tape::grad(NodeId id) const {
    if (!consumed_) throw std::invalid_argument("Tape::grad: backward has not run");
    return node(id).grad;
}

void Tape::clear() {
    nodes_.clear();
    consumed_ = false;
}

Adam::Adam(std::vector<ParamTensor*> params, AdamConfig cfg) : cfg_(cfg) {
    for (ParamTensor* p : params) {
        Slot s;
        s.p = p;
        s.m = Matrix(p->value.rows(), p->value.cols());
        s.v = Matrix(p->value.rows(), p->value.cols());
        slots_.push_back(std::move(s));
    }
}

void Adam::step() {
    bool any = false;
    for (const Slot& s : slots_) any = any || s.p->grad_ready;
    if (!any) throw std::invalid_argument("adam_step: no gradients populated");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Slot& s : slots_) {
        double* w = s.p->value.data();
        double* gr = s.p->grad.data();
        double* m = s.m.data();
        double* v = s.v.data();
        for (std::size_t i = 0; i < s.p->value.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gr[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gr[i] * gr[i];
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            w[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
        }
        if (!s.p->value.finite())
            throw NumericError("adam_step: parameter '" + s.p->name + "' became non-finite");
        s.p->zero_grad();
    }
}

void Adam::zero_grad() {
    for (Slot& s : slots_) s.p->zero_grad();
}

namespace {
std::string hex_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", x);
    return buf;
}
}  // namespace

void save_params(const std::string& path, std::span<const ParamTensor* const> params) {
    std::ofstream out(path);
    if (!out) throw DataError("save_params: cannot open '" + path + "'");
    out << "pcgen-params v1\n" << params.size() << "\n";
    for (const ParamTensor* p : params) {
        out << "tensor " << p->name << " " << p->value.rows() << " " << p->value.cols() << "\n";
        for (int r = 0; r < p->value.rows(); ++r) {
            for (int c = 0; c < p->value.cols(); ++c) {
                if (c) out << ' ';
                out << hex_double(p->value(r, c));
            }
            out << '\n';
        }
    }
    if (!out) throw DataError("save_params: write failed for '" + path + "'");
}

void load_params(const std::string& path, std::span<ParamTensor* const> params) {
    std::ifstream in(path);
    if (!in) throw DataError("load_params: cannot open '" + path + "'");
    std::string header;
    std::getline(in, header);
    if (header != "pcgen-params v1")
        throw DataError("load_params: unrecognized header in '" + path + "'");
    std::size_t count = 0;
    in >> count;
    if (count != params.size())
        throw DataError("load_params: '" + path + "' holds " + std::to_string(count) +
                        " tensors, expected " + std::to_string(params.size()));
    for (ParamTensor* p : params) {
        std::string tag, name;
        int rows = 0, cols = 0;
        in >> tag >> name >> rows >> cols;
        if (!in || tag != "tensor")
            throw DataError("load_params: malformed tensor record in '" + path + "'");
        if (name != p->name)
            throw DataError("load_params: tensor '" + name + "' does not match expected '" + p->name + "'");
        if (rows != p->value.rows() || cols != p->value.cols())
            throw DataError("load_params: shape mismatch for tensor '" + name + "'");
        Matrix m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                std::string tok;
                in >> tok;
                if (!in) throw DataError("load_params: truncated values for tensor '" + name + "'");
                char* end = nullptr;
                m(r, c) = std::strtod(tok.c_str(), &end);
                if (end == tok.c_str())
                    throw DataError("load_params: bad value '" + tok + "' in tensor '" + name + "'");
            }
        p->set_value(m);
    }
}

}  // namespace pcgen::diff
