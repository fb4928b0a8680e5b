#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "odernn/matrix.hpp"
#include "odernn/random.hpp"

namespace odernn {

/// A trainable weight. Lives outside any tape; value and gradient persist
/// across forward passes. Gradients accumulate until zero_grad().
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter(std::string n, Matrix init)
        : name(std::move(n)), value(std::move(init)), grad(value.rows, value.cols) {}

    void zero_grad() { grad.fill(0.0); }
};

/// Owning registry of parameters. Each name appears exactly once; the
/// optimizer iterates this set in registration order.
class ParameterSet {
public:
    Parameter& add(std::string name, Matrix init) {
        for (const auto& p : items_) {
            if (p->name == name) {
                throw ConfigError("parameter '" + name + "' registered twice");
            }
        }
        items_.push_back(std::make_unique<Parameter>(std::move(name), std::move(init)));
        return *items_.back();
    }

    void zero_grad() {
        for (auto& p : items_) p->zero_grad();
    }

    std::size_t size() const { return items_.size(); }
    Parameter& operator[](std::size_t i) { return *items_[i]; }
    const Parameter& operator[](std::size_t i) const { return *items_[i]; }

    const std::vector<std::unique_ptr<Parameter>>& items() const { return items_; }

private:
    std::vector<std::unique_ptr<Parameter>> items_;
};

/// Handle to a node on a Tape.
struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

/// Reverse-mode autodiff tape over matrices. Records a fresh graph every
/// forward pass; backward() walks the recording in reverse and pushes leaf
/// gradients into their bound Parameters.
///
/// A tape is single-threaded; distinct tapes may live on distinct threads.
class Tape {
    enum class Op {
        kLeaf,
        kMatMul,
        kAdd,
        kAddRow,    // b is 1 x n, broadcast down the rows of a
        kSub,
        kMul,
        kMulRow,    // b is 1 x n, broadcast down the rows of a
        kTanh,
        kSigmoid,
        kScale,     // multiply by a compile-time constant scalar
        kScaleRows, // b is m x 1, scales row i of a by b(i,0)
        kSum,
    };

    struct Node {
        Matrix value;
        Matrix grad;  // lazily allocated during backward, freed after its visit
        Op op = Op::kLeaf;
        int a = -1;
        int b = -1;
        double c = 0.0;
        Parameter* bound = nullptr;
        bool needs_grad = false;
    };

public:
    Var leaf(Matrix value) { return push(Op::kLeaf, std::move(value), -1, -1, 0.0, nullptr, false); }

    /// Leaf bound to a Parameter; backward() accumulates into p.grad.
    /// The same Parameter maps to one node per tape.
    Var param(Parameter& p) {
        auto it = param_nodes_.find(&p);
        if (it != param_nodes_.end()) return Var{it->second};
        Var v = push(Op::kLeaf, p.value, -1, -1, 0.0, &p, true);
        param_nodes_.emplace(&p, v.idx);
        return v;
    }

    Var matmul(Var a, Var b) {
        const Matrix& av = value(a);
        const Matrix& bv = value(b);
        if (av.cols != bv.rows) {
            throw DimensionError("matmul: inner dimensions mismatch (" + av.shape_str() + " vs " +
                                 bv.shape_str() + ")");
        }
        return push(Op::kMatMul, matmul_values(av, bv), a.idx, b.idx);
    }

    Var add(Var a, Var b) { return binary_broadcast(a, b, Op::kAdd, Op::kAddRow, "add"); }

    Var sub(Var a, Var b) {
        const Matrix& av = value(a);
        const Matrix& bv = value(b);
        if (!av.same_shape(bv)) {
            throw DimensionError("sub: shape mismatch (" + av.shape_str() + " vs " +
                                 bv.shape_str() + ")");
        }
        Matrix out = av;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= bv.data[i];
        return push(Op::kSub, std::move(out), a.idx, b.idx);
    }

    Var mul(Var a, Var b) { return binary_broadcast(a, b, Op::kMul, Op::kMulRow, "mul"); }

    Var tanh(Var a) {
        Matrix out = value(a);
        for (double& v : out.data) v = std::tanh(v);
        return push(Op::kTanh, std::move(out), a.idx, -1);
    }

    Var sigmoid(Var a) {
        Matrix out = value(a);
        for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
        return push(Op::kSigmoid, std::move(out), a.idx, -1);
    }

    Var scale(Var a, double c) {
        Matrix out = value(a);
        for (double& v : out.data) v *= c;
        return push(Op::kScale, std::move(out), a.idx, -1, c);
    }

    /// Scales row i of a by the scalar r(i, 0).
    Var scale_rows(Var a, Var r) {
        const Matrix& av = value(a);
        const Matrix& rv = value(r);
        if (rv.cols != 1 || rv.rows != av.rows) {
            throw DimensionError("scale_rows: scaler must be " + std::to_string(av.rows) +
                                 "x1, got " + rv.shape_str());
        }
        Matrix out = av;
        for (std::size_t i = 0; i < av.rows; ++i) {
            const double s = rv.data[i];
            double* row = &out.data[i * out.cols];
            for (std::size_t j = 0; j < out.cols; ++j) row[j] *= s;
        }
        return push(Op::kScaleRows, std::move(out), a.idx, r.idx);
    }

    /// Sum of all entries, as a 1x1 node.
    Var sum(Var a) {
        const Matrix& av = value(a);
        double acc = 0.0;
        for (double v : av.data) acc += v;
        return push(Op::kSum, Matrix::full(1, 1, acc), a.idx, -1);
    }

    const Matrix& value(Var v) const { return nodes_[check(v)].value; }

    /// Scalar convenience accessor for 1x1 nodes.
    double scalar(Var v) const {
        const Matrix& m = value(v);
        if (m.rows != 1 || m.cols != 1) {
            throw DimensionError("scalar: node is " + m.shape_str() + ", expected 1x1");
        }
        return m.data[0];
    }

    /// Propagates d(loss)/d(node) to every reachable node and accumulates leaf
    /// gradients into bound Parameters. `loss` must be 1x1. Each call performs
    /// one full accumulation pass: calling twice without zeroing parameter
    /// gradients doubles them.
    void backward(Var loss) {
        Node& ln = nodes_[check(loss)];
        if (ln.value.rows != 1 || ln.value.cols != 1) {
            throw DimensionError("backward: loss must be 1x1, got " + ln.value.shape_str());
        }
        ln.grad = Matrix::full(1, 1, 1.0);
        for (int k = loss.idx; k >= 0; --k) {
            Node& n = nodes_[k];
            if (n.grad.empty()) continue;
            propagate(n);
            if (n.bound != nullptr) n.bound->grad += n.grad;
            n.grad = Matrix();  // this node's gradient is complete; release it
        }
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    Var push(Op op, Matrix value, int a, int b, double c = 0.0, Parameter* bound = nullptr,
             bool needs = false) {
        Node n;
        n.value = std::move(value);
        n.op = op;
        n.a = a;
        n.b = b;
        n.c = c;
        n.bound = bound;
        n.needs_grad = needs || (a >= 0 && nodes_[a].needs_grad) || (b >= 0 && nodes_[b].needs_grad);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size() - 1)};
    }

    Var binary_broadcast(Var a, Var b, Op full, Op row, const char* opname) {
        const Matrix* av = &value(a);
        const Matrix* bv = &value(b);
        if (av->same_shape(*bv)) {
            Matrix out(*av);
            if (full == Op::kAdd) {
                for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv->data[i];
            } else {
                for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv->data[i];
            }
            return push(full, std::move(out), a.idx, b.idx);
        }
        // Row-vector broadcast: commute so the 1 x n operand sits second.
        if (av->rows == 1 && av->cols == bv->cols && bv->rows > 1) {
            std::swap(a, b);
            std::swap(av, bv);
        }
        if (bv->rows == 1 && bv->cols == av->cols) {
            Matrix out(*av);
            for (std::size_t i = 0; i < av->rows; ++i) {
                double* orow = &out.data[i * out.cols];
                if (row == Op::kAddRow) {
                    for (std::size_t j = 0; j < out.cols; ++j) orow[j] += bv->data[j];
                } else {
                    for (std::size_t j = 0; j < out.cols; ++j) orow[j] *= bv->data[j];
                }
            }
            return push(row, std::move(out), a.idx, b.idx);
        }
        throw DimensionError(std::string(opname) + ": incompatible shapes (" + av->shape_str() +
                             " vs " + bv->shape_str() + ")");
    }

    int check(Var v) const {
        if (!v.valid() || v.idx >= static_cast<int>(nodes_.size())) {
            throw Error("invalid tape handle");
        }
        return v.idx;
    }

    Matrix& grad_of(int idx) {
        Node& n = nodes_[idx];
        if (n.grad.empty()) n.grad = Matrix::zeros(n.value.rows, n.value.cols);
        return n.grad;
    }

    bool wants(int idx) const { return idx >= 0 && nodes_[idx].needs_grad; }

    void propagate(Node& n) {
        const Matrix& g = n.grad;
        switch (n.op) {
            case Op::kLeaf:
                break;
            case Op::kMatMul:
                if (wants(n.a)) add_matmul_nt(grad_of(n.a), g, nodes_[n.b].value);
                if (wants(n.b)) add_matmul_tn(grad_of(n.b), nodes_[n.a].value, g);
                break;
            case Op::kAdd:
                if (wants(n.a)) grad_of(n.a) += g;
                if (wants(n.b)) grad_of(n.b) += g;
                break;
            case Op::kAddRow:
                if (wants(n.a)) grad_of(n.a) += g;
                if (wants(n.b)) {
                    Matrix& bg = grad_of(n.b);
                    for (std::size_t i = 0; i < g.rows; ++i) {
                        for (std::size_t j = 0; j < g.cols; ++j) bg.data[j] += g(i, j);
                    }
                }
                break;
            case Op::kSub:
                if (wants(n.a)) grad_of(n.a) += g;
                if (wants(n.b)) {
                    Matrix& bg = grad_of(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i) bg.data[i] -= g.data[i];
                }
                break;
            case Op::kMul: {
                if (wants(n.a)) {
                    Matrix& ag = grad_of(n.a);
                    const Matrix& bv = nodes_[n.b].value;
                    for (std::size_t i = 0; i < g.size(); ++i) ag.data[i] += g.data[i] * bv.data[i];
                }
                if (wants(n.b)) {
                    Matrix& bg = grad_of(n.b);
                    const Matrix& av = nodes_[n.a].value;
                    for (std::size_t i = 0; i < g.size(); ++i) bg.data[i] += g.data[i] * av.data[i];
                }
                break;
            }
            case Op::kMulRow: {
                const Matrix& av = nodes_[n.a].value;
                const Matrix& bv = nodes_[n.b].value;
                if (wants(n.a)) {
                    Matrix& ag = grad_of(n.a);
                    for (std::size_t i = 0; i < g.rows; ++i) {
                        for (std::size_t j = 0; j < g.cols; ++j) {
                            ag(i, j) += g(i, j) * bv.data[j];
                        }
                    }
                }
                if (wants(n.b)) {
                    Matrix& bg = grad_of(n.b);
                    for (std::size_t i = 0; i < g.rows; ++i) {
                        for (std::size_t j = 0; j < g.cols; ++j) {
                            bg.data[j] += g(i, j) * av(i, j);
                        }
                    }
                }
                break;
            }
            case Op::kTanh:
                if (wants(n.a)) {
                    Matrix& ag = grad_of(n.a);
                    const Matrix& y = n.value;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        ag.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
                    }
                }
                break;
            case Op::kSigmoid:
                if (wants(n.a)) {
                    Matrix& ag = grad_of(n.a);
                    const Matrix& y = n.value;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        ag.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
                    }
                }
                break;
            case Op::kScale:
                if (wants(n.a)) {
                    Matrix& ag = grad_of(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i) ag.data[i] += n.c * g.data[i];
                }
                break;
            case Op::kScaleRows: {
                const Matrix& av = nodes_[n.a].value;
                const Matrix& rv = nodes_[n.b].value;
                if (wants(n.a)) {
                    Matrix& ag = grad_of(n.a);
                    for (std::size_t i = 0; i < g.rows; ++i) {
                        const double s = rv.data[i];
                        for (std::size_t j = 0; j < g.cols; ++j) ag(i, j) += g(i, j) * s;
                    }
                }
                if (wants(n.b)) {
                    Matrix& rg = grad_of(n.b);
                    for (std::size_t i = 0; i < g.rows; ++i) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < g.cols; ++j) acc += g(i, j) * av(i, j);
                        rg.data[i] += acc;
                    }
                }
                break;
            }
            case Op::kSum:
                if (wants(n.a)) {
                    Matrix& ag = grad_of(n.a);
                    const double s = g.data[0];
                    for (double& v : ag.data) v += s;
                }
                break;
        }
    }

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, int> param_nodes_;
};

/// Uniform init in [-k, k] with k = 1/sqrt(fan_in), the usual recurrent-layer default.
inline Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng,
                           double gain = 1.0) {
    const double k = gain / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-k, k);
    return m;
}

}  // namespace odernn
