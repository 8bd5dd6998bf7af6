#include "spnas/tape.hpp"

#include "spnas/error.hpp"
#include "spnas/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spnas {

namespace {

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
}

} // namespace

Var Tape::push(Op op, Matrix value, std::uint32_t lhs, std::uint32_t rhs, double scalar) {
    Node n;
    n.op = op;
    n.lhs = lhs;
    n.rhs = rhs;
    n.scalar = scalar;
    n.owned = std::move(value);
    if (tracking_) {
        switch (op) {
        case Op::MatMul:
        case Op::MatMulNT:
        case Op::Add:
        case Op::Hadamard:
        case Op::MseLoss:
            n.requires_grad = nodes_[lhs].requires_grad || nodes_[rhs].requires_grad;
            break;
        case Op::RowSoftmax: // mask is constant
        case Op::Scale:
        case Op::Relu:
        case Op::MeanPoolRows:
        case Op::Sum:
        case Op::Reshape:
            n.requires_grad = nodes_[lhs].requires_grad;
            break;
        case Op::Leaf:
            break;
        }
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
    if (v.id >= nodes_.size())
        throw ContractError("tape: unknown node id " + std::to_string(v.id));
    return nodes_[v.id];
}

Var Tape::parameter(const Matrix& value) {
    Node n;
    n.ref = &value;
    n.requires_grad = tracking_;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(const Matrix& value) {
    Node n;
    n.ref = &value;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix&& value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& av = node(a).value();
    const Matrix& bv = node(b).value();
    if (av.cols() != bv.rows())
        throw DimensionError("matmul: " + av.shape_string() + " * " + bv.shape_string());
    Matrix out(av.rows(), bv.cols());
    kernels::active().gemm_nn({av.rows(), bv.cols(), av.cols()}, av.data().data(),
                              bv.data().data(), out.data().data());
    return push(Op::MatMul, std::move(out), a.id, b.id);
}

Var Tape::matmul_nt(Var a, Var b) {
    const Matrix& av = node(a).value();
    const Matrix& bv = node(b).value();
    if (av.cols() != bv.cols())
        throw DimensionError("matmul_nt: " + av.shape_string() + " * (" + bv.shape_string() +
                             ")^T");
    Matrix out(av.rows(), bv.rows());
    kernels::active().gemm_nt({av.rows(), bv.rows(), av.cols()}, av.data().data(),
                              bv.data().data(), out.data().data());
    return push(Op::MatMulNT, std::move(out), a.id, b.id);
}

Var Tape::add(Var a, Var b) {
    const Matrix& av = node(a).value();
    const Matrix& bv = node(b).value();
    require_same_shape("add", av, bv);
    Matrix out = av;
    auto o = out.data();
    auto bd = bv.data();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] += bd[i];
    return push(Op::Add, std::move(out), a.id, b.id);
}

Var Tape::hadamard(Var a, Var b) {
    const Matrix& av = node(a).value();
    const Matrix& bv = node(b).value();
    require_same_shape("hadamard", av, bv);
    Matrix out = av;
    auto o = out.data();
    auto bd = bv.data();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] *= bd[i];
    return push(Op::Hadamard, std::move(out), a.id, b.id);
}

Var Tape::scale(Var a, double factor) {
    Matrix out = node(a).value();
    for (double& x : out.data())
        x *= factor;
    return push(Op::Scale, std::move(out), a.id, 0, factor);
}

Var Tape::relu(Var a) {
    Matrix out = node(a).value();
    for (double& x : out.data())
        x = x > 0.0 ? x : 0.0;
    return push(Op::Relu, std::move(out), a.id, 0);
}

Var Tape::row_softmax(Var a, Var mask) {
    const Matrix& av = node(a).value();
    const Node& mn = node(mask);
    const Matrix& mv = mn.value();
    require_same_shape("row_softmax", av, mv);
    if (mn.requires_grad)
        throw ContractError("row_softmax: mask must be a constant");
    for (double m : mv.data())
        if (m != 0.0 && m != 1.0)
            throw ContractError("row_softmax: mask entries must be 0 or 1");
    Matrix out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        auto x = av.row(r);
        auto m = mv.row(r);
        auto y = out.row(r);
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < x.size(); ++c)
            if (m[c] != 0.0)
                hi = std::max(hi, x[c]);
        if (hi == -std::numeric_limits<double>::infinity())
            continue; // fully masked row stays zero
        double total = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
            if (m[c] != 0.0) {
                y[c] = std::exp(x[c] - hi);
                total += y[c];
            }
        }
        for (double& v : y)
            v /= total;
    }
    return push(Op::RowSoftmax, std::move(out), a.id, mask.id);
}

Var Tape::mean_pool_rows(Var a) {
    const Matrix& av = node(a).value();
    if (av.rows() == 0)
        throw DimensionError("mean_pool_rows: empty input");
    Matrix out(1, av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        auto x = av.row(r);
        for (std::size_t c = 0; c < x.size(); ++c)
            out(0, c) += x[c];
    }
    const double inv = 1.0 / static_cast<double>(av.rows());
    for (double& v : out.data())
        v *= inv;
    return push(Op::MeanPoolRows, std::move(out), a.id, 0);
}

Var Tape::mse_loss(Var prediction, Var target) {
    const Matrix& pv = node(prediction).value();
    const Matrix& tv = node(target).value();
    require_same_shape("mse_loss", pv, tv);
    if (pv.size() == 0)
        throw DimensionError("mse_loss: empty input");
    double acc = 0.0;
    auto p = pv.data();
    auto t = tv.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        acc += d * d;
    }
    return push(Op::MseLoss, Matrix(1, 1, acc / static_cast<double>(p.size())), prediction.id,
                target.id);
}

Var Tape::sum(Var a) {
    double acc = 0.0;
    for (double x : node(a).value().data())
        acc += x;
    return push(Op::Sum, Matrix(1, 1, acc), a.id, 0);
}

Var Tape::reshape(Var a, std::size_t rows, std::size_t cols) {
    const Matrix& av = node(a).value();
    if (av.size() != rows * cols)
        throw DimensionError("reshape: " + av.shape_string() + " to " + shape_string(rows, cols));
    std::vector<double> data(av.data().begin(), av.data().end());
    return push(Op::Reshape, Matrix(rows, cols, std::move(data)), a.id, 0);
}

const Matrix& Tape::value(Var v) const { return node(v).value(); }

const Matrix& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.empty() && n.value().size() != 0)
        throw StateError("tape: gradient requested before backward()");
    return n.grad;
}


void Tape::backward(Var loss) {
    if (!tracking_)
        throw StateError("backward() on a tape built without gradient tracking");
    const Node& ln = node(loss);
    if (ln.value().rows() != 1 || ln.value().cols() != 1)
        throw ContractError("backward: loss must be 1x1, got " + ln.value().shape_string());

    for (Node& n : nodes_) {
        const Matrix& v = n.value();
        if (n.grad.same_shape(v))
            n.grad.fill(0.0);
        else
            n.grad = Matrix(v.rows(), v.cols());
    }
    nodes_[loss.id].grad(0, 0) = 1.0;

    const kernels::KernelTable& k = kernels::active();
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.op == Op::Leaf)
            continue;
        const Matrix& g = n.grad;
        switch (n.op) {
        case Op::MatMul: {
            Node& a = nodes_[n.lhs];
            Node& b = nodes_[n.rhs];
            const Matrix& av = a.value();
            const Matrix& bv = b.value();
            // C[m×n] = A[m×k] B[k×n]
            if (a.requires_grad) // dA += G Bᵀ
                k.gemm_nt({av.rows(), av.cols(), bv.cols()}, g.data().data(), bv.data().data(),
                          a.grad.data().data());
            if (b.requires_grad) // dB += Aᵀ G
                k.gemm_tn({bv.rows(), bv.cols(), av.rows()}, av.data().data(), g.data().data(),
                          b.grad.data().data());
            break;
        }
        case Op::MatMulNT: {
            Node& a = nodes_[n.lhs];
            Node& b = nodes_[n.rhs];
            const Matrix& av = a.value();
            const Matrix& bv = b.value();
            // C[m×n] = A[m×k] B[n×k]ᵀ
            if (a.requires_grad) // dA += G B
                k.gemm_nn({av.rows(), av.cols(), bv.rows()}, g.data().data(), bv.data().data(),
                          a.grad.data().data());
            if (b.requires_grad) // dB += Gᵀ A
                k.gemm_tn({bv.rows(), bv.cols(), av.rows()}, g.data().data(), av.data().data(),
                          b.grad.data().data());
            break;
        }
        case Op::Add: {
            for (std::uint32_t in : {n.lhs, n.rhs}) {
                Node& a = nodes_[in];
                if (!a.requires_grad)
                    continue;
                auto ad = a.grad.data();
                auto gd = g.data();
                for (std::size_t i = 0; i < gd.size(); ++i)
                    ad[i] += gd[i];
            }
            break;
        }
        case Op::Hadamard: {
            Node& a = nodes_[n.lhs];
            Node& b = nodes_[n.rhs];
            auto gd = g.data();
            if (a.requires_grad) {
                auto ad = a.grad.data();
                auto bv = b.value().data();
                for (std::size_t i = 0; i < gd.size(); ++i)
                    ad[i] += gd[i] * bv[i];
            }
            if (b.requires_grad) {
                auto bd = b.grad.data();
                auto av = a.value().data();
                for (std::size_t i = 0; i < gd.size(); ++i)
                    bd[i] += gd[i] * av[i];
            }
            break;
        }
        case Op::Scale: {
            auto ad = nodes_[n.lhs].grad.data();
            auto gd = g.data();
            for (std::size_t i = 0; i < gd.size(); ++i)
                ad[i] += n.scalar * gd[i];
            break;
        }
        case Op::Relu: {
            auto ad = nodes_[n.lhs].grad.data();
            auto gd = g.data();
            auto out = n.owned.data();
            for (std::size_t i = 0; i < gd.size(); ++i)
                if (out[i] > 0.0)
                    ad[i] += gd[i];
            break;
        }
        case Op::RowSoftmax: {
            Matrix& ag = nodes_[n.lhs].grad;
            const Matrix& y = n.owned;
            for (std::size_t r = 0; r < y.rows(); ++r) {
                auto yr = y.row(r);
                auto gr = g.row(r);
                auto dr = ag.row(r);
                double dot = 0.0;
                for (std::size_t c = 0; c < yr.size(); ++c)
                    dot += yr[c] * gr[c];
                for (std::size_t c = 0; c < yr.size(); ++c)
                    dr[c] += yr[c] * (gr[c] - dot);
            }
            break;
        }
        case Op::MeanPoolRows: {
            Matrix& ag = nodes_[n.lhs].grad;
            const double inv = 1.0 / static_cast<double>(ag.rows());
            for (std::size_t r = 0; r < ag.rows(); ++r) {
                auto dr = ag.row(r);
                for (std::size_t c = 0; c < dr.size(); ++c)
                    dr[c] += g(0, c) * inv;
            }
            break;
        }
        case Op::MseLoss: {
            Node& p = nodes_[n.lhs];
            Node& t = nodes_[n.rhs];
            auto pv = p.value().data();
            auto tv = t.value().data();
            const double factor = 2.0 * g(0, 0) / static_cast<double>(pv.size());
            for (std::size_t i = 0; i < pv.size(); ++i) {
                const double d = factor * (pv[i] - tv[i]);
                if (p.requires_grad)
                    p.grad.data()[i] += d;
                if (t.requires_grad)
                    t.grad.data()[i] -= d;
            }
            break;
        }
        case Op::Sum: {
            for (double& x : nodes_[n.lhs].grad.data())
                x += g(0, 0);
            break;
        }
        case Op::Reshape: {
            auto ad = nodes_[n.lhs].grad.data();
            auto gd = g.data();
            for (std::size_t i = 0; i < gd.size(); ++i)
                ad[i] += gd[i];
            break;
        }
        case Op::Leaf:
            break;
        }
    }
}

void Tape::clear() { nodes_.clear(); }

} // namespace spnas
