#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. Node ids are handed out
// in creation order, so inputs always precede outputs and backward() can walk
// the node list in reverse. Tapes are single-owner and rebuilt per forward
// pass; parameters and constants are referenced, not copied, and must outlive
// the tape.

#include "spnas/matrix.hpp"

#include <cstdint>
#include <vector>

namespace spnas {

struct Var {
    std::uint32_t id = 0;
};

class Tape {
public:
    /// With `track_gradients == false` the tape only evaluates values; no
    /// gradient buffers are allocated and backward() is rejected.
    explicit Tape(bool track_gradients = true) : tracking_(track_gradients) {}

    /// Leaf whose gradient is wanted. The matrix is referenced.
    Var parameter(const Matrix& value);
    /// Leaf treated as constant. The matrix is referenced.
    Var constant(const Matrix& value);
    /// Constant leaf owning its value.
    Var constant(Matrix&& value);

    Var matmul(Var a, Var b);
    /// a · bᵀ
    Var matmul_nt(Var a, Var b);
    Var add(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double factor);
    Var relu(Var a);
    /// Softmax along each row restricted to entries where `mask` is 1.
    /// Masked entries are exactly 0; a row with no unmasked entry is all 0.
    /// The mask must be a constant leaf with entries in {0, 1}.
    Var row_softmax(Var a, Var mask);
    /// n×c → 1×c
    Var mean_pool_rows(Var a);
    /// Mean squared error between two same-shaped matrices, as a 1×1 node.
    Var mse_loss(Var prediction, Var target);
    /// Sum of all entries, as a 1×1 node.
    Var sum(Var a);
    /// Row-major reinterpretation; element count must match.
    Var reshape(Var a, std::size_t rows, std::size_t cols);

    const Matrix& value(Var v) const;
    /// Gradient of the last backward() loss w.r.t. `v`. Zero-filled for
    /// nodes that do not depend on any parameter.
    const Matrix& grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    /// Accumulate d(loss)/d(node) for every node reachable from `loss`.
    /// `loss` must hold a 1×1 matrix.
    void backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool tracking() const noexcept { return tracking_; }
    void clear();

private:
    enum class Op : std::uint8_t {
        Leaf,
        MatMul,
        MatMulNT,
        Add,
        Hadamard,
        Scale,
        Relu,
        RowSoftmax,
        MeanPoolRows,
        MseLoss,
        Sum,
        Reshape,
    };

    struct Node {
        Op op = Op::Leaf;
        std::uint32_t lhs = 0;
        std::uint32_t rhs = 0;
        double scalar = 0.0;
        bool requires_grad = false;
        const Matrix* ref = nullptr; // referenced leaf value
        Matrix owned;
        Matrix grad;

        const Matrix& value() const { return ref ? *ref : owned; }
    };

    Var push(Op op, Matrix value, std::uint32_t lhs, std::uint32_t rhs, double scalar = 0.0);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
    bool tracking_;
};

} // namespace spnas
