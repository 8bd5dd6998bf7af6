#pragma once

// Cell DAG → (adjacency, one-hot features) encoding.
//
// Benchmarks label operations on edges. The predictor wants operations on
// nodes, so every labeled edge (u, v, op) becomes its own node carrying
// one-hot(op) wired u → x → v. Data nodes stay as pass-through nodes: the
// first is the INPUT token, the last the OUTPUT token, and internal ones
// reuse the vocabulary's skip/identity entry when there is one.

#include "spnas/matrix.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace spnas {

struct CellEdge {
    std::size_t src = 0;
    std::size_t dst = 0;
    std::string op;

    friend bool operator==(const CellEdge&, const CellEdge&) = default;
};

struct CellSpec {
    std::size_t num_nodes = 0;
    std::vector<CellEdge> edges;
    std::vector<std::string> op_vocabulary;

    friend bool operator==(const CellSpec&, const CellSpec&) = default;
};

/// Column assignment of the one-hot feature matrix for a vocabulary.
struct FeatureLayout {
    std::size_t input_column = 0;
    std::size_t output_column = 0;
    /// Column used by internal data nodes: the skip entry, or a dedicated
    /// INTERNAL token appended after OUTPUT.
    std::size_t internal_column = 0;
    bool has_internal_token = false;
    std::size_t width = 0;

    static FeatureLayout for_vocabulary(const std::vector<std::string>& vocabulary);
    /// Column of a vocabulary op; throws VocabularyError if unknown.
    std::size_t op_column(const std::vector<std::string>& vocabulary, const std::string& op) const;
};

struct CellGraph {
    Matrix adjacency; // n×n, adjacency(u, v) = 1 for u → v
    Matrix features;  // n×d one-hot rows (padding rows are all zero)
    std::size_t node_count = 0; // real nodes; rows past this are padding

    std::size_t rows() const noexcept { return adjacency.rows(); }
    std::size_t feature_dim() const noexcept { return features.cols(); }

    friend bool operator==(const CellGraph&, const CellGraph&) = default;
};

/// Number of nodes after op-node expansion.
inline std::size_t expanded_node_count(const CellSpec& spec) {
    return spec.num_nodes + spec.edges.size();
}

/// Encode a cell. `pad_to` (if larger than the expanded node count) appends
/// isolated all-zero rows so batches over one search space are rectangular.
CellGraph encode_cell(const CellSpec& spec, std::size_t pad_to = 0);

struct DagCheck {
    bool acyclic = false;
    std::vector<std::size_t> topological_order; // filled when acyclic
    std::vector<std::size_t> cycle;             // node sequence, first repeated implicitly
};

/// Kahn's algorithm with smallest-index tie breaking. Non-square input raises
/// DimensionError.
DagCheck validate_dag(const Matrix& adjacency);

} // namespace spnas
