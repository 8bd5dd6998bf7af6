#include "spnas/graph_encoding.hpp"

#include "spnas/error.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <tuple>

namespace spnas {

namespace {

bool is_identity_op(const std::string& name) {
    return name.find("skip") != std::string::npos || name.find("identity") != std::string::npos;
}

std::vector<std::size_t> find_cycle(const Matrix& adjacency) {
    const std::size_t n = adjacency.rows();
    enum class Mark { White, Grey, Black };
    std::vector<Mark> mark(n, Mark::White);
    std::vector<std::size_t> parent(n, n);

    for (std::size_t root = 0; root < n; ++root) {
        if (mark[root] != Mark::White)
            continue;
        // iterative DFS: (node, next neighbour to try)
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        mark[root] = Mark::Grey;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next == n) {
                mark[u] = Mark::Black;
                stack.pop_back();
                continue;
            }
            const std::size_t v = next++;
            if (adjacency(u, v) == 0.0)
                continue;
            if (mark[v] == Mark::Grey) {
                std::vector<std::size_t> cycle{v};
                for (std::size_t w = u; w != v; w = parent[w])
                    cycle.push_back(w);
                std::reverse(cycle.begin() + 1, cycle.end());
                return cycle;
            }
            if (mark[v] == Mark::White) {
                mark[v] = Mark::Grey;
                parent[v] = u;
                stack.emplace_back(v, 0);
            }
        }
    }
    return {};
}

std::string format_cycle(const std::vector<std::size_t>& cycle) {
    std::string out;
    for (std::size_t v : cycle)
        out += std::to_string(v) + "->";
    out += std::to_string(cycle.front());
    return out;
}

} // namespace

FeatureLayout FeatureLayout::for_vocabulary(const std::vector<std::string>& vocabulary) {
    FeatureLayout layout;
    layout.input_column = 0;
    layout.output_column = vocabulary.size() + 1;
    layout.width = vocabulary.size() + 2;
    auto skip = std::find_if(vocabulary.begin(), vocabulary.end(), is_identity_op);
    if (skip != vocabulary.end()) {
        layout.internal_column = 1 + static_cast<std::size_t>(skip - vocabulary.begin());
    } else {
        layout.has_internal_token = true;
        layout.internal_column = layout.width;
        ++layout.width;
    }
    return layout;
}

std::size_t FeatureLayout::op_column(const std::vector<std::string>& vocabulary,
                                     const std::string& op) const {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), op);
    if (it == vocabulary.end())
        throw VocabularyError("unknown op '" + op + "'");
    return 1 + static_cast<std::size_t>(it - vocabulary.begin());
}

DagCheck validate_dag(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw DimensionError("validate_dag: adjacency must be square, got " +
                             adjacency.shape_string());
    const std::size_t n = adjacency.rows();
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (adjacency(u, v) != 0.0)
                ++indegree[v];

    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0)
            ready.push(v);

    DagCheck check;
    while (!ready.empty()) {
        const std::size_t u = ready.top();
        ready.pop();
        check.topological_order.push_back(u);
        for (std::size_t v = 0; v < n; ++v)
            if (adjacency(u, v) != 0.0 && --indegree[v] == 0)
                ready.push(v);
    }
    check.acyclic = check.topological_order.size() == n;
    if (!check.acyclic) {
        check.topological_order.clear();
        check.cycle = find_cycle(adjacency);
    }
    return check;
}

CellGraph encode_cell(const CellSpec& spec, std::size_t pad_to) {
    if (spec.num_nodes < 2)
        throw EncodingError("cell needs at least an input and an output node");
    const FeatureLayout layout = FeatureLayout::for_vocabulary(spec.op_vocabulary);

    Matrix data_adjacency(spec.num_nodes, spec.num_nodes);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const CellEdge& e : spec.edges) {
        if (e.src >= spec.num_nodes || e.dst >= spec.num_nodes)
            throw EncodingError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                                " references a node outside 0.." +
                                std::to_string(spec.num_nodes - 1));
        if (e.src == e.dst)
            throw EncodingError("self loop at node " + std::to_string(e.src));
        if (!seen.emplace(e.src, e.dst).second)
            throw EncodingError("duplicate edge " + std::to_string(e.src) + "->" +
                                std::to_string(e.dst));
        (void)layout.op_column(spec.op_vocabulary, e.op);
        data_adjacency(e.src, e.dst) = 1.0;
    }
    const DagCheck dag = validate_dag(data_adjacency);
    if (!dag.acyclic) {
        const auto& c = dag.cycle;
        throw EncodingError("cycle " + format_cycle(c) + " (back edge " +
                            std::to_string(c.back()) + "->" + std::to_string(c.front()) + ")");
    }
    for (const CellEdge& e : spec.edges)
        if (e.src > e.dst)
            throw EncodingError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                                " is not in topological index order");

    // (src, kind, dst, op) is a topological key: data node u sorts before
    // every op node leaving u, which all sort before data node u+1.
    struct Slot {
        std::size_t first;
        int kind; // 0 data node, 1 op node
        std::size_t dst;
        std::string op;
        auto key() const { return std::tie(first, kind, dst, op); }
    };
    std::vector<Slot> slots;
    slots.reserve(expanded_node_count(spec));
    for (std::size_t v = 0; v < spec.num_nodes; ++v)
        slots.push_back({v, 0, 0, {}});
    for (const CellEdge& e : spec.edges)
        slots.push_back({e.src, 1, e.dst, e.op});
    std::sort(slots.begin(), slots.end(),
              [](const Slot& a, const Slot& b) { return a.key() < b.key(); });

    const std::size_t n = slots.size();
    const std::size_t rows = std::max(n, pad_to);
    std::vector<std::size_t> data_position(spec.num_nodes);
    for (std::size_t i = 0; i < n; ++i)
        if (slots[i].kind == 0)
            data_position[slots[i].first] = i;

    CellGraph g;
    g.node_count = n;
    g.adjacency = Matrix(rows, rows);
    g.features = Matrix(rows, layout.width);
    for (std::size_t i = 0; i < n; ++i) {
        const Slot& s = slots[i];
        if (s.kind == 0) {
            std::size_t col = layout.internal_column;
            if (s.first == 0)
                col = layout.input_column;
            else if (s.first == spec.num_nodes - 1)
                col = layout.output_column;
            g.features(i, col) = 1.0;
        } else {
            g.features(i, layout.op_column(spec.op_vocabulary, s.op)) = 1.0;
            g.adjacency(data_position[s.first], i) = 1.0;
            g.adjacency(i, data_position[s.dst]) = 1.0;
        }
    }
    return g;
}

} // namespace spnas
