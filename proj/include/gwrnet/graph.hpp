#pragma once

#include <cstddef>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

namespace gwrnet {

/// Undirected graph over dense node ids 0..n-1 with an integer age per edge.
/// Removing a node shifts every higher id down by one, so ids stay dense and
/// ordered by creation.
class AgedGraph {
public:
    using Neighbors = std::map<std::size_t, int>;  // neighbor id -> edge age

    AgedGraph() = default;
    explicit AgedGraph(std::size_t nodes) : adjacency_(nodes) {}

    std::size_t node_count() const { return adjacency_.size(); }
    std::size_t edge_count() const;

    std::size_t add_node();
    void remove_node(std::size_t id);

    /// Creates the edge, or resets its age when it already exists.
    void connect(std::size_t a, std::size_t b);
    void disconnect(std::size_t a, std::size_t b);
    bool connected(std::size_t a, std::size_t b) const;
    int age(std::size_t a, std::size_t b) const;

    const Neighbors& neighbors(std::size_t id) const { return adjacency_.at(id); }
    std::size_t degree(std::size_t id) const { return adjacency_.at(id).size(); }

    void age_edges_of(std::size_t id);
    /// Drops edges whose age exceeds max_age.
    void prune(int max_age);

    /// All edges as (a, b, age) with a < b, sorted.
    std::vector<std::tuple<std::size_t, std::size_t, int>> edges() const;

    /// Rebuilds from an edge list; used by deserialization.
    static AgedGraph from_edges(std::size_t nodes,
                                const std::vector<std::tuple<std::size_t, std::size_t, int>>& edges);

    bool operator==(const AgedGraph&) const = default;

private:
    std::vector<Neighbors> adjacency_;
};

/// Removes edge-less nodes, highest id first, without dropping below `floor`
/// nodes. `nodes` is kept parallel to the graph. Returns the removed ids in
/// descending order.
template <class NodeVec>
std::vector<std::size_t> remove_isolated(AgedGraph& graph, NodeVec& nodes, std::size_t floor = 2) {
    std::vector<std::size_t> removed;
    for (std::size_t id = graph.node_count(); id-- > 0;) {
        if (graph.node_count() <= floor) break;
        if (graph.degree(id) == 0) {
            graph.remove_node(id);
            nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(id));
            removed.push_back(id);
        }
    }
    return removed;
}

/// Id of `id` after the nodes in `removed` were deleted.
inline std::size_t shifted_id(std::size_t id, const std::vector<std::size_t>& removed) {
    std::size_t shift = 0;
    for (std::size_t r : removed) shift += r < id ? 1 : 0;
    return id - shift;
}

}  // namespace gwrnet
