#include "gwrnet/graph.hpp"

#include <tuple>

#include "gwrnet/linalg.hpp"

namespace gwrnet {

std::size_t AgedGraph::edge_count() const {
    std::size_t twice = 0;
    for (const auto& n : adjacency_) twice += n.size();
    return twice / 2;
}

std::size_t AgedGraph::add_node() {
    adjacency_.emplace_back();
    return adjacency_.size() - 1;
}

void AgedGraph::remove_node(std::size_t id) {
    require(id < adjacency_.size(), "AgedGraph: node id out of range");
    for (const auto& [other, age] : adjacency_[id]) adjacency_[other].erase(id);
    adjacency_.erase(adjacency_.begin() + static_cast<std::ptrdiff_t>(id));
    for (auto& neighbors : adjacency_) {
        Neighbors shifted;
        for (const auto& [other, age] : neighbors) shifted.emplace(other > id ? other - 1 : other, age);
        neighbors = std::move(shifted);
    }
}

void AgedGraph::connect(std::size_t a, std::size_t b) {
    require(a != b, "AgedGraph: self-edges are not allowed");
    require(a < adjacency_.size() && b < adjacency_.size(), "AgedGraph: node id out of range");
    adjacency_[a][b] = 0;
    adjacency_[b][a] = 0;
}

void AgedGraph::disconnect(std::size_t a, std::size_t b) {
    adjacency_.at(a).erase(b);
    adjacency_.at(b).erase(a);
}

bool AgedGraph::connected(std::size_t a, std::size_t b) const {
    return adjacency_.at(a).count(b) != 0;
}

int AgedGraph::age(std::size_t a, std::size_t b) const {
    return adjacency_.at(a).at(b);
}

void AgedGraph::age_edges_of(std::size_t id) {
    for (auto& [other, age] : adjacency_.at(id)) {
        ++age;
        adjacency_[other][id] = age;
    }
}

void AgedGraph::prune(int max_age) {
    for (auto& neighbors : adjacency_) {
        for (auto it = neighbors.begin(); it != neighbors.end();) {
            if (it->second > max_age) it = neighbors.erase(it);
            else ++it;
        }
    }
}

std::vector<std::tuple<std::size_t, std::size_t, int>> AgedGraph::edges() const {
    std::vector<std::tuple<std::size_t, std::size_t, int>> out;
    for (std::size_t a = 0; a < adjacency_.size(); ++a) {
        for (const auto& [b, age] : adjacency_[a]) {
            if (a < b) out.emplace_back(a, b, age);
        }
    }
    return out;
}

AgedGraph AgedGraph::from_edges(std::size_t nodes,
                                const std::vector<std::tuple<std::size_t, std::size_t, int>>& edges) {
    AgedGraph g(nodes);
    for (const auto& [a, b, age] : edges) {
        require(a != b && a < nodes && b < nodes, "AgedGraph: invalid edge in edge list");
        require(!g.connected(a, b), "AgedGraph: duplicate edge in edge list");
        g.adjacency_[a][b] = age;
        g.adjacency_[b][a] = age;
    }
    return g;
}

}  // namespace gwrnet
