#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "labourflow/flow_graph.hpp"

namespace labourflow::community {

struct Partition {
    std::vector<CityId> nodes;              // graph node order
    std::vector<std::int32_t> assignment;   // dense cluster ids from 0
    double resolution = 1.0;
    double modularity = 0.0;

    std::int32_t n_communities() const;
};

// Newman modularity at the given resolution on the symmetrized graph
// S = W + W^T (degrees follow k_i = sum_j (W[i][j] + W[j][i])). The
// assignment is aligned with graph node order; ids need not be dense.
double modularity(const graph::FlowGraph& g, std::span<const std::int32_t> assignment,
                  double resolution);

// Two-phase Louvain: seeded-shuffle node visits, moves to the neighbouring
// community with the largest positive gain (ties to the smallest community
// id), then aggregates and repeats until the modularity gain drops below
// 1e-9. The returned modularity is recomputed exactly on the input graph.
Partition louvain(const graph::FlowGraph& g, double resolution, std::uint64_t seed);

// Header line with resolution and achieved modularity, then one
// "city_id cluster_id" row per node (tab-separated).
std::string format_partition(const Partition& p);

}  // namespace labourflow::community
