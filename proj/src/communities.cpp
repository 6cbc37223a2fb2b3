#include "labourflow/communities.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <utility>

#include "labourflow/io_util.hpp"
#include "labourflow/rng.hpp"

namespace labourflow::community {

namespace {

// A move must beat staying put by more than this to count as an improvement;
// keeps borderline-zero gains from cycling forever.
constexpr double kMoveEps = 1e-12;
constexpr double kLevelEps = 1e-9;

std::vector<double> symmetrize(const graph::FlowGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> s(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            s[i * n + j] = g.weight(i, j) + g.weight(j, i);
        }
    }
    return s;
}

// Undirected weighted graph in adjacency-list form; self-loops allowed
// (they appear once aggregation folds a community into a super-node).
struct Level {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;
    std::vector<double> self_loop;  // S[i][i]
    std::vector<double> degree;     // k_i = sum_j S[i][j], self-loop counted once
    double two_m = 0.0;             // sum_ij S[i][j]
};

Level level_from_matrix(const std::vector<double>& s, std::size_t n) {
    Level lvl;
    lvl.n = n;
    lvl.adj.resize(n);
    lvl.self_loop.assign(n, 0.0);
    lvl.degree.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = s[i * n + j];
            if (w == 0.0) continue;
            if (i == j) {
                lvl.self_loop[i] = w;
            } else {
                lvl.adj[i].emplace_back(j, w);
            }
            lvl.degree[i] += w;
            lvl.two_m += w;
        }
    }
    return lvl;
}

// One local-moving phase. Returns the community label per node (labels are
// node indices, not dense) and whether any node moved.
bool local_moving(const Level& lvl, double gamma, Rng& rng, std::vector<std::size_t>& label) {
    const std::size_t n = lvl.n;
    label.resize(n);
    std::iota(label.begin(), label.end(), std::size_t{0});
    std::vector<double> tot = lvl.degree;  // sum of degrees per community label

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    const double m = lvl.two_m / 2.0;
    std::vector<double> link_to(n, 0.0);  // k_{i,c} scratch, indexed by label
    bool any_move = false;
    bool moved = true;
    while (moved) {
        moved = false;
        for (const std::size_t i : order) {
            const std::size_t old_c = label[i];
            // Gather weights from i into each neighbouring community.
            std::vector<std::size_t> cand;
            for (const auto& [j, w] : lvl.adj[i]) {
                const std::size_t c = label[j];
                if (link_to[c] == 0.0) cand.push_back(c);
                link_to[c] += w;
            }
            tot[old_c] -= lvl.degree[i];

            const auto gain_of = [&](std::size_t c) {
                return link_to[c] / m - gamma * tot[c] * lvl.degree[i] / (2.0 * m * m);
            };
            std::sort(cand.begin(), cand.end());
            std::size_t best_c = old_c;
            double best_gain = gain_of(old_c) + kMoveEps;
            for (const std::size_t c : cand) {
                if (c == old_c) continue;
                const double gain = gain_of(c);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_c = c;
                }
            }
            tot[best_c] += lvl.degree[i];
            label[i] = best_c;
            if (best_c != old_c) {
                moved = true;
                any_move = true;
            }
            for (const std::size_t c : cand) link_to[c] = 0.0;
            link_to[old_c] = 0.0;
        }
    }
    return any_move;
}

// Renumber labels densely by ascending label value.
std::vector<std::size_t> densify(std::vector<std::size_t>& label) {
    std::vector<std::size_t> distinct(label.begin(), label.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::unordered_map<std::size_t, std::size_t> remap;
    remap.reserve(distinct.size());
    for (std::size_t k = 0; k < distinct.size(); ++k) remap[distinct[k]] = k;
    for (std::size_t& l : label) l = remap[l];
    return distinct;
}

std::vector<double> aggregate(const Level& lvl, const std::vector<std::size_t>& label,
                              std::size_t n_comm) {
    std::vector<double> s(n_comm * n_comm, 0.0);
    for (std::size_t i = 0; i < lvl.n; ++i) {
        s[label[i] * n_comm + label[i]] += lvl.self_loop[i];
        for (const auto& [j, w] : lvl.adj[i]) {
            s[label[i] * n_comm + label[j]] += w;
        }
    }
    return s;
}

}  // namespace

std::int32_t Partition::n_communities() const {
    std::int32_t max_id = -1;
    for (const std::int32_t c : assignment) max_id = std::max(max_id, c);
    return max_id + 1;
}

double modularity(const graph::FlowGraph& g, std::span<const std::int32_t> assignment,
                  double resolution) {
    if (!(resolution > 0.0)) throw Error("resolution must be positive");
    if (assignment.size() != g.size()) {
        throw Error("partition does not cover the graph node set");
    }
    const std::size_t n = g.size();
    const std::vector<double> s = symmetrize(g);
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += s[i * n + j];
        two_m += k[i];
    }
    if (two_m == 0.0) throw Error("modularity undefined on a zero-edge graph");
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (assignment[i] != assignment[j]) continue;
            q += s[i * n + j] - resolution * k[i] * k[j] / two_m;
        }
    }
    return q / two_m;
}

Partition louvain(const graph::FlowGraph& g, double resolution, std::uint64_t seed) {
    if (!(resolution > 0.0)) throw Error("resolution must be positive");
    if (g.total_weight() == 0.0) throw Error("louvain requires at least one edge");

    const std::size_t n = g.size();
    Rng rng(seed);

    // node -> community index in the current level's graph
    std::vector<std::size_t> node_comm(n);
    std::iota(node_comm.begin(), node_comm.end(), std::size_t{0});
    std::vector<std::int32_t> best_assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) best_assign[i] = static_cast<std::int32_t>(i);
    double best_q = modularity(g, best_assign, resolution);

    std::vector<double> s = symmetrize(g);
    std::size_t level_n = n;
    while (true) {
        const Level lvl = level_from_matrix(s, level_n);
        std::vector<std::size_t> label;
        const bool any_move = local_moving(lvl, resolution, rng, label);
        if (!any_move) break;
        densify(label);
        const std::size_t n_comm = 1 + *std::max_element(label.begin(), label.end());
        for (std::size_t i = 0; i < n; ++i) node_comm[i] = label[node_comm[i]];

        std::vector<std::int32_t> assign(n);
        for (std::size_t i = 0; i < n; ++i) assign[i] = static_cast<std::int32_t>(node_comm[i]);
        const double q = modularity(g, assign, resolution);
        const bool improved = q - best_q >= kLevelEps;
        if (q > best_q) {
            best_q = q;
            best_assign = std::move(assign);
        }
        if (!improved || n_comm == level_n) break;
        s = aggregate(lvl, label, n_comm);
        level_n = n_comm;
    }

    // Dense relabel in node order so equal partitions have equal ids.
    std::unordered_map<std::int32_t, std::int32_t> remap;
    std::int32_t next_id = 0;
    Partition p;
    p.nodes = g.nodes();
    p.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [it, inserted] = remap.try_emplace(best_assign[i], next_id);
        if (inserted) ++next_id;
        p.assignment[i] = it->second;
    }
    p.resolution = resolution;
    p.modularity = modularity(g, p.assignment, resolution);
    return p;
}

std::string format_partition(const Partition& p) {
    std::string out = "# resolution=";
    out += io::format_double(p.resolution);
    out += "\tmodularity=";
    out += io::format_double(p.modularity);
    out += '\n';
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        out += p.nodes[i];
        out += '\t';
        out += std::to_string(p.assignment[i]);
        out += '\n';
    }
    return out;
}

}  // namespace labourflow::community
