#include "labourflow/flow_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <utility>

#include "labourflow/io_util.hpp"

namespace labourflow::graph {

namespace {

void check_finite_weight(double w) {
    if (!std::isfinite(w) || w < 0.0) {
        throw Error("edge weight must be finite and non-negative");
    }
}

}  // namespace

FlowGraph::FlowGraph(QuarterId quarter, std::vector<CityId> nodes)
    : FlowGraph(quarter, std::move(nodes), {}) {}

FlowGraph::FlowGraph(QuarterId quarter, std::vector<CityId> nodes, std::vector<double> weights)
    : quarter_(quarter), nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (nodes_.empty()) throw Error("flow graph needs at least one node");
    if (!std::is_sorted(nodes_.begin(), nodes_.end()) ||
        std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end()) {
        throw Error("flow graph nodes must be sorted and unique");
    }
    const std::size_t n = nodes_.size();
    if (weights_.empty()) {
        weights_.assign(n * n, 0.0);
    } else if (weights_.size() != n * n) {
        throw Error("weight matrix size does not match node count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) check_finite_weight(weight(i, j));
        if (weight(i, i) != 0.0) {
            throw Error("flow graph diagonal must be zero (" + nodes_[i] + ")");
        }
    }
}

FlowGraph FlowGraph::build(std::span<const ingest::FlowIntentRecord> records,
                           const geo::Registry& registry, QuarterId quarter) {
    FlowGraph g(quarter, registry.city_ids());
    for (const auto& r : records) {
        if (r.quarter != quarter) {
            throw Error("record quarter " + r.quarter.str() + " does not match graph quarter " +
                        quarter.str());
        }
        g.add_weight(g.index_of(r.origin), g.index_of(r.destination), 1.0);
    }
    return g;
}

std::size_t FlowGraph::index_of(const CityId& id) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    if (it == nodes_.end() || *it != id) throw Error("unknown graph node '" + id + "'");
    return static_cast<std::size_t>(it - nodes_.begin());
}

void FlowGraph::set_weight(std::size_t i, std::size_t j, double w) {
    check_finite_weight(w);
    if (i == j && w != 0.0) throw Error("flow graph diagonal must be zero");
    weights_[i * nodes_.size() + j] = w;
}

void FlowGraph::add_weight(std::size_t i, std::size_t j, double w) {
    set_weight(i, j, weight(i, j) + w);
}

double FlowGraph::total_weight() const {
    return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

DegreeMetrics degree_metrics(const FlowGraph& g) {
    const std::size_t n = g.size();
    DegreeMetrics m;
    m.inflow.assign(n, 0.0);
    m.outflow.assign(n, 0.0);
    m.net_inflow.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = g.weight(i, j);
            m.outflow[i] += w;
            m.inflow[j] += w;
        }
    }
    for (std::size_t i = 0; i < n; ++i) m.net_inflow[i] = m.inflow[i] - m.outflow[i];
    return m;
}

HitsResult hits(const FlowGraph& g, HitsOptions opt) {
    if (!(opt.tol > 0.0)) throw Error("hits tolerance must be positive");
    if (opt.max_iter < 1) throw Error("hits max_iter must be at least 1");
    const std::size_t n = g.size();
    HitsResult res;

    if (g.total_weight() == 0.0) {
        res.authority.assign(n, 1.0 / static_cast<double>(n));
        res.hub = res.authority;
        res.converged = true;
        res.degenerate = true;
        return res;
    }

    // Row-normalized transition matrix; rows without outflow stay zero.
    std::vector<double> p(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += g.weight(i, j);
        if (row > 0.0) {
            for (std::size_t j = 0; j < n; ++j) p[i * n + j] = g.weight(i, j) / row;
        }
    }

    const auto normalize_l1 = [](std::vector<double>& v) {
        const double sum = std::accumulate(v.begin(), v.end(), 0.0);
        if (sum <= 0.0) throw Error("hits normalization degenerated to zero");
        for (double& x : v) x /= sum;
    };

    std::vector<double> a(n, 1.0 / static_cast<double>(n));
    std::vector<double> h(n, 1.0 / static_cast<double>(n));
    std::vector<double> new_a(n), new_h(n);
    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        // A <- normalize(P^T H), then H <- normalize(P A) with the fresh A.
        std::fill(new_a.begin(), new_a.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double hi = h[i];
            if (hi == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) new_a[j] += p[i * n + j] * hi;
        }
        normalize_l1(new_a);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += p[i * n + j] * new_a[j];
            new_h[i] = sum;
        }
        normalize_l1(new_h);

        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            delta = std::max(delta, std::abs(new_a[i] - a[i]));
            delta = std::max(delta, std::abs(new_h[i] - h[i]));
        }
        a = new_a;
        h = new_h;
        res.iterations = iter;
        if (delta < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.authority = std::move(a);
    res.hub = std::move(h);
    return res;
}

std::vector<CityMetrics> city_metrics(const FlowGraph& g, HitsOptions opt) {
    const DegreeMetrics deg = degree_metrics(g);
    const HitsResult hr = hits(g, opt);
    std::vector<CityMetrics> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        CityMetrics& m = out[i];
        m.city_id = g.nodes()[i];
        m.inflow = deg.inflow[i];
        m.outflow = deg.outflow[i];
        m.net_inflow = deg.net_inflow[i];
        m.authority = hr.authority[i];
        m.hub = hr.hub[i];
        m.blackhole = m.net_inflow > 0.0;
        m.volcano = m.net_inflow < 0.0;
    }
    return out;
}

RankedCities detect_blackholes_volcanoes(std::span<const CityMetrics> metrics,
                                         std::size_t top_k) {
    std::vector<const CityMetrics*> holes, volcs;
    for (const CityMetrics& m : metrics) {
        if (m.net_inflow > 0.0) holes.push_back(&m);
        if (m.net_inflow < 0.0) volcs.push_back(&m);
    }
    std::sort(holes.begin(), holes.end(), [](const CityMetrics* a, const CityMetrics* b) {
        if (a->net_inflow != b->net_inflow) return a->net_inflow > b->net_inflow;
        return a->city_id < b->city_id;
    });
    std::sort(volcs.begin(), volcs.end(), [](const CityMetrics* a, const CityMetrics* b) {
        if (a->net_inflow != b->net_inflow) return a->net_inflow < b->net_inflow;
        return a->city_id < b->city_id;
    });
    RankedCities out;
    for (const auto* m : holes) {
        if (top_k != 0 && out.blackholes.size() == top_k) break;
        out.blackholes.push_back(m->city_id);
    }
    for (const auto* m : volcs) {
        if (top_k != 0 && out.volcanoes.size() == top_k) break;
        out.volcanoes.push_back(m->city_id);
    }
    return out;
}

double increase_ratio(double metric_t1, double metric_t2) {
    if (!(metric_t1 > 0.0)) {
        throw Error("increase ratio undefined for non-positive baseline " +
                    io::format_double(metric_t1));
    }
    return (metric_t2 - metric_t1) / metric_t1;
}

std::string format_graphs(std::span<const FlowGraph> graphs) {
    std::vector<const FlowGraph*> order;
    for (const FlowGraph& g : graphs) order.push_back(&g);
    std::sort(order.begin(), order.end(),
              [](const FlowGraph* a, const FlowGraph* b) { return a->quarter() < b->quarter(); });
    std::string out;
    for (const FlowGraph* g : order) {
        const std::string q = g->quarter().str();
        for (std::size_t i = 0; i < g->size(); ++i) {
            for (std::size_t j = 0; j < g->size(); ++j) {
                const double w = g->weight(i, j);
                if (w == 0.0) continue;
                out += q;
                out += '\t';
                out += g->nodes()[i];
                out += '\t';
                out += g->nodes()[j];
                out += '\t';
                out += io::format_double(w);
                out += '\n';
            }
        }
    }
    return out;
}

std::vector<FlowGraph> load_graphs(const std::filesystem::path& path,
                                   const geo::Registry& registry) {
    std::map<QuarterId, FlowGraph> by_quarter;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        const auto fields = io::split(line, '\t');
        if (fields.size() != 4) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected 4 tab-separated fields");
        }
        QuarterId q;
        try {
            q = QuarterId::parse(std::string(fields[0]));
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        auto it = by_quarter.find(q);
        if (it == by_quarter.end()) {
            it = by_quarter.emplace(q, FlowGraph(q, registry.city_ids())).first;
        }
        FlowGraph& g = it->second;
        const auto w = io::parse_double(fields[3]);
        if (!w) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": bad edge weight");
        }
        g.add_weight(g.index_of(std::string(fields[1])), g.index_of(std::string(fields[2])), *w);
    });
    std::vector<FlowGraph> out;
    out.reserve(by_quarter.size());
    for (auto& [q, g] : by_quarter) out.push_back(std::move(g));
    return out;
}

std::string format_metrics(QuarterId quarter, std::span<const CityMetrics> metrics) {
    std::string out;
    const std::string q = quarter.str();
    for (const CityMetrics& m : metrics) {
        out += q;
        out += '\t';
        out += m.city_id;
        out += '\t';
        out += io::format_double(m.inflow);
        out += '\t';
        out += io::format_double(m.outflow);
        out += '\t';
        out += io::format_double(m.net_inflow);
        out += '\t';
        out += io::format_double(m.authority);
        out += '\t';
        out += io::format_double(m.hub);
        out += '\t';
        out += m.blackhole ? '1' : '0';
        out += '\t';
        out += m.volcano ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace labourflow::graph
