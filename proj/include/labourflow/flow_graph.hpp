#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "labourflow/core.hpp"
#include "labourflow/geo.hpp"
#include "labourflow/ingest.hpp"

namespace labourflow::graph {

// Quarterly origin-destination graph over the prefecture-level cities of a
// registry. Dense row-major weights; W[i][j] counts intents origin i -> j.
class FlowGraph {
public:
    // All-zero graph over the given node list (sorted unique ids required).
    FlowGraph(QuarterId quarter, std::vector<CityId> nodes);
    FlowGraph(QuarterId quarter, std::vector<CityId> nodes, std::vector<double> weights);

    // Counts one quarter's intent records into a graph whose nodes are all
    // prefecture-level registry cities; isolated cities keep zero rows and
    // columns. Records from another quarter or with unknown ids are rejected.
    static FlowGraph build(std::span<const ingest::FlowIntentRecord> records,
                           const geo::Registry& registry, QuarterId quarter);

    QuarterId quarter() const { return quarter_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<CityId>& nodes() const { return nodes_; }
    std::size_t index_of(const CityId& id) const;  // throws on unknown id

    double weight(std::size_t i, std::size_t j) const { return weights_[i * nodes_.size() + j]; }
    void set_weight(std::size_t i, std::size_t j, double w);
    void add_weight(std::size_t i, std::size_t j, double w);
    const std::vector<double>& weights() const { return weights_; }
    double total_weight() const;

private:
    QuarterId quarter_;
    std::vector<CityId> nodes_;
    std::vector<double> weights_;  // row-major n*n
};

struct DegreeMetrics {
    std::vector<double> inflow;    // column sums, aligned with graph nodes
    std::vector<double> outflow;   // row sums
    std::vector<double> net_inflow;
};

DegreeMetrics degree_metrics(const FlowGraph& g);

struct HitsOptions {
    double tol = 1e-10;
    int max_iter = 1000;
};

struct HitsResult {
    std::vector<double> authority;  // L1-normalized, aligned with graph nodes
    std::vector<double> hub;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;  // all-zero graph: uniform scores
};

HitsResult hits(const FlowGraph& g, HitsOptions opt = {});

struct CityMetrics {
    CityId city_id;
    double inflow = 0.0;
    double outflow = 0.0;
    double net_inflow = 0.0;
    double authority = 0.0;
    double hub = 0.0;
    bool blackhole = false;  // net_inflow > 0
    bool volcano = false;    // net_inflow < 0
};

std::vector<CityMetrics> city_metrics(const FlowGraph& g, HitsOptions opt = {});

struct RankedCities {
    std::vector<CityId> blackholes;  // net_inflow desc, ties by city_id asc
    std::vector<CityId> volcanoes;   // net_inflow asc, ties by city_id asc
};

// top_k == 0 keeps every qualifying city.
RankedCities detect_blackholes_volcanoes(std::span<const CityMetrics> metrics,
                                         std::size_t top_k);

// (metric_t2 - metric_t1) / metric_t1; requires metric_t1 > 0.
double increase_ratio(double metric_t1, double metric_t2);

// Edge-list checkpoint: one "quarter origin destination weight" row per
// non-zero edge, tab-separated, quarters ascending, edges in node order.
std::string format_graphs(std::span<const FlowGraph> graphs);
std::vector<FlowGraph> load_graphs(const std::filesystem::path& path,
                                   const geo::Registry& registry);

// Metrics report rows: quarter, city_id, inflow, outflow, net_inflow,
// authority, hub, blackhole, volcano (booleans as 0/1).
std::string format_metrics(QuarterId quarter, std::span<const CityMetrics> metrics);

}  // namespace labourflow::graph
