#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "labourflow/core.hpp"
#include "labourflow/geo.hpp"

namespace labourflow::synth {

struct BlackholePlan {
    std::size_t city_ordinal = 0;  // index into the generated city list
    int surplus = 0;               // target net inflow, per quarter
};

// Everything the generator needs to build a corpus with known answers.
struct Scenario {
    std::uint64_t seed = 1;
    std::vector<std::pair<geo::Tier, int>> cities_per_tier;
    int n_provinces = 4;
    int n_communities = 4;
    std::vector<BlackholePlan> blackholes;
    int flow_intensity = 3;  // baseline records per ordered OD pair per quarter
    int intra_factor = 5;    // intra-community multiplier
    std::vector<QuarterId> quarters;
    std::vector<std::string> categories;
    // tier name -> category -> posting share (sums to 1 per tier)
    std::map<std::string, std::map<std::string, double>> demand_mixture;
    int postings_per_city_quarter = 120;
    double nonjob_noise = 0.20;         // fraction of extra non-job queries
    double province_only_noise = 0.05;  // fraction mentioning only a province

    int total_cities() const;
    void validate() const;  // throws Error on the first problem found

    static Scenario default_scenario();
    static Scenario from_json_file(const std::filesystem::path& path);
};

// City id of the k-th generated city; stable, so scenarios can reference
// cities by ordinal and tests by id.
CityId city_id_of(std::size_t ordinal);

struct GeneratedFiles {
    std::filesystem::path registry;
    std::filesystem::path queries;
    std::filesystem::path postings;
    std::filesystem::path indicators;
    std::filesystem::path ground_truth;
};

// Writes registry.jsonl, queries.tsv, postings.tsv, indicators.tsv and
// ground_truth.jsonl under out_dir. Deterministic: the same scenario yields
// byte-identical files.
GeneratedFiles generate(const Scenario& scenario, const std::filesystem::path& out_dir);

// What the generator knows to be true about its own output.
struct GroundTruth {
    std::map<CityId, int> partition;    // prefecture city -> community
    std::map<CityId, int> blackholes;   // city -> planted surplus
    // (quarter, city) -> exact (inflow, outflow) of resolvable flow records
    std::map<std::pair<QuarterId, CityId>, std::pair<double, double>> quarter_flow;
    std::map<std::pair<std::string, std::string>, double> mixture;  // (tier, category)
    std::uint64_t total_queries = 0;
    std::uint64_t total_postings = 0;

    static GroundTruth load(const std::filesystem::path& path);
};

}  // namespace labourflow::synth
