#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labourflow/core.hpp"

namespace labourflow::pipeline {

struct PipelineConfig {
    // inputs
    std::filesystem::path registry_path;
    std::filesystem::path query_log_path;
    std::filesystem::path postings_path;   // optional; required by the demand stage
    std::filesystem::path indicator_path;  // optional; required by the correlate stage
    std::filesystem::path output_dir;
    // ingest
    std::vector<std::string> keywords;  // empty = built-in job keywords
    bool dedup = true;
    std::vector<QuarterId> quarters;  // empty = every quarter present in the data
    // HITS
    double hits_tol = 1e-10;
    int hits_max_iter = 1000;
    // Louvain
    std::vector<double> resolutions = {1.0};
    std::uint64_t louvain_seed = 42;
    // keyword dictionary
    std::uint64_t dict_min_freq = 1000;
    std::size_t dict_top_drop = 50;
    std::filesystem::path stoplist_path;  // optional
    // KMeans
    std::size_t kmeans_k = 4;
    std::uint64_t kmeans_seed = 42;
    // demand series
    std::string grouping = "tier";
    std::filesystem::path category_labels_path;  // optional cluster->name map
    // report
    std::string report_format = "csv";  // csv | json
    std::vector<std::pair<QuarterId, QuarterId>> ratio_pairs;
    int workers = 1;

    // Line-oriented key=value file; '#' lines are comments; relative paths
    // resolve against the config file's directory.
    static PipelineConfig load(const std::filesystem::path& path);
};

// Empty iff run() would pass its precondition checks.
std::vector<std::string> validate(const PipelineConfig& config);

enum class Stage { ingest, graph, metrics, communities, demand, correlate, report };

std::optional<Stage> stage_from_string(std::string_view s);
std::string_view to_string(Stage stage);
std::vector<Stage> all_stages();

// Parses a comma-separated stage list; throws Error on unknown names.
// Result is deduplicated and in canonical execution order.
std::vector<Stage> parse_stages(std::string_view list);

// Executes the stages in canonical order. Each stage reads its checkpoint
// inputs from output_dir, writes its outputs atomically, and logs record
// counts to `log`. Throws Error with an actionable message when a required
// checkpoint is missing.
void run(const PipelineConfig& config, std::span<const Stage> stages, std::ostream& log);

}  // namespace labourflow::pipeline
