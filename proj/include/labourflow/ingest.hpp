#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "labourflow/core.hpp"
#include "labourflow/geo.hpp"
#include "labourflow/matcher.hpp"

namespace labourflow::ingest {

struct QueryRecord {
    std::int64_t timestamp = 0;  // epoch seconds
    geo::LatLon location;
    std::string query_text;
    std::optional<std::string> clicked_title;
};

struct JobPostingRecord {
    std::int64_t publish_timestamp = 0;
    CityId working_city;
    std::string title;
    std::string description;
};

struct FlowIntentRecord {
    CityId origin;
    CityId destination;
    QuarterId quarter;
    friend bool operator==(const FlowIntentRecord&, const FlowIntentRecord&) = default;
    friend auto operator<=>(const FlowIntentRecord&, const FlowIntentRecord&) = default;
};

// The two job-search filter words from the query-filtering step; any
// configured list replaces them.
const std::vector<std::string>& default_job_keywords();

// Calendar quarter of an epoch timestamp in CST. Rejects timestamps whose
// CST instant falls before 1970.
QuarterId quarter_of(std::int64_t timestamp);

// Calendar day index (days since 1970-01-01, CST) used as the dedup window.
std::int64_t cst_day_of(std::int64_t timestamp);

// Keeps a record iff any keyword occurs as a substring of the query text or
// the clicked title. Throws if the keyword list is empty.
std::vector<QueryRecord> filter_job_queries(std::span<const QueryRecord> records,
                                            std::span<const std::string> keywords);

// Collapses exact duplicates on (CST day, query_text, clicked_title,
// located origin city), keeping the first occurrence in input order.
std::vector<QueryRecord> dedup(std::span<const QueryRecord> records,
                               const geo::Registry& registry);

struct ExtractDiagnostics {
    std::uint64_t dropped_no_origin = 0;
    std::uint64_t dropped_no_destination = 0;
    std::uint64_t dropped_same_city = 0;

    ExtractDiagnostics& operator+=(const ExtractDiagnostics& o) {
        dropped_no_origin += o.dropped_no_origin;
        dropped_no_destination += o.dropped_no_destination;
        dropped_same_city += o.dropped_same_city;
        return *this;
    }
};

// Runs the per-record resolution pipeline: origin from coordinates,
// destination from query text (clicked title as fallback), same-city drop,
// quarter from the timestamp. Input should already be filtered and deduped.
std::vector<FlowIntentRecord> extract_flow_intents(std::span<const QueryRecord> records,
                                                   const geo::Registry& registry,
                                                   const match::PlaceDictionary& dict,
                                                   ExtractDiagnostics* diag = nullptr);

struct ParseDiagnostics {
    std::uint64_t malformed_lines = 0;
};

// Tab-separated query log: timestamp, lat, lon, query_text, clicked_title
// (clicked_title may be empty). Malformed lines are counted and skipped.
std::vector<QueryRecord> read_query_log(const std::filesystem::path& path,
                                        ParseDiagnostics* diag = nullptr);
std::string format_query_log(std::span<const QueryRecord> records);

// Tab-separated postings: publish_timestamp, working_city, title, description.
std::vector<JobPostingRecord> read_postings(const std::filesystem::path& path,
                                            ParseDiagnostics* diag = nullptr);
std::string format_postings(std::span<const JobPostingRecord> records);

// Flow-intent checkpoint: origin, destination, quarter. Parse errors are
// fatal here — the file is produced by the pipeline itself.
std::vector<FlowIntentRecord> read_flow_intents(const std::filesystem::path& path);
std::string format_flow_intents(std::span<const FlowIntentRecord> records);

}  // namespace labourflow::ingest
