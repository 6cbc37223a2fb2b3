#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "labourflow/core.hpp"
#include "labourflow/geo.hpp"
#include "labourflow/ingest.hpp"

namespace labourflow::demand {

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

// Default tokenizer: splits on runs of ASCII whitespace.
std::vector<std::string> whitespace_tokenize(std::string_view text);

struct KeywordDictionary {
    std::vector<std::string> keywords;       // index = vector dimension
    std::vector<std::uint64_t> frequencies;  // corpus frequency per keyword
    std::uint64_t min_freq = 1;
    std::size_t top_drop = 0;

    std::size_t size() const { return keywords.size(); }
    // Dimension of a keyword, or npos when absent (index built lazily).
    std::size_t index_of(std::string_view token) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    mutable std::map<std::string, std::size_t, std::less<>> index_;
};

// Tokenize -> drop single-character tokens -> drop freq < min_freq -> drop
// the top_drop most frequent -> drop stoplist entries; survivors ordered by
// frequency descending, then lexicographic. Throws if nothing survives.
KeywordDictionary build_keyword_dictionary(std::span<const std::string> titles,
                                           const Tokenizer& tokenizer, std::uint64_t min_freq,
                                           std::size_t top_drop,
                                           std::span<const std::string> stoplist);

// Sparse normalized keyword-frequency vector; empty when the title has no
// dictionary hits (un-vectorizable).
struct TitleVector {
    std::vector<std::pair<std::uint32_t, double>> entries;  // (dim, value), dim ascending
    bool vectorizable() const { return !entries.empty(); }
    friend bool operator==(const TitleVector&, const TitleVector&) = default;
};

TitleVector vectorize(std::string_view title, const KeywordDictionary& dict,
                      const Tokenizer& tokenizer);

struct ClusterModel {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<std::vector<double>> centroids;   // k rows of length dim
    std::map<std::int32_t, std::string> labels;   // cluster id -> category name
};

struct KMeansOptions {
    int max_iter = 200;
    double tol = 1e-9;  // max centroid L2 shift
};

struct KMeansResult {
    ClusterModel model;
    std::vector<std::int32_t> assignment;  // per input vector, -1 for un-vectorizable
    std::vector<double> objective;         // WCSS after each assignment step
    int iterations = 0;
    bool converged = false;
};

// Lloyd iterations seeded by scalable over-sampling; squared Euclidean
// distance with ties to the lowest centroid index; empty clusters re-seeded
// from the farthest point. Un-vectorizable inputs are ignored during the
// fit and come back with assignment -1.
KMeansResult kmeans_fit(std::span<const TitleVector> vectors, std::size_t k,
                        std::uint64_t seed, KMeansOptions opt = {});

// Name of an absent category.
inline constexpr std::string_view kUnclassified = "unclassified";

std::string assign_category(std::string_view title, const ClusterModel& model,
                            const KeywordDictionary& dict, const Tokenizer& tokenizer);

enum class Grouping { tier, city, region };
Grouping grouping_from_string(std::string_view s);
std::string_view to_string(Grouping g);

struct DemandSeries {
    Grouping grouping = Grouping::city;
    // (quarter, group key, category) -> posting count
    std::map<std::tuple<QuarterId, std::string, std::string>, std::uint64_t> cells;
    std::uint64_t skipped_unknown_city = 0;
};

DemandSeries demand_series(std::span<const ingest::JobPostingRecord> postings,
                           const ClusterModel& model, const KeywordDictionary& dict,
                           const Tokenizer& tokenizer, const geo::Registry& registry,
                           Grouping grouping);

// Fractions per category within one (quarter, group); sums to 1.
std::map<std::string, double> category_share(const DemandSeries& series, QuarterId quarter,
                                             const std::string& group);

// Dictionary file: keyword<TAB>frequency per line, dictionary order.
std::string format_dictionary(const KeywordDictionary& dict);
KeywordDictionary load_dictionary(const std::filesystem::path& path);

// Model file: JSON with k, dim, centroids, labels, and each cluster's
// top-10 keywords (informational, for manual labelling).
std::string format_model(const ClusterModel& model, const KeywordDictionary& dict);
ClusterModel load_model(const std::filesystem::path& path);

// Series file: quarter, group, category, count rows (tab-separated).
std::string format_series(const DemandSeries& series);
DemandSeries load_series(const std::filesystem::path& path, Grouping grouping);

}  // namespace labourflow::demand
