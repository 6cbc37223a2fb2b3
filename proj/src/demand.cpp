#include "labourflow/demand.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>
#include <utility>

#include <json.hpp>

#include "labourflow/io_util.hpp"
#include "labourflow/rng.hpp"

namespace labourflow::demand {

namespace {

std::size_t utf8_codepoints(std::string_view token) {
    std::size_t count = 0;
    for (const char c : token) {
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++count;
    }
    return count;
}

double sparse_norm2(const TitleVector& v) {
    double s = 0.0;
    for (const auto& [dim, val] : v.entries) s += val * val;
    return s;
}

// ||x - c||^2 for sparse x against dense c with precomputed ||c||^2.
double dist2(const TitleVector& x, double x_norm2, const std::vector<double>& c,
             double c_norm2) {
    double cross = 0.0;
    for (const auto& [dim, val] : x.entries) cross += val * c[dim];
    const double d = x_norm2 + c_norm2 - 2.0 * cross;
    return d > 0.0 ? d : 0.0;
}

double dense_norm2(const std::vector<double>& c) {
    double s = 0.0;
    for (const double v : c) s += v * v;
    return s;
}

}  // namespace

std::vector<std::string> whitespace_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const auto is_ws = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) != 0;
    };
    while (i < text.size()) {
        while (i < text.size() && is_ws(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_ws(text[i])) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

std::size_t KeywordDictionary::index_of(std::string_view token) const {
    if (index_.size() != keywords.size()) {
        index_.clear();
        for (std::size_t i = 0; i < keywords.size(); ++i) index_.emplace(keywords[i], i);
    }
    const auto it = index_.find(token);
    return it == index_.end() ? npos : it->second;
}

KeywordDictionary build_keyword_dictionary(std::span<const std::string> titles,
                                           const Tokenizer& tokenizer, std::uint64_t min_freq,
                                           std::size_t top_drop,
                                           std::span<const std::string> stoplist) {
    if (min_freq < 1) throw Error("min_freq must be at least 1");
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const std::string& title : titles) {
        for (std::string& token : tokenizer(title)) {
            if (utf8_codepoints(token) <= 1) continue;
            ++freq[std::move(token)];
        }
    }

    std::vector<std::pair<std::string, std::uint64_t>> survivors;
    survivors.reserve(freq.size());
    for (auto& [token, count] : freq) {
        if (count >= min_freq) survivors.emplace_back(token, count);
    }
    std::sort(survivors.begin(), survivors.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (top_drop >= survivors.size()) {
        throw Error("keyword dictionary is empty after filtering");
    }
    survivors.erase(survivors.begin(), survivors.begin() + static_cast<std::ptrdiff_t>(top_drop));

    const std::set<std::string, std::less<>> stop(stoplist.begin(), stoplist.end());
    KeywordDictionary dict;
    dict.min_freq = min_freq;
    dict.top_drop = top_drop;
    for (auto& [token, count] : survivors) {
        if (stop.contains(token)) continue;
        dict.keywords.push_back(std::move(token));
        dict.frequencies.push_back(count);
    }
    if (dict.keywords.empty()) throw Error("keyword dictionary is empty after filtering");
    return dict;
}

TitleVector vectorize(std::string_view title, const KeywordDictionary& dict,
                      const Tokenizer& tokenizer) {
    std::map<std::uint32_t, double> counts;
    double total = 0.0;
    for (const std::string& token : tokenizer(title)) {
        const std::size_t dim = dict.index_of(token);
        if (dim == KeywordDictionary::npos) continue;
        counts[static_cast<std::uint32_t>(dim)] += 1.0;
        total += 1.0;
    }
    TitleVector v;
    v.entries.reserve(counts.size());
    for (const auto& [dim, count] : counts) v.entries.emplace_back(dim, count / total);
    return v;
}

namespace {

// Scalable over-sampling seeding: a handful of rounds that each add points
// with probability proportional to their distance from the current pool,
// then a weighted greedy reduction of the pool down to k centres.
std::vector<std::vector<double>> seed_centroids(std::span<const TitleVector> pts,
                                                std::span<const double> norms, std::size_t k,
                                                std::size_t dim, Rng& rng) {
    const std::size_t n = pts.size();
    const double oversample = 2.0 * static_cast<double>(k);
    constexpr int kRounds = 5;

    const auto sparse_d2 = [&](std::size_t i, std::size_t j) {
        double cross = 0.0;
        const auto& a = pts[i].entries;
        const auto& b = pts[j].entries;
        std::size_t ai = 0, bi = 0;
        while (ai < a.size() && bi < b.size()) {
            if (a[ai].first < b[bi].first) {
                ++ai;
            } else if (a[ai].first > b[bi].first) {
                ++bi;
            } else {
                cross += a[ai].second * b[bi].second;
                ++ai;
                ++bi;
            }
        }
        const double d = norms[i] + norms[j] - 2.0 * cross;
        return d > 0.0 ? d : 0.0;
    };

    std::vector<std::size_t> pool;
    pool.push_back(rng.uniform_int(n));
    std::vector<double> d2(n);
    const auto refresh_d2 = [&](std::size_t from) {
        for (std::size_t i = 0; i < n; ++i) {
            const double dd = sparse_d2(i, pool[from]);
            if (from == 0 || dd < d2[i]) d2[i] = dd;
        }
    };
    refresh_d2(0);
    for (int round = 0; round < kRounds; ++round) {
        const double phi = std::accumulate(d2.begin(), d2.end(), 0.0);
        if (phi == 0.0) break;
        const std::size_t before = pool.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double p = oversample * d2[i] / phi;
            if (rng.uniform01() < p) pool.push_back(i);
        }
        for (std::size_t c = before; c < pool.size(); ++c) refresh_d2(c);
    }

    // Dedup pool (by vector content, keeping first occurrence), then make
    // sure at least k distinct candidates exist by scanning the data.
    std::vector<std::size_t> distinct;
    std::set<std::vector<std::pair<std::uint32_t, double>>> seen;
    for (const std::size_t i : pool) {
        if (seen.insert(pts[i].entries).second) distinct.push_back(i);
    }
    for (std::size_t i = 0; i < n && distinct.size() < k; ++i) {
        if (seen.insert(pts[i].entries).second) distinct.push_back(i);
    }

    // Weight candidates by how many points they are nearest to.
    const std::size_t m = distinct.size();
    std::vector<double> weight(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < m; ++c) {
            const double d = sparse_d2(i, distinct[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        weight[best] += 1.0;
    }

    // Reduce the weighted candidate set to k seeds: start from the heaviest
    // candidate, then repeatedly add whichever candidate lowers the weighted
    // quantization cost over the candidate set the most (ties to the lowest
    // index).  Minimizing actual cost instead of a distance heuristic keeps
    // two seeds from landing inside the same dense region.
    std::vector<std::vector<double>> cand_d2(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            cand_d2[a][b] = cand_d2[b][a] = sparse_d2(distinct[a], distinct[b]);
        }
    }
    std::vector<std::size_t> chosen;
    std::vector<char> used(m, 0);
    std::size_t first = 0;
    for (std::size_t c = 1; c < m; ++c) {
        if (weight[c] > weight[first]) first = c;
    }
    chosen.push_back(first);
    used[first] = 1;
    std::vector<double> cost2 = cand_d2[first];
    while (chosen.size() < k) {
        std::size_t best = static_cast<std::size_t>(-1);
        double best_total = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < m; ++u) {
            if (used[u]) continue;
            double total = 0.0;
            for (std::size_t c = 0; c < m; ++c) {
                total += weight[c] * std::min(cost2[c], cand_d2[c][u]);
            }
            if (total < best_total) {
                best_total = total;
                best = u;
            }
        }
        chosen.push_back(best);
        used[best] = 1;
        for (std::size_t c = 0; c < m; ++c) {
            cost2[c] = std::min(cost2[c], cand_d2[c][best]);
        }
    }

    std::vector<std::vector<double>> centroids(k, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < k; ++c) {
        for (const auto& [d, v] : pts[distinct[chosen[c]]].entries) centroids[c][d] = v;
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans_fit(std::span<const TitleVector> vectors, std::size_t k,
                        std::uint64_t seed, KMeansOptions opt) {
    if (k < 1) throw Error("k must be at least 1");
    if (opt.max_iter < 1) throw Error("kmeans max_iter must be at least 1");
    if (!(opt.tol >= 0.0)) throw Error("kmeans tol must be non-negative");

    // Only vectorizable inputs take part in the fit.
    std::vector<std::size_t> active;
    std::size_t dim = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (!vectors[i].vectorizable()) continue;
        active.push_back(i);
        for (const auto& [d, v] : vectors[i].entries) {
            dim = std::max(dim, static_cast<std::size_t>(d) + 1);
        }
    }
    std::set<std::vector<std::pair<std::uint32_t, double>>> distinct;
    for (const std::size_t i : active) distinct.insert(vectors[i].entries);
    if (distinct.size() < k) {
        throw Error("k=" + std::to_string(k) + " exceeds the " +
                    std::to_string(distinct.size()) + " distinct vectors");
    }

    std::vector<TitleVector> pts;
    pts.reserve(active.size());
    for (const std::size_t i : active) pts.push_back(vectors[i]);
    std::vector<double> norms(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) norms[i] = sparse_norm2(pts[i]);

    Rng rng(seed);
    std::vector<std::vector<double>> centroids = seed_centroids(pts, norms, k, dim, rng);

    KMeansResult res;
    std::vector<std::int32_t> assign(pts.size(), 0);
    std::vector<double> pt_d2(pts.size(), 0.0);
    std::vector<double> c_norm(k);

    const auto assignment_step = [&]() {
        for (std::size_t c = 0; c < k; ++c) c_norm[c] = dense_norm2(centroids[c]);
        double objective = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            std::int32_t best = 0;
            double best_d = dist2(pts[i], norms[i], centroids[0], c_norm[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = dist2(pts[i], norms[i], centroids[c], c_norm[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<std::int32_t>(c);
                }
            }
            assign[i] = best;
            pt_d2[i] = best_d;
            objective += best_d;
        }
        return objective;
    };

    res.objective.push_back(assignment_step());
    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        // Update step: centroids move to the mean of their members.
        std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            ++count[c];
            for (const auto& [d, v] : pts[i].entries) next[c][d] += v;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] == 0) continue;
            for (double& v : next[c]) v /= static_cast<double>(count[c]);
        }
        // Empty clusters restart at the farthest point from its centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] != 0) continue;
            std::size_t far = 0;
            for (std::size_t i = 1; i < pts.size(); ++i) {
                if (pt_d2[i] > pt_d2[far]) far = i;
            }
            std::fill(next[c].begin(), next[c].end(), 0.0);
            for (const auto& [d, v] : pts[far].entries) next[c][d] = v;
            pt_d2[far] = 0.0;  // keep later empties from picking the same point
        }

        double shift2 = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = next[c][d] - centroids[c][d];
                s += diff * diff;
            }
            shift2 = std::max(shift2, s);
        }
        centroids = std::move(next);
        res.objective.push_back(assignment_step());
        res.iterations = iter;
        if (std::sqrt(shift2) < opt.tol) {
            res.converged = true;
            break;
        }
    }

    res.model.k = k;
    res.model.dim = dim;
    res.model.centroids = std::move(centroids);
    for (std::size_t c = 0; c < k; ++c) {
        res.model.labels[static_cast<std::int32_t>(c)] = "cluster-" + std::to_string(c);
    }
    res.assignment.assign(vectors.size(), -1);
    for (std::size_t j = 0; j < active.size(); ++j) res.assignment[active[j]] = assign[j];
    return res;
}

std::string assign_category(std::string_view title, const ClusterModel& model,
                            const KeywordDictionary& dict, const Tokenizer& tokenizer) {
    const TitleVector v = vectorize(title, dict, tokenizer);
    if (!v.vectorizable()) return std::string(kUnclassified);
    const double vn = sparse_norm2(v);
    std::size_t best = 0;
    double best_d = dist2(v, vn, model.centroids[0], dense_norm2(model.centroids[0]));
    for (std::size_t c = 1; c < model.k; ++c) {
        const double d = dist2(v, vn, model.centroids[c], dense_norm2(model.centroids[c]));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    const auto it = model.labels.find(static_cast<std::int32_t>(best));
    if (it == model.labels.end()) {
        throw Error("cluster " + std::to_string(best) + " has no label");
    }
    return it->second;
}

Grouping grouping_from_string(std::string_view s) {
    if (s == "tier") return Grouping::tier;
    if (s == "city") return Grouping::city;
    if (s == "region") return Grouping::region;
    throw Error("unknown grouping '" + std::string(s) + "' (expected tier|city|region)");
}

std::string_view to_string(Grouping g) {
    switch (g) {
        case Grouping::tier: return "tier";
        case Grouping::city: return "city";
        case Grouping::region: return "region";
    }
    throw Error("invalid grouping value");
}

DemandSeries demand_series(std::span<const ingest::JobPostingRecord> postings,
                           const ClusterModel& model, const KeywordDictionary& dict,
                           const Tokenizer& tokenizer, const geo::Registry& registry,
                           Grouping grouping) {
    DemandSeries series;
    series.grouping = grouping;
    for (const auto& p : postings) {
        const geo::City* city = registry.find(p.working_city);
        if (city == nullptr) {
            ++series.skipped_unknown_city;
            continue;
        }
        std::string group;
        switch (grouping) {
            case Grouping::tier: group = std::string(geo::to_string(city->tier)); break;
            case Grouping::city: group = city->city_id; break;
            case Grouping::region: group = city->province_id; break;
        }
        const QuarterId q = ingest::quarter_of(p.publish_timestamp);
        const std::string category = assign_category(p.title, model, dict, tokenizer);
        ++series.cells[{q, std::move(group), category}];
    }
    return series;
}

std::map<std::string, double> category_share(const DemandSeries& series, QuarterId quarter,
                                             const std::string& group) {
    std::map<std::string, double> shares;
    std::uint64_t total = 0;
    for (const auto& [key, count] : series.cells) {
        if (std::get<0>(key) != quarter || std::get<1>(key) != group) continue;
        shares[std::get<2>(key)] = static_cast<double>(count);
        total += count;
    }
    if (total == 0) {
        throw Error("no postings for group '" + group + "' in " + quarter.str());
    }
    for (auto& [cat, value] : shares) value /= static_cast<double>(total);
    return shares;
}

std::string format_dictionary(const KeywordDictionary& dict) {
    std::string out;
    for (std::size_t i = 0; i < dict.keywords.size(); ++i) {
        out += dict.keywords[i];
        out += '\t';
        out += std::to_string(dict.frequencies[i]);
        out += '\n';
    }
    return out;
}

KeywordDictionary load_dictionary(const std::filesystem::path& path) {
    KeywordDictionary dict;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        const auto fields = io::split(line, '\t');
        if (fields.size() != 2 || fields[0].empty()) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected keyword<TAB>frequency");
        }
        const auto freq = io::parse_int(fields[1]);
        if (!freq || *freq < 0) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": bad frequency");
        }
        dict.keywords.emplace_back(fields[0]);
        dict.frequencies.push_back(static_cast<std::uint64_t>(*freq));
    });
    if (dict.keywords.empty()) throw Error(path.string() + ": empty dictionary file");
    std::set<std::string_view> seen;
    for (const std::string& kw : dict.keywords) {
        if (!seen.insert(kw).second) throw Error("duplicate dictionary keyword '" + kw + "'");
    }
    return dict;
}

std::string format_model(const ClusterModel& model, const KeywordDictionary& dict) {
    nlohmann::json j;
    j["k"] = model.k;
    j["dim"] = model.dim;
    j["centroids"] = model.centroids;
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [id, name] : model.labels) labels[std::to_string(id)] = name;
    j["labels"] = labels;
    nlohmann::json tops = nlohmann::json::array();
    for (const auto& centroid : model.centroids) {
        std::vector<std::size_t> dims;
        for (std::size_t d = 0; d < centroid.size(); ++d) {
            if (centroid[d] > 0.0) dims.push_back(d);
        }
        std::sort(dims.begin(), dims.end(), [&](std::size_t a, std::size_t b) {
            if (centroid[a] != centroid[b]) return centroid[a] > centroid[b];
            return a < b;
        });
        if (dims.size() > 10) dims.resize(10);
        nlohmann::json words = nlohmann::json::array();
        for (const std::size_t d : dims) {
            words.push_back(d < dict.size() ? dict.keywords[d] : "dim-" + std::to_string(d));
        }
        tops.push_back(words);
    }
    j["top_keywords"] = tops;
    return j.dump(2) + "\n";
}

ClusterModel load_model(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    ClusterModel model;
    try {
        model.k = j.at("k").get<std::size_t>();
        model.dim = j.at("dim").get<std::size_t>();
        model.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
        for (const auto& [key, value] : j.at("labels").items()) {
            const auto id = io::parse_int(key);
            if (!id) throw Error(path.string() + ": non-numeric label key '" + key + "'");
            model.labels[static_cast<std::int32_t>(*id)] = value.get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    if (model.centroids.size() != model.k) {
        throw Error(path.string() + ": centroid count does not match k");
    }
    for (const auto& c : model.centroids) {
        if (c.size() != model.dim) {
            throw Error(path.string() + ": centroid dimension mismatch");
        }
        for (const double v : c) {
            if (!std::isfinite(v)) throw Error(path.string() + ": non-finite centroid value");
        }
    }
    for (std::size_t c = 0; c < model.k; ++c) {
        if (!model.labels.contains(static_cast<std::int32_t>(c))) {
            throw Error(path.string() + ": missing label for cluster " + std::to_string(c));
        }
    }
    return model;
}

std::string format_series(const DemandSeries& series) {
    std::string out;
    for (const auto& [key, count] : series.cells) {
        out += std::get<0>(key).str();
        out += '\t';
        out += std::get<1>(key);
        out += '\t';
        out += std::get<2>(key);
        out += '\t';
        out += std::to_string(count);
        out += '\n';
    }
    return out;
}

DemandSeries load_series(const std::filesystem::path& path, Grouping grouping) {
    DemandSeries series;
    series.grouping = grouping;
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
        const auto count = io::parse_int(fields[3]);
        if (!count || *count < 0) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": bad count");
        }
        series.cells[{q, std::string(fields[1]), std::string(fields[2])}] +=
            static_cast<std::uint64_t>(*count);
    });
    return series;
}

}  // namespace labourflow::demand
