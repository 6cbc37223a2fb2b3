#include "labourflow/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <json.hpp>

#include "labourflow/communities.hpp"
#include "labourflow/demand.hpp"
#include "labourflow/flow_graph.hpp"
#include "labourflow/geo.hpp"
#include "labourflow/ingest.hpp"
#include "labourflow/io_util.hpp"
#include "labourflow/matcher.hpp"
#include "labourflow/stats.hpp"

namespace labourflow::pipeline {

namespace {

constexpr const char* kFlowIntents = "flow_intents.tsv";
constexpr const char* kGraphs = "graphs.tsv";
constexpr const char* kMetrics = "metrics.tsv";
constexpr const char* kPartitions = "partitions.tsv";
constexpr const char* kDictionary = "dictionary.tsv";
constexpr const char* kModel = "model.json";
constexpr const char* kSeries = "series.tsv";
constexpr const char* kCorrelations = "correlations.tsv";

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    for (const auto part : io::split(value, ',')) {
        std::string item = trim(part);
        if (!item.empty()) out.push_back(std::move(item));
    }
    return out;
}

// The checkpoint a stage depends on, with the stage that produces it.
void require_checkpoint(const std::filesystem::path& path, std::string_view producer) {
    if (!std::filesystem::exists(path)) {
        throw Error("missing checkpoint '" + path.string() + "'; run the " +
                    std::string(producer) + " stage first");
    }
}

void require_input(const std::filesystem::path& path, std::string_view what) {
    if (path.empty()) {
        throw Error(std::string(what) + " path is not configured");
    }
    if (!std::filesystem::exists(path)) {
        throw Error(std::string(what) + " file '" + path.string() + "' does not exist");
    }
}

std::map<QuarterId, std::vector<graph::CityMetrics>> load_metrics(
    const std::filesystem::path& path) {
    std::map<QuarterId, std::vector<graph::CityMetrics>> out;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        const auto f = io::split(line, '\t');
        if (f.size() != 9) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected 9 tab-separated fields");
        }
        QuarterId q;
        try {
            q = QuarterId::parse(std::string(f[0]));
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        graph::CityMetrics m;
        m.city_id = std::string(f[1]);
        const auto inflow = io::parse_double(f[2]);
        const auto outflow = io::parse_double(f[3]);
        const auto net = io::parse_double(f[4]);
        const auto authority = io::parse_double(f[5]);
        const auto hub = io::parse_double(f[6]);
        if (!inflow || !outflow || !net || !authority || !hub ||
            (f[7] != "0" && f[7] != "1") || (f[8] != "0" && f[8] != "1")) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed metrics row");
        }
        m.inflow = *inflow;
        m.outflow = *outflow;
        m.net_inflow = *net;
        m.authority = *authority;
        m.hub = *hub;
        m.blackhole = f[7] == "1";
        m.volcano = f[8] == "1";
        out[q].push_back(std::move(m));
    });
    return out;
}

struct PartitionRow {
    QuarterId quarter;
    std::string resolution;  // formatted, round-trips exactly
    CityId city_id;
    std::int32_t cluster = 0;
    double modularity = 0.0;
};

std::vector<PartitionRow> load_partitions(const std::filesystem::path& path) {
    std::vector<PartitionRow> rows;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        const auto f = io::split(line, '\t');
        if (f.size() != 5) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected 5 tab-separated fields");
        }
        PartitionRow row;
        try {
            row.quarter = QuarterId::parse(std::string(f[0]));
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        row.resolution = std::string(f[1]);
        row.city_id = std::string(f[2]);
        const auto cluster = io::parse_int(f[3]);
        const auto q = io::parse_double(f[4]);
        if (!cluster || !q) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": malformed partition row");
        }
        row.cluster = static_cast<std::int32_t>(*cluster);
        row.modularity = *q;
        rows.push_back(std::move(row));
    });
    return rows;
}

// ---- report formatting -------------------------------------------------

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// One report table: ordered column names plus rows of pre-rendered cells.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c) out += ',';
        out += csv_escape(t.columns[c]);
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += csv_escape(row[c]);
        }
        out += '\n';
    }
    return out;
}

std::string render_json(const Table& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json obj;
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            // Keep numerics as numbers so downstream tools get real types.
            const std::string& cell = row[c];
            if (cell == "true") {
                obj[t.columns[c]] = true;
            } else if (cell == "false") {
                obj[t.columns[c]] = false;
            } else if (const auto i = io::parse_int(cell); i && cell.find('.') == std::string::npos &&
                       cell.find('e') == std::string::npos) {
                obj[t.columns[c]] = *i;
            } else if (const auto d = io::parse_double(cell)) {
                obj[t.columns[c]] = *d;
            } else {
                obj[t.columns[c]] = cell;
            }
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

void write_report(const std::filesystem::path& dir, const std::string& name,
                  const std::string& format, const Table& t, std::ostream& log) {
    const std::filesystem::path path = dir / (name + "." + format);
    io::atomic_write(path, format == "json" ? render_json(t) : render_csv(t));
    log << "[report] wrote " << path.string() << " (" << t.rows.size() << " rows)\n";
}

// ---- stages ------------------------------------------------------------

void stage_ingest(const PipelineConfig& cfg, std::ostream& log) {
    require_input(cfg.registry_path, "registry");
    require_input(cfg.query_log_path, "query log");
    const geo::Registry registry = geo::load_registry(cfg.registry_path);
    const match::PlaceDictionary dict = match::PlaceDictionary::build(registry);

    ingest::ParseDiagnostics parse_diag;
    std::vector<ingest::QueryRecord> records =
        ingest::read_query_log(cfg.query_log_path, &parse_diag);
    log << "[ingest] read " << records.size() << " query records ("
        << parse_diag.malformed_lines << " malformed lines skipped)\n";

    const std::vector<std::string>& keywords =
        cfg.keywords.empty() ? ingest::default_job_keywords() : cfg.keywords;
    records = ingest::filter_job_queries(records, keywords);
    log << "[ingest] " << records.size() << " records after keyword filter\n";
    if (cfg.dedup) {
        records = ingest::dedup(records, registry);
        log << "[ingest] " << records.size() << " records after dedup\n";
    }

    // Record-level extraction is independent per record: chunk the input,
    // extract per chunk, then concatenate in chunk order so the result is
    // identical no matter how many workers ran.
    const std::size_t chunk_size = 8192;
    const std::size_t n_chunks = records.empty() ? 0 : (records.size() + chunk_size - 1) / chunk_size;
    std::vector<std::vector<ingest::FlowIntentRecord>> chunk_out(n_chunks);
    std::vector<ingest::ExtractDiagnostics> chunk_diag(n_chunks);
    io::parallel_chunks(records.size(), cfg.workers, chunk_size,
                        [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                            chunk_out[chunk] = ingest::extract_flow_intents(
                                std::span(records).subspan(begin, end - begin), registry, dict,
                                &chunk_diag[chunk]);
                        });
    std::vector<ingest::FlowIntentRecord> intents;
    ingest::ExtractDiagnostics diag;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        intents.insert(intents.end(), chunk_out[c].begin(), chunk_out[c].end());
        diag += chunk_diag[c];
    }
    log << "[ingest] extracted " << intents.size() << " flow intents (dropped: no-origin "
        << diag.dropped_no_origin << ", no-destination " << diag.dropped_no_destination
        << ", same-city " << diag.dropped_same_city << ")\n";
    io::atomic_write(cfg.output_dir / kFlowIntents, ingest::format_flow_intents(intents));
}

void stage_graph(const PipelineConfig& cfg, std::ostream& log) {
    require_input(cfg.registry_path, "registry");
    require_checkpoint(cfg.output_dir / kFlowIntents, "ingest");
    const geo::Registry registry = geo::load_registry(cfg.registry_path);
    const std::vector<ingest::FlowIntentRecord> intents =
        ingest::read_flow_intents(cfg.output_dir / kFlowIntents);

    std::map<QuarterId, std::vector<ingest::FlowIntentRecord>> by_quarter;
    for (const auto& r : intents) by_quarter[r.quarter].push_back(r);
    if (!cfg.quarters.empty()) {
        const std::set<QuarterId> want(cfg.quarters.begin(), cfg.quarters.end());
        for (const QuarterId& q : want) {
            if (!by_quarter.contains(q)) {
                log << "[graph] warning: no flow intents for configured quarter " << q.str()
                    << "\n";
            }
        }
        std::erase_if(by_quarter, [&](const auto& kv) { return !want.contains(kv.first); });
    }

    std::vector<graph::FlowGraph> graphs;
    for (const auto& [q, records] : by_quarter) {
        graphs.push_back(graph::FlowGraph::build(records, registry, q));
        log << "[graph] " << q.str() << ": " << records.size() << " records over "
            << graphs.back().size() << " cities\n";
    }
    io::atomic_write(cfg.output_dir / kGraphs, graph::format_graphs(graphs));
}

void stage_metrics(const PipelineConfig& cfg, std::ostream& log) {
    require_input(cfg.registry_path, "registry");
    require_checkpoint(cfg.output_dir / kGraphs, "graph");
    const geo::Registry registry = geo::load_registry(cfg.registry_path);
    const std::vector<graph::FlowGraph> graphs =
        graph::load_graphs(cfg.output_dir / kGraphs, registry);

    std::string out;
    for (const graph::FlowGraph& g : graphs) {
        const auto metrics =
            graph::city_metrics(g, {.tol = cfg.hits_tol, .max_iter = cfg.hits_max_iter});
        const auto ranked = graph::detect_blackholes_volcanoes(metrics, 0);
        log << "[metrics] " << g.quarter().str() << ": " << ranked.blackholes.size()
            << " blackholes, " << ranked.volcanoes.size() << " volcanoes\n";
        out += graph::format_metrics(g.quarter(), metrics);
    }
    io::atomic_write(cfg.output_dir / kMetrics, out);
}

void stage_communities(const PipelineConfig& cfg, std::ostream& log) {
    require_input(cfg.registry_path, "registry");
    require_checkpoint(cfg.output_dir / kGraphs, "graph");
    const geo::Registry registry = geo::load_registry(cfg.registry_path);
    const std::vector<graph::FlowGraph> graphs =
        graph::load_graphs(cfg.output_dir / kGraphs, registry);

    std::string out;
    for (const graph::FlowGraph& g : graphs) {
        for (const double resolution : cfg.resolutions) {
            const community::Partition p =
                community::louvain(g, resolution, cfg.louvain_seed);
            log << "[communities] " << g.quarter().str() << " resolution "
                << io::format_double(resolution) << ": " << p.n_communities()
                << " communities, Q=" << io::format_double(p.modularity) << "\n";
            const std::string q = g.quarter().str();
            const std::string res = io::format_double(resolution);
            const std::string mod = io::format_double(p.modularity);
            for (std::size_t i = 0; i < p.nodes.size(); ++i) {
                out += q;
                out += '\t';
                out += res;
                out += '\t';
                out += p.nodes[i];
                out += '\t';
                out += std::to_string(p.assignment[i]);
                out += '\t';
                out += mod;
                out += '\n';
            }
        }
    }
    io::atomic_write(cfg.output_dir / kPartitions, out);
}

void stage_demand(const PipelineConfig& cfg, std::ostream& log) {
    require_input(cfg.registry_path, "registry");
    require_input(cfg.postings_path, "postings");
    const geo::Registry registry = geo::load_registry(cfg.registry_path);

    ingest::ParseDiagnostics parse_diag;
    const std::vector<ingest::JobPostingRecord> postings =
        ingest::read_postings(cfg.postings_path, &parse_diag);
    log << "[demand] read " << postings.size() << " postings (" << parse_diag.malformed_lines
        << " malformed lines skipped)\n";

    std::vector<std::string> stoplist;
    if (!cfg.stoplist_path.empty()) {
        io::for_each_line(cfg.stoplist_path, [&](std::size_t, std::string_view line) {
            const std::string word = trim(line);
            if (!word.empty()) stoplist.push_back(word);
        });
    }
    std::vector<std::string> titles;
    titles.reserve(postings.size());
    for (const auto& p : postings) titles.push_back(p.title);
    const demand::KeywordDictionary dict = demand::build_keyword_dictionary(
        titles, demand::whitespace_tokenize, cfg.dict_min_freq, cfg.dict_top_drop, stoplist);
    log << "[demand] dictionary has " << dict.size() << " keywords\n";
    io::atomic_write(cfg.output_dir / kDictionary, demand::format_dictionary(dict));

    std::vector<demand::TitleVector> vectors;
    vectors.reserve(titles.size());
    std::size_t unvectorizable = 0;
    for (const std::string& title : titles) {
        vectors.push_back(demand::vectorize(title, dict, demand::whitespace_tokenize));
        if (!vectors.back().vectorizable()) ++unvectorizable;
    }
    log << "[demand] " << (vectors.size() - unvectorizable) << " of " << vectors.size()
        << " titles vectorizable\n";

    demand::KMeansResult fit = demand::kmeans_fit(vectors, cfg.kmeans_k, cfg.kmeans_seed);
    log << "[demand] kmeans " << (fit.converged ? "converged" : "stopped") << " after "
        << fit.iterations << " iterations, objective "
        << io::format_double(fit.objective.back()) << "\n";
    if (!cfg.category_labels_path.empty()) {
        io::for_each_line(cfg.category_labels_path, [&](std::size_t lineno,
                                                        std::string_view line) {
            if (line.empty()) return;
            const auto f = io::split(line, '\t');
            const auto id = f.size() == 2 ? io::parse_int(f[0]) : std::nullopt;
            if (!id || *id < 0 || static_cast<std::size_t>(*id) >= cfg.kmeans_k) {
                throw Error(cfg.category_labels_path.string() + ":" + std::to_string(lineno) +
                            ": expected 'cluster_id<TAB>name' with a valid cluster id");
            }
            fit.model.labels[static_cast<std::int32_t>(*id)] = trim(f[1]);
        });
    }
    io::atomic_write(cfg.output_dir / kModel, demand::format_model(fit.model, dict));

    const demand::DemandSeries series =
        demand::demand_series(postings, fit.model, dict, demand::whitespace_tokenize, registry,
                              demand::grouping_from_string(cfg.grouping));
    if (series.skipped_unknown_city > 0) {
        log << "[demand] skipped " << series.skipped_unknown_city
            << " postings with unknown cities\n";
    }
    io::atomic_write(cfg.output_dir / kSeries, demand::format_series(series));
}

void stage_correlate(const PipelineConfig& cfg, std::ostream& log) {
    require_input(cfg.indicator_path, "indicator");
    require_checkpoint(cfg.output_dir / kMetrics, "metrics");
    const auto metrics = load_metrics(cfg.output_dir / kMetrics);
    std::vector<geo::Indicator> indicators = geo::load_indicators(cfg.indicator_path);
    std::sort(indicators.begin(), indicators.end(),
              [](const geo::Indicator& a, const geo::Indicator& b) {
                  if (a.name != b.name) return a.name < b.name;
                  return a.city_id < b.city_id;
              });
    std::map<std::string, std::map<CityId, double>> by_name;
    for (const auto& ind : indicators) by_name[ind.name][ind.city_id] = ind.value;

    const std::vector<std::pair<std::string, double graph::CityMetrics::*>> scores = {
        {"inflow", &graph::CityMetrics::inflow},
        {"outflow", &graph::CityMetrics::outflow},
        {"net_inflow", &graph::CityMetrics::net_inflow},
        {"authority", &graph::CityMetrics::authority},
        {"hub", &graph::CityMetrics::hub},
    };

    std::string out;
    std::size_t rows = 0;
    for (const auto& [quarter, city_rows] : metrics) {
        for (const auto& [name, values] : by_name) {
            for (const auto& [score_name, member] : scores) {
                std::vector<double> xs, ys;
                for (const auto& m : city_rows) {
                    const auto it = values.find(m.city_id);
                    if (it == values.end()) continue;
                    xs.push_back(it->second);
                    ys.push_back(m.*member);
                }
                if (xs.size() < 3) {
                    log << "[correlate] " << quarter.str() << " " << name << "/" << score_name
                        << ": fewer than 3 common cities, skipped\n";
                    continue;
                }
                for (const auto method : {stats::Method::pearson, stats::Method::spearman,
                                          stats::Method::kendall}) {
                    stats::CorrelationResult r;
                    try {
                        switch (method) {
                            case stats::Method::pearson: r = stats::pearson(ys, xs); break;
                            case stats::Method::spearman: r = stats::spearman(ys, xs); break;
                            case stats::Method::kendall: r = stats::kendall(ys, xs); break;
                        }
                    } catch (const Error& e) {
                        log << "[correlate] " << quarter.str() << " " << name << "/"
                            << score_name << " " << stats::to_string(method) << ": " << e.what()
                            << "\n";
                        continue;
                    }
                    out += quarter.str();
                    out += '\t';
                    out += name;
                    out += '\t';
                    out += score_name;
                    out += '\t';
                    out += stats::to_string(method);
                    out += '\t';
                    out += io::format_double(r.r);
                    out += '\t';
                    out += io::format_double(r.p_value);
                    out += '\t';
                    out += std::to_string(r.n);
                    out += '\n';
                    ++rows;
                }
            }
        }
    }
    log << "[correlate] " << rows << " correlation rows\n";
    io::atomic_write(cfg.output_dir / kCorrelations, out);
}

void stage_report(const PipelineConfig& cfg, std::ostream& log) {
    require_checkpoint(cfg.output_dir / kMetrics, "metrics");
    require_checkpoint(cfg.output_dir / kPartitions, "communities");
    const bool want_demand = !cfg.postings_path.empty();
    const bool want_correlations = !cfg.indicator_path.empty();
    if (want_demand) require_checkpoint(cfg.output_dir / kSeries, "demand");
    if (want_correlations) require_checkpoint(cfg.output_dir / kCorrelations, "correlate");

    const std::filesystem::path report_dir = cfg.output_dir / "report";
    std::filesystem::create_directories(report_dir);
    const std::string& fmt = cfg.report_format;

    const auto metrics = load_metrics(cfg.output_dir / kMetrics);
    for (const auto& [quarter, rows] : metrics) {
        Table t;
        t.columns = {"city_id", "inflow",    "outflow", "net_inflow", "authority",
                     "hub",     "blackhole", "volcano"};
        for (const auto& m : rows) {
            t.rows.push_back({m.city_id, io::format_double(m.inflow),
                              io::format_double(m.outflow), io::format_double(m.net_inflow),
                              io::format_double(m.authority), io::format_double(m.hub),
                              m.blackhole ? "true" : "false", m.volcano ? "true" : "false"});
        }
        write_report(report_dir, "metrics_" + quarter.str(), fmt, t, log);
    }

    const auto partitions = load_partitions(cfg.output_dir / kPartitions);
    std::map<std::pair<QuarterId, std::string>, Table> partition_tables;
    for (const auto& row : partitions) {
        Table& t = partition_tables[{row.quarter, row.resolution}];
        if (t.columns.empty()) {
            t.columns = {"city_id", "cluster", "resolution", "modularity"};
        }
        t.rows.push_back({row.city_id, std::to_string(row.cluster), row.resolution,
                          io::format_double(row.modularity)});
    }
    for (const auto& [key, table] : partition_tables) {
        write_report(report_dir, "partition_" + key.first.str() + "_r" + key.second, fmt,
                     table, log);
    }

    if (want_demand) {
        const demand::DemandSeries series = demand::load_series(
            cfg.output_dir / kSeries, demand::grouping_from_string(cfg.grouping));
        Table t;
        t.columns = {"quarter", "group", "category", "count"};
        for (const auto& [key, count] : series.cells) {
            t.rows.push_back({std::get<0>(key).str(), std::get<1>(key), std::get<2>(key),
                              std::to_string(count)});
        }
        write_report(report_dir, "demand_series", fmt, t, log);
    }

    if (!cfg.ratio_pairs.empty()) {
        Table t;
        t.columns = {"from_quarter", "to_quarter", "city_id", "metric",
                     "value_from",   "value_to",   "ratio"};
        const std::vector<std::pair<std::string, double graph::CityMetrics::*>> ratio_metrics = {
            {"inflow", &graph::CityMetrics::inflow},
            {"outflow", &graph::CityMetrics::outflow},
            {"net_inflow", &graph::CityMetrics::net_inflow},
            {"authority", &graph::CityMetrics::authority},
            {"hub", &graph::CityMetrics::hub},
        };
        for (const auto& [t1, t2] : cfg.ratio_pairs) {
            const auto it1 = metrics.find(t1);
            const auto it2 = metrics.find(t2);
            if (it1 == metrics.end() || it2 == metrics.end()) {
                throw Error("ratio pair " + t1.str() + "/" + t2.str() +
                            " references a quarter with no metrics; check the quarters "
                            "configuration and rerun the metrics stage");
            }
            std::map<CityId, const graph::CityMetrics*> second;
            for (const auto& m : it2->second) second[m.city_id] = &m;
            for (const auto& m1 : it1->second) {
                const auto found = second.find(m1.city_id);
                if (found == second.end()) continue;
                for (const auto& [metric_name, member] : ratio_metrics) {
                    const double v1 = m1.*member;
                    const double v2 = found->second->*member;
                    if (!(v1 > 0.0)) continue;  // ratio undefined on this baseline
                    t.rows.push_back({t1.str(), t2.str(), m1.city_id, metric_name,
                                      io::format_double(v1), io::format_double(v2),
                                      io::format_double(graph::increase_ratio(v1, v2))});
                }
            }
        }
        write_report(report_dir, "increase_ratios", fmt, t, log);
    }

    if (want_correlations) {
        Table t;
        t.columns = {"quarter", "indicator", "score", "method", "r", "p_value", "n"};
        io::for_each_line(cfg.output_dir / kCorrelations,
                          [&](std::size_t lineno, std::string_view line) {
                              if (line.empty()) return;
                              const auto f = io::split(line, '\t');
                              if (f.size() != 7) {
                                  throw Error((cfg.output_dir / kCorrelations).string() + ":" +
                                              std::to_string(lineno) + ": malformed row");
                              }
                              std::vector<std::string> row;
                              for (const auto part : f) row.emplace_back(part);
                              t.rows.push_back(std::move(row));
                          });
        write_report(report_dir, "correlations", fmt, t, log);
    }
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    PipelineConfig cfg;
    const std::filesystem::path base = path.has_parent_path()
                                           ? path.parent_path()
                                           : std::filesystem::path(".");
    const auto resolve = [&](const std::string& value) {
        const std::filesystem::path p(value);
        return p.is_absolute() ? p : base / p;
    };
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') return;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected key=value");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        const auto fail = [&](const std::string& why) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + why);
        };
        const auto as_int = [&]() {
            const auto v = io::parse_int(value);
            if (!v) fail("'" + key + "' must be an integer");
            return *v;
        };
        const auto as_double = [&]() {
            const auto v = io::parse_double(value);
            if (!v) fail("'" + key + "' must be a number");
            return *v;
        };
        const auto as_bool = [&]() {
            if (value == "true" || value == "1") return true;
            if (value == "false" || value == "0") return false;
            fail("'" + key + "' must be true or false");
            return false;
        };
        try {
            if (key == "registry") cfg.registry_path = resolve(value);
            else if (key == "query_log") cfg.query_log_path = resolve(value);
            else if (key == "postings") cfg.postings_path = resolve(value);
            else if (key == "indicators") cfg.indicator_path = resolve(value);
            else if (key == "output_dir") cfg.output_dir = resolve(value);
            else if (key == "keywords") cfg.keywords = split_list(value);
            else if (key == "dedup") cfg.dedup = as_bool();
            else if (key == "quarters") {
                cfg.quarters.clear();
                for (const auto& q : split_list(value)) cfg.quarters.push_back(QuarterId::parse(q));
            } else if (key == "hits_tol") cfg.hits_tol = as_double();
            else if (key == "hits_max_iter") cfg.hits_max_iter = static_cast<int>(as_int());
            else if (key == "resolutions") {
                cfg.resolutions.clear();
                for (const auto& r : split_list(value)) {
                    const auto d = io::parse_double(r);
                    if (!d) fail("resolution '" + r + "' is not a number");
                    cfg.resolutions.push_back(*d);
                }
            } else if (key == "louvain_seed") cfg.louvain_seed = static_cast<std::uint64_t>(as_int());
            else if (key == "dict_min_freq") cfg.dict_min_freq = static_cast<std::uint64_t>(as_int());
            else if (key == "dict_top_drop") cfg.dict_top_drop = static_cast<std::size_t>(as_int());
            else if (key == "stoplist") cfg.stoplist_path = resolve(value);
            else if (key == "kmeans_k") cfg.kmeans_k = static_cast<std::size_t>(as_int());
            else if (key == "kmeans_seed") cfg.kmeans_seed = static_cast<std::uint64_t>(as_int());
            else if (key == "grouping") cfg.grouping = value;
            else if (key == "category_labels") cfg.category_labels_path = resolve(value);
            else if (key == "report_format") cfg.report_format = value;
            else if (key == "ratio_pairs") {
                cfg.ratio_pairs.clear();
                for (const auto& pair : split_list(value)) {
                    const auto parts = io::split(pair, ':');
                    if (parts.size() != 2) fail("ratio pair '" + pair + "' must be T1:T2");
                    cfg.ratio_pairs.emplace_back(QuarterId::parse(std::string(parts[0])),
                                                 QuarterId::parse(std::string(parts[1])));
                }
            } else if (key == "workers") cfg.workers = static_cast<int>(as_int());
            else fail("unknown configuration key '" + key + "'");
        } catch (const Error& e) {
            const std::string what = e.what();
            // Keep already-contextualised messages as-is.
            if (what.starts_with(path.string() + ":")) throw;
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + what);
        }
    });
    return cfg;
}

std::vector<std::string> validate(const PipelineConfig& cfg) {
    std::vector<std::string> problems;
    const auto check_exists = [&](const std::filesystem::path& p, std::string_view what,
                                  bool required) {
        if (p.empty()) {
            if (required) problems.push_back(std::string(what) + " path is not set");
            return;
        }
        if (!std::filesystem::exists(p)) {
            problems.push_back(std::string(what) + " file '" + p.string() + "' does not exist");
        }
    };
    check_exists(cfg.registry_path, "registry", true);
    check_exists(cfg.query_log_path, "query_log", true);
    check_exists(cfg.postings_path, "postings", false);
    check_exists(cfg.indicator_path, "indicators", false);
    check_exists(cfg.stoplist_path, "stoplist", false);
    check_exists(cfg.category_labels_path, "category_labels", false);
    if (cfg.output_dir.empty()) problems.push_back("output_dir path is not set");
    if (!(cfg.hits_tol > 0.0)) problems.push_back("hits_tol must be positive");
    if (cfg.hits_max_iter < 1) problems.push_back("hits_max_iter must be at least 1");
    if (cfg.resolutions.empty()) problems.push_back("resolutions must not be empty");
    for (const double r : cfg.resolutions) {
        if (!(r > 0.0)) problems.push_back("resolutions must all be positive");
    }
    if (cfg.dict_min_freq < 1) problems.push_back("dict_min_freq must be at least 1");
    if (cfg.kmeans_k < 2) problems.push_back("kmeans_k must be at least 2");
    if (cfg.workers < 1) problems.push_back("workers must be at least 1");
    if (cfg.report_format != "csv" && cfg.report_format != "json") {
        problems.push_back("report_format must be csv or json");
    }
    try {
        demand::grouping_from_string(cfg.grouping);
    } catch (const Error& e) {
        problems.push_back(e.what());
    }
    for (const std::string& kw : cfg.keywords) {
        if (kw.empty()) problems.push_back("keywords must not contain empty entries");
    }
    return problems;
}

std::optional<Stage> stage_from_string(std::string_view s) {
    if (s == "ingest") return Stage::ingest;
    if (s == "graph") return Stage::graph;
    if (s == "metrics") return Stage::metrics;
    if (s == "communities") return Stage::communities;
    if (s == "demand") return Stage::demand;
    if (s == "correlate") return Stage::correlate;
    if (s == "report") return Stage::report;
    return std::nullopt;
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::ingest: return "ingest";
        case Stage::graph: return "graph";
        case Stage::metrics: return "metrics";
        case Stage::communities: return "communities";
        case Stage::demand: return "demand";
        case Stage::correlate: return "correlate";
        case Stage::report: return "report";
    }
    throw Error("invalid stage value");
}

std::vector<Stage> all_stages() {
    return {Stage::ingest,  Stage::graph,     Stage::metrics, Stage::communities,
            Stage::demand,  Stage::correlate, Stage::report};
}

std::vector<Stage> parse_stages(std::string_view list) {
    std::set<Stage> seen;
    for (const auto part : io::split(list, ',')) {
        const std::string name = trim(part);
        if (name.empty()) continue;
        const auto stage = stage_from_string(name);
        if (!stage) {
            throw Error("unknown stage '" + name +
                        "' (expected ingest, graph, metrics, communities, demand, correlate "
                        "or report)");
        }
        seen.insert(*stage);
    }
    if (seen.empty()) throw Error("stage list is empty");
    return {seen.begin(), seen.end()};
}

void run(const PipelineConfig& cfg, std::span<const Stage> stages, std::ostream& log) {
    if (cfg.output_dir.empty()) throw Error("output_dir path is not set");
    std::filesystem::create_directories(cfg.output_dir);

    std::vector<Stage> ordered(stages.begin(), stages.end());
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
    for (const Stage stage : ordered) {
        switch (stage) {
            case Stage::ingest: stage_ingest(cfg, log); break;
            case Stage::graph: stage_graph(cfg, log); break;
            case Stage::metrics: stage_metrics(cfg, log); break;
            case Stage::communities: stage_communities(cfg, log); break;
            case Stage::demand: stage_demand(cfg, log); break;
            case Stage::correlate: stage_correlate(cfg, log); break;
            case Stage::report: stage_report(cfg, log); break;
        }
    }
}

}  // namespace labourflow::pipeline
