#include "labourflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>
#include <utility>

#include <json.hpp>

#include "labourflow/io_util.hpp"
#include "labourflow/matcher.hpp"
#include "labourflow/rng.hpp"

namespace labourflow::synth {

namespace {

// Fixed-width base-26 suffixes. Name prefixes differ per entry kind and all
// letters are uppercase, so no generated name is a substring of another and
// lowercase filler text can never collide with a place name.
std::string letters(std::size_t k, int width) {
    std::string s(static_cast<std::size_t>(width), 'A');
    for (int i = width - 1; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = static_cast<char>('A' + k % 26);
        k /= 26;
    }
    return s;
}

std::string province_id_of(std::size_t p) { return "prv" + letters(p, 2); }
std::string district_id_of(std::size_t d) { return "dst" + letters(d, 3); }

const char* const kDistractors[] = {"warehouse", "driver",  "night",  "shift",   "apply",
                                    "factory",   "line",    "team",   "start",   "today",
                                    "experience", "salary", "monthly", "urgent"};
constexpr std::size_t kNumDistractors = sizeof(kDistractors) / sizeof(kDistractors[0]);

std::string distract(std::uint64_t salt) {
    std::string s = kDistractors[(salt * 31 + 7) % kNumDistractors];
    s += ' ';
    s += kDistractors[(salt * 17 + 3) % kNumDistractors];
    return s;
}

constexpr double kHalf = 0.4;  // half-side of each city square, degrees
constexpr double kLat0 = 20.0;
constexpr double kLon0 = 100.0;

struct Layout {
    std::vector<geo::Tier> tier_of;
    std::vector<int> community_of;
    std::vector<int> province_of;
    std::vector<double> lat, lon;
    // per city: names of its districts (empty for most)
    std::vector<std::vector<std::string>> district_names;
    std::size_t n = 0;
};

// Integer split of `total` across categories by largest remainder.
std::vector<int> largest_remainder(const std::vector<double>& shares, int total) {
    const std::size_t m = shares.size();
    std::vector<int> base(m, 0);
    std::vector<std::pair<double, std::size_t>> frac(m);
    int assigned = 0;
    for (std::size_t c = 0; c < m; ++c) {
        const double exact = shares[c] * total;
        base[c] = static_cast<int>(std::floor(exact));
        frac[c] = {exact - std::floor(exact), c};
        assigned += base[c];
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int r = 0; r < total - assigned; ++r) base[frac[static_cast<std::size_t>(r)].second]++;
    return base;
}

}  // namespace

CityId city_id_of(std::size_t ordinal) { return "cty" + letters(ordinal, 3); }

int Scenario::total_cities() const {
    int total = 0;
    for (const auto& [tier, count] : cities_per_tier) total += count;
    return total;
}

void Scenario::validate() const {
    if (cities_per_tier.empty()) throw Error("scenario: cities_per_tier is empty");
    std::set<geo::Tier> seen_tiers;
    for (const auto& [tier, count] : cities_per_tier) {
        if (count < 0) throw Error("scenario: negative city count");
        if (!seen_tiers.insert(tier).second) {
            throw Error("scenario: duplicate tier in cities_per_tier");
        }
    }
    const int n = total_cities();
    if (n < 2) throw Error("scenario: needs at least 2 cities");
    if (n > 17576) throw Error("scenario: more than 17576 cities");
    if (n_provinces < 1) throw Error("scenario: n_provinces must be at least 1");
    if (n_communities < 1 || n_communities > n) {
        throw Error("scenario: n_communities must be in [1, city count]");
    }
    if (flow_intensity < 1) throw Error("scenario: flow_intensity must be at least 1");
    if (intra_factor < 1) throw Error("scenario: intra_factor must be at least 1");
    if (quarters.empty()) throw Error("scenario: quarters is empty");
    for (std::size_t i = 1; i < quarters.size(); ++i) {
        if (!(quarters[i - 1] < quarters[i])) {
            throw Error("scenario: quarters must be strictly ascending");
        }
    }
    std::set<std::size_t> bh_seen;
    for (const auto& bh : blackholes) {
        if (bh.city_ordinal >= static_cast<std::size_t>(n)) {
            throw Error("scenario: blackhole ordinal out of range");
        }
        if (bh.surplus < 1) throw Error("scenario: blackhole surplus must be positive");
        if (!bh_seen.insert(bh.city_ordinal).second) {
            throw Error("scenario: duplicate blackhole city");
        }
    }
    if (blackholes.size() >= static_cast<std::size_t>(n)) {
        throw Error("scenario: every city is a blackhole; no donors left");
    }
    if (categories.empty()) throw Error("scenario: categories is empty");
    if (std::set<std::string>(categories.begin(), categories.end()).size() !=
        categories.size()) {
        throw Error("scenario: duplicate category");
    }
    for (const auto& [tier, count] : cities_per_tier) {
        if (count == 0) continue;
        const auto it = demand_mixture.find(std::string(geo::to_string(tier)));
        if (it == demand_mixture.end()) {
            throw Error("scenario: demand_mixture missing tier " +
                        std::string(geo::to_string(tier)));
        }
        double sum = 0.0;
        for (const auto& [category, share] : it->second) {
            if (std::find(categories.begin(), categories.end(), category) ==
                categories.end()) {
                throw Error("scenario: mixture category '" + category + "' not declared");
            }
            if (share < 0.0) {
                throw Error("scenario: infeasible demand mixture (negative share)");
            }
            sum += share;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw Error("scenario: mixture shares for tier " +
                        std::string(geo::to_string(tier)) + " sum to " +
                        io::format_double(sum) + ", expected 1");
        }
    }
    if (postings_per_city_quarter < 0) {
        throw Error("scenario: postings_per_city_quarter must be non-negative");
    }
    if (nonjob_noise < 0.0 || nonjob_noise >= 1.0 || province_only_noise < 0.0 ||
        province_only_noise >= 1.0) {
        throw Error("scenario: noise fractions must be in [0, 1)");
    }
}

Scenario Scenario::default_scenario() {
    Scenario s;
    s.seed = 1;
    s.cities_per_tier = {{geo::Tier::T1, 2},  {geo::Tier::NewT1, 4}, {geo::Tier::T2, 6},
                         {geo::Tier::T3, 10}, {geo::Tier::T4, 14},  {geo::Tier::T5, 16}};
    s.n_provinces = 4;
    s.n_communities = 4;
    s.blackholes = {{0, 120}, {3, 80}, {12, 60}};
    s.flow_intensity = 3;
    s.intra_factor = 5;
    s.quarters = {{2019, 4}, {2020, 1}, {2020, 2}, {2020, 3}};
    s.categories = {"manufacture", "express", "passenger-transport", "white-collar"};
    s.demand_mixture = {
        {"T1", {{"manufacture", 0.15}, {"express", 0.20}, {"passenger-transport", 0.10}, {"white-collar", 0.55}}},
        {"NewT1", {{"manufacture", 0.20}, {"express", 0.20}, {"passenger-transport", 0.15}, {"white-collar", 0.45}}},
        {"T2", {{"manufacture", 0.30}, {"express", 0.20}, {"passenger-transport", 0.15}, {"white-collar", 0.35}}},
        {"T3", {{"manufacture", 0.40}, {"express", 0.20}, {"passenger-transport", 0.15}, {"white-collar", 0.25}}},
        {"T4", {{"manufacture", 0.50}, {"express", 0.18}, {"passenger-transport", 0.12}, {"white-collar", 0.20}}},
        {"T5", {{"manufacture", 0.60}, {"express", 0.15}, {"passenger-transport", 0.10}, {"white-collar", 0.15}}},
    };
    s.postings_per_city_quarter = 120;
    s.nonjob_noise = 0.20;
    s.province_only_noise = 0.05;
    return s;
}

Scenario Scenario::from_json_file(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    Scenario s = default_scenario();
    try {
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("cities_per_tier")) {
            s.cities_per_tier.clear();
            for (const auto& entry : j.at("cities_per_tier")) {
                const auto name = entry.at(0).get<std::string>();
                const auto tier = geo::tier_from(name);
                if (!tier) throw Error(path.string() + ": unknown tier '" + name + "'");
                s.cities_per_tier.emplace_back(*tier, entry.at(1).get<int>());
            }
        }
        if (j.contains("n_provinces")) s.n_provinces = j.at("n_provinces").get<int>();
        if (j.contains("n_communities")) s.n_communities = j.at("n_communities").get<int>();
        if (j.contains("blackholes")) {
            s.blackholes.clear();
            for (const auto& entry : j.at("blackholes")) {
                s.blackholes.push_back({entry.at("city_ordinal").get<std::size_t>(),
                                        entry.at("surplus").get<int>()});
            }
        }
        if (j.contains("flow_intensity")) s.flow_intensity = j.at("flow_intensity").get<int>();
        if (j.contains("intra_factor")) s.intra_factor = j.at("intra_factor").get<int>();
        if (j.contains("quarters")) {
            s.quarters.clear();
            for (const auto& q : j.at("quarters")) {
                s.quarters.push_back(QuarterId::parse(q.get<std::string>()));
            }
        }
        if (j.contains("categories")) {
            s.categories = j.at("categories").get<std::vector<std::string>>();
        }
        if (j.contains("demand_mixture")) {
            s.demand_mixture.clear();
            for (const auto& [tier, shares] : j.at("demand_mixture").items()) {
                for (const auto& [category, share] : shares.items()) {
                    s.demand_mixture[tier][category] = share.get<double>();
                }
            }
        }
        if (j.contains("postings_per_city_quarter")) {
            s.postings_per_city_quarter = j.at("postings_per_city_quarter").get<int>();
        }
        if (j.contains("nonjob_noise")) s.nonjob_noise = j.at("nonjob_noise").get<double>();
        if (j.contains("province_only_noise")) {
            s.province_only_noise = j.at("province_only_noise").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    s.validate();
    return s;
}

namespace {

std::vector<geo::City> build_registry_entries(const Scenario& s, Layout& layout,
                                              match::PlaceDictionary::PatternTable* alias_pools) {
    const auto n = static_cast<std::size_t>(s.total_cities());
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    layout.n = n;
    layout.tier_of.reserve(n);
    for (const auto& [tier, count] : s.cities_per_tier) {
        for (int c = 0; c < count; ++c) layout.tier_of.push_back(tier);
    }
    layout.community_of.resize(n);
    layout.province_of.resize(n);
    layout.lat.resize(n);
    layout.lon.resize(n);
    layout.district_names.resize(n);

    std::vector<geo::City> entries;
    std::vector<std::string> district_ids;  // aligned with a flat district list
    std::vector<std::size_t> district_parent;

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t row = k / cols, col = k % cols;
        const double lat = kLat0 + static_cast<double>(row);
        const double lon = kLon0 + static_cast<double>(col);
        layout.lat[k] = lat;
        layout.lon[k] = lon;
        layout.community_of[k] =
            static_cast<int>(k * static_cast<std::size_t>(s.n_communities) / n);
        layout.province_of[k] = static_cast<int>(k % static_cast<std::size_t>(s.n_provinces));

        geo::City c;
        c.city_id = city_id_of(k);
        c.official_name = "Ct" + letters(k, 3);
        c.province_id = province_id_of(static_cast<std::size_t>(layout.province_of[k]));
        c.admin_level = geo::AdminLevel::prefecture_city;
        c.tier = layout.tier_of[k];
        c.centroid = {lat, lon};
        c.polygon = {{{lat - kHalf, lon - kHalf},
                      {lat - kHalf, lon + kHalf},
                      {lat + kHalf, lon + kHalf},
                      {lat + kHalf, lon - kHalf},
                      {lat - kHalf, lon - kHalf}}};
        entries.push_back(std::move(c));

        if (k % 3 == 0) {
            // Two districts halving the city square north/south.
            for (int half = 0; half < 2; ++half) {
                const std::size_t d = district_ids.size();
                geo::City dist;
                dist.city_id = district_id_of(d);
                dist.official_name = "Dt" + letters(d, 4);
                dist.province_id = entries.back().province_id;
                dist.admin_level = geo::AdminLevel::district;
                dist.tier = layout.tier_of[k];
                dist.parent_city_id = city_id_of(k);
                if (half == 0) {
                    dist.centroid = {lat + kHalf / 2, lon};
                    dist.polygon = {{{lat, lon - kHalf},
                                     {lat, lon + kHalf},
                                     {lat + kHalf, lon + kHalf},
                                     {lat + kHalf, lon - kHalf},
                                     {lat, lon - kHalf}}};
                } else {
                    dist.centroid = {lat - kHalf / 2, lon};
                    dist.polygon = {{{lat - kHalf, lon - kHalf},
                                     {lat - kHalf, lon + kHalf},
                                     {lat, lon + kHalf},
                                     {lat, lon - kHalf},
                                     {lat - kHalf, lon - kHalf}}};
                }
                layout.district_names[k].push_back(dist.official_name);
                district_ids.push_back(dist.city_id);
                district_parent.push_back(k);
                entries.push_back(std::move(dist));
            }
        }
    }

    // Provinces: name-matchable but never a coordinate origin.
    for (std::size_t p = 0; p < static_cast<std::size_t>(s.n_provinces); ++p) {
        geo::City prov;
        prov.city_id = province_id_of(p);
        prov.official_name = "Pv" + letters(p, 2);
        prov.province_id = prov.city_id;
        prov.admin_level = geo::AdminLevel::province;
        prov.tier = geo::Tier::T5;
        double lat_sum = 0.0, lon_sum = 0.0;
        std::size_t members = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (static_cast<std::size_t>(layout.province_of[k]) != p) continue;
            lat_sum += layout.lat[k];
            lon_sum += layout.lon[k];
            ++members;
        }
        if (members > 0) {
            prov.centroid = {lat_sum / static_cast<double>(members),
                             lon_sum / static_cast<double>(members)};
        }
        entries.push_back(std::move(prov));
    }

    // Ambiguous aliases: each shared by two entries so that resolving one
    // exercises the priority rules. A third of them pair districts with
    // different parent cities (the same-district-name situation).
    const std::size_t n_alias = std::max<std::size_t>(4, n / 10);
    std::unordered_map<std::string, std::size_t> entry_index;
    for (std::size_t i = 0; i < entries.size(); ++i) entry_index[entries[i].city_id] = i;
    for (std::size_t a = 0; a < n_alias; ++a) {
        const std::string alias = "Al" + letters(a, 3);
        std::vector<std::string> target_ids;
        if (a % 3 == 2 && district_ids.size() >= 2) {
            std::size_t d1 = (3 * a) % district_ids.size();
            std::size_t d2 = (3 * a + 1) % district_ids.size();
            while (district_parent[d2] == district_parent[d1]) {
                d2 = (d2 + 1) % district_ids.size();
            }
            target_ids = {district_ids[d1], district_ids[d2]};
        } else if (a % 3 == 1 && !district_ids.empty()) {
            const std::size_t k1 = (5 * a + 2) % n;
            std::size_t d = a % district_ids.size();
            while (district_parent[d] == k1) d = (d + 1) % district_ids.size();
            target_ids = {city_id_of(k1), district_ids[d]};
        } else {
            const std::size_t k1 = (7 * a + 1) % n;
            std::size_t k2 = (13 * a + 3) % n;
            while (k2 == k1) k2 = (k2 + 1) % n;
            target_ids = {city_id_of(k1), city_id_of(k2)};
        }
        std::vector<CityId> pool;
        for (const std::string& id : target_ids) {
            entries[entry_index.at(id)].aliases.push_back(alias);
            pool.push_back(id);
        }
        alias_pools->emplace_back(alias, std::move(pool));
    }
    return entries;
}

nlohmann::json city_to_json(const geo::City& c) {
    nlohmann::json j;
    j["city_id"] = c.city_id;
    j["official_name"] = c.official_name;
    if (!c.aliases.empty()) j["aliases"] = c.aliases;
    j["province_id"] = c.province_id;
    j["admin_level"] = std::string(geo::to_string(c.admin_level));
    j["tier"] = std::string(geo::to_string(c.tier));
    j["centroid"] = {c.centroid.lat, c.centroid.lon};
    if (!c.polygon.empty()) {
        nlohmann::json rings = nlohmann::json::array();
        for (const auto& ring : c.polygon) {
            nlohmann::json flat = nlohmann::json::array();
            for (const auto& v : ring) {
                flat.push_back(v.lat);
                flat.push_back(v.lon);
            }
            rings.push_back(std::move(flat));
        }
        j["polygon"] = std::move(rings);
    }
    if (c.parent_city_id) j["parent_city_id"] = *c.parent_city_id;
    return j;
}

}  // namespace

GeneratedFiles generate(const Scenario& s, const std::filesystem::path& out_dir) {
    s.validate();
    std::filesystem::create_directories(out_dir);

    Layout layout;
    match::PlaceDictionary::PatternTable alias_pools;
    std::vector<geo::City> entries = build_registry_entries(s, layout, &alias_pools);

    std::string registry_text;
    for (const geo::City& c : entries) {
        registry_text += city_to_json(c).dump();
        registry_text += '\n';
    }
    const geo::Registry registry(std::move(entries));

    const std::size_t n = layout.n;
    std::vector<std::string> city_names(n);
    for (std::size_t k = 0; k < n; ++k) city_names[k] = registry.at(city_id_of(k)).official_name;
    std::unordered_map<CityId, std::size_t> ordinal_of;
    for (std::size_t k = 0; k < n; ++k) ordinal_of[city_id_of(k)] = k;

    std::set<std::size_t> blackhole_set;
    for (const auto& bh : s.blackholes) blackhole_set.insert(bh.city_ordinal);
    std::vector<std::size_t> donors;
    for (std::size_t k = 0; k < n; ++k) {
        if (!blackhole_set.contains(k)) donors.push_back(k);
    }

    Rng rng(s.seed);
    std::string queries;
    std::uint64_t gid = 0;          // global record counter, also the ref token
    std::uint64_t total_queries = 0;
    // Per-quarter expected OD counts of every resolvable emitted record.
    std::vector<std::vector<double>> expected(s.quarters.size(),
                                              std::vector<double>(n * n, 0.0));

    const auto append_query = [&](std::int64_t ts, double lat, double lon,
                                  const std::string& text, const std::string& clicked) {
        queries += std::to_string(ts);
        queries += '\t';
        queries += io::format_double(lat);
        queries += '\t';
        queries += io::format_double(lon);
        queries += '\t';
        queries += text;
        queries += '\t';
        queries += clicked;
        queries += '\n';
        ++total_queries;
    };

    for (std::size_t qi = 0; qi < s.quarters.size(); ++qi) {
        const std::int64_t qstart = quarter_start_epoch(s.quarters[qi]);
        const int mult = 1 + static_cast<int>(qi % 2);
        std::uint64_t in_quarter = 0;
        const auto next_ts = [&]() {
            ++in_quarter;
            return qstart + static_cast<std::int64_t>(in_quarter % 89) * 86400 +
                   static_cast<std::int64_t>((in_quarter * 7919) % 86400);
        };
        const auto jittered = [&](std::size_t k) {
            return std::pair<double, double>{
                layout.lat[k] + rng.uniform(-0.3, 0.3),
                layout.lon[k] + rng.uniform(-0.3, 0.3)};
        };

        std::uint64_t baseline_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const bool intra = layout.community_of[i] == layout.community_of[j];
                const int count = s.flow_intensity * (intra ? s.intra_factor : 1) * mult;
                for (int r = 0; r < count; ++r) {
                    ++gid;
                    ++baseline_count;
                    const std::int64_t ts = next_ts();
                    const auto [plat, plon] = jittered(i);

                    // Mention the destination by district name now and then
                    // to exercise the roll-up path; the resolved city is
                    // identical either way.
                    std::string mention = city_names[j];
                    if (gid % 11 == 0 && !layout.district_names[j].empty()) {
                        mention = layout.district_names[j][(gid / 11) %
                                                           layout.district_names[j].size()];
                    }
                    std::string text, clicked;
                    if (gid % 7 == 0) {
                        // Keyword and destination only in the clicked title.
                        text = distract(gid) + " ref" + std::to_string(gid);
                        clicked = "recruitment " + mention;
                    } else {
                        text = "recruitment " + mention + " ref" + std::to_string(gid);
                        if (gid % 3 == 0) clicked = distract(gid + 1);
                    }
                    append_query(ts, plat, plon, text, clicked);
                    expected[qi][i * n + j] += 1.0;
                    if (gid % 50 == 0) {
                        // Exact duplicate: survives filtering, dies in dedup.
                        append_query(ts, plat, plon, text, clicked);
                    }
                }
            }
        }

        // Planted black holes: a constant per-quarter surplus donated by the
        // non-blackhole cities round-robin, so net inflow is exact.
        for (const auto& bh : s.blackholes) {
            for (int t = 0; t < bh.surplus; ++t) {
                ++gid;
                const std::size_t donor =
                    donors[(static_cast<std::size_t>(t) + qi) % donors.size()];
                const std::int64_t ts = next_ts();
                const auto [plat, plon] = jittered(donor);
                append_query(ts, plat, plon,
                             "recruitment " + city_names[bh.city_ordinal] + " ref" +
                                 std::to_string(gid),
                             "");
                expected[qi][donor * n + bh.city_ordinal] += 1.0;
            }
        }

        // Ambiguous-alias queries, each balanced by a reverse record naming
        // the first origin explicitly so no city's net flow moves.
        for (std::size_t ai = 0; ai < alias_pools.size(); ++ai) {
            const auto& [alias, pool] = alias_pools[ai];
            std::size_t o = (5 * ai + qi) % n;
            std::size_t dest = n;  // ordinal of the resolved city
            for (std::size_t tries = 0; tries <= n; ++tries) {
                const CityId resolved = match::disambiguate(pool, city_id_of(o), registry);
                const geo::City& rc = registry.at(resolved);
                const CityId dest_city =
                    rc.admin_level == geo::AdminLevel::district ? *rc.parent_city_id : resolved;
                if (dest_city != city_id_of(o)) {
                    dest = ordinal_of.at(dest_city);
                    break;
                }
                o = (o + 1) % n;
            }
            if (dest == n) continue;  // no usable origin; skip this alias
            ++gid;
            {
                const std::int64_t ts = next_ts();
                const auto [plat, plon] = jittered(o);
                append_query(ts, plat, plon,
                             "job hunting " + alias + " ref" + std::to_string(gid), "");
                expected[qi][o * n + dest] += 1.0;
            }
            ++gid;
            {
                const std::int64_t ts = next_ts();
                const auto [plat, plon] = jittered(dest);
                append_query(ts, plat, plon,
                             "recruitment " + city_names[o] + " ref" + std::to_string(gid),
                             "");
                expected[qi][dest * n + o] += 1.0;
            }
        }

        // Noise: job queries naming only a province (destination drop),
        // non-job queries (keyword filter drop), and a few out-of-territory
        // coordinates (origin drop). None of them reach the flow graph.
        const auto n_prov =
            static_cast<std::uint64_t>(s.province_only_noise * static_cast<double>(baseline_count));
        for (std::uint64_t t = 0; t < n_prov; ++t) {
            ++gid;
            const std::size_t o = t % n;
            const auto prov = "Pv" + letters(t % static_cast<std::size_t>(s.n_provinces), 2);
            const std::int64_t ts = next_ts();
            const auto [plat, plon] = jittered(o);
            append_query(ts, plat, plon,
                         "recruitment " + prov + " ref" + std::to_string(gid), "");
        }
        const auto n_nonjob =
            static_cast<std::uint64_t>(s.nonjob_noise * static_cast<double>(baseline_count));
        for (std::uint64_t t = 0; t < n_nonjob; ++t) {
            ++gid;
            const std::size_t o = (t * 3 + 1) % n;
            const std::int64_t ts = next_ts();
            const auto [plat, plon] = jittered(o);
            std::string text = distract(gid);
            if (t % 2 == 0) text += " " + city_names[(o + 5) % n];
            text += " ref" + std::to_string(gid);
            append_query(ts, plat, plon, text, t % 4 == 0 ? distract(gid + 2) : "");
        }
        const std::uint64_t n_lost = baseline_count / 200;
        for (std::uint64_t t = 0; t < n_lost; ++t) {
            ++gid;
            const std::int64_t ts = next_ts();
            append_query(ts, kLat0 + 0.5, kLon0 + 0.5,
                         "recruitment " + city_names[t % n] + " ref" + std::to_string(gid),
                         "");
        }
    }

    // Postings: per (city, quarter), split the posting budget over the
    // planted mixture of the city's tier.  Every title carries the
    // category's anchor word plus one random word from its private pool,
    // so titles of one category share a dominant vector component and
    // clustering can separate the categories cleanly.
    std::string postings;
    std::uint64_t total_postings = 0;
    std::uint64_t pid = 0;
    std::map<std::string, std::vector<std::string>> category_pool;
    for (const std::string& category : s.categories) {
        auto& pool = category_pool[category];
        for (int w = 0; w < 6; ++w) pool.push_back(category + "-w" + std::to_string(w));
    }
    for (std::size_t qi = 0; qi < s.quarters.size(); ++qi) {
        const std::int64_t qstart = quarter_start_epoch(s.quarters[qi]);
        for (std::size_t k = 0; k < n; ++k) {
            const auto& shares_map =
                s.demand_mixture.at(std::string(geo::to_string(layout.tier_of[k])));
            std::vector<double> shares;
            for (const std::string& category : s.categories) {
                const auto it = shares_map.find(category);
                shares.push_back(it == shares_map.end() ? 0.0 : it->second);
            }
            const std::vector<int> counts =
                largest_remainder(shares, s.postings_per_city_quarter);
            for (std::size_t c = 0; c < s.categories.size(); ++c) {
                const auto& pool = category_pool.at(s.categories[c]);
                for (int r = 0; r < counts[c]; ++r) {
                    ++pid;
                    const std::int64_t ts =
                        qstart + static_cast<std::int64_t>(pid % 89) * 86400 +
                        static_cast<std::int64_t>((pid * 104729) % 86400);
                    std::string title = pool.front();
                    title += ' ';
                    title += pool[rng.uniform_int(pool.size())];
                    title += " fillerone fillertwo fillerthree";
                    if (pid % 17 == 0) title += " x";
                    if (pid % 100 == 0) title += " zz" + std::to_string(pid);
                    postings += std::to_string(ts);
                    postings += '\t';
                    postings += city_id_of(k);
                    postings += '\t';
                    postings += title;
                    postings += "\tapply today ref";
                    postings += std::to_string(pid);
                    postings += '\n';
                    ++total_postings;
                }
            }
        }
    }

    // Indicator: a prosperity score linear in the first quarter's planted
    // net inflow, so the correlation stage has real signal to find.
    std::string indicators;
    for (std::size_t k = 0; k < n; ++k) {
        double inflow = 0.0, outflow = 0.0;
        for (std::size_t o = 0; o < n; ++o) {
            inflow += expected[0][o * n + k];
            outflow += expected[0][k * n + o];
        }
        const double value = 1000.0 + 10.0 * (inflow - outflow) + rng.uniform(0.0, 1.0);
        indicators += city_id_of(k);
        indicators += "\tprosperity\t";
        indicators += io::format_double(value);
        indicators += '\n';
    }

    std::string truth;
    {
        nlohmann::json totals;
        totals["kind"] = "totals";
        totals["queries"] = total_queries;
        totals["postings"] = total_postings;
        truth += totals.dump();
        truth += '\n';
    }
    for (std::size_t k = 0; k < n; ++k) {
        nlohmann::json j;
        j["kind"] = "partition";
        j["city_id"] = city_id_of(k);
        j["community"] = layout.community_of[k];
        truth += j.dump();
        truth += '\n';
    }
    for (const auto& bh : s.blackholes) {
        nlohmann::json j;
        j["kind"] = "blackhole";
        j["city_id"] = city_id_of(bh.city_ordinal);
        j["surplus"] = bh.surplus;
        truth += j.dump();
        truth += '\n';
    }
    for (std::size_t qi = 0; qi < s.quarters.size(); ++qi) {
        for (std::size_t k = 0; k < n; ++k) {
            double inflow = 0.0, outflow = 0.0;
            for (std::size_t o = 0; o < n; ++o) {
                inflow += expected[qi][o * n + k];
                outflow += expected[qi][k * n + o];
            }
            nlohmann::json j;
            j["kind"] = "quarter_flow";
            j["quarter"] = s.quarters[qi].str();
            j["city_id"] = city_id_of(k);
            j["inflow"] = static_cast<std::int64_t>(inflow);
            j["outflow"] = static_cast<std::int64_t>(outflow);
            truth += j.dump();
            truth += '\n';
        }
    }
    for (const auto& [tier, shares] : s.demand_mixture) {
        for (const auto& [category, share] : shares) {
            nlohmann::json j;
            j["kind"] = "mixture";
            j["tier"] = tier;
            j["category"] = category;
            j["share"] = share;
            truth += j.dump();
            truth += '\n';
        }
    }

    GeneratedFiles files;
    files.registry = out_dir / "registry.jsonl";
    files.queries = out_dir / "queries.tsv";
    files.postings = out_dir / "postings.tsv";
    files.indicators = out_dir / "indicators.tsv";
    files.ground_truth = out_dir / "ground_truth.jsonl";
    io::atomic_write(files.registry, registry_text);
    io::atomic_write(files.queries, queries);
    io::atomic_write(files.postings, postings);
    io::atomic_write(files.indicators, indicators);
    io::atomic_write(files.ground_truth, truth);
    return files;
}

GroundTruth GroundTruth::load(const std::filesystem::path& path) {
    GroundTruth gt;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "totals") {
                gt.total_queries = j.at("queries").get<std::uint64_t>();
                gt.total_postings = j.at("postings").get<std::uint64_t>();
            } else if (kind == "partition") {
                gt.partition[j.at("city_id").get<std::string>()] =
                    j.at("community").get<int>();
            } else if (kind == "blackhole") {
                gt.blackholes[j.at("city_id").get<std::string>()] =
                    j.at("surplus").get<int>();
            } else if (kind == "quarter_flow") {
                const QuarterId q = QuarterId::parse(j.at("quarter").get<std::string>());
                gt.quarter_flow[{q, j.at("city_id").get<std::string>()}] = {
                    j.at("inflow").get<double>(), j.at("outflow").get<double>()};
            } else if (kind == "mixture") {
                gt.mixture[{j.at("tier").get<std::string>(),
                            j.at("category").get<std::string>()}] =
                    j.at("share").get<double>();
            } else {
                throw Error("unknown ground-truth kind '" + kind + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return gt;
}

}  // namespace labourflow::synth
