#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "labourflow/geo.hpp"
#include "labourflow/synth.hpp"
#include "support/temp_dir.hpp"

using labourflow::Error;
using labourflow::QuarterId;
using namespace labourflow::synth;

namespace {

Scenario small_scenario() {
    Scenario s;
    s.seed = 7;
    s.cities_per_tier = {{labourflow::geo::Tier::T1, 2}, {labourflow::geo::Tier::T3, 4}};
    s.n_provinces = 2;
    s.n_communities = 2;
    s.blackholes = {{0, 10}};
    s.flow_intensity = 2;
    s.intra_factor = 4;
    s.quarters = {{2020, 1}, {2020, 2}};
    s.categories = {"alpha-cat", "beta-cat"};
    s.demand_mixture = {
        {"T1", {{"alpha-cat", 0.5}, {"beta-cat", 0.5}}},
        {"T3", {{"alpha-cat", 0.25}, {"beta-cat", 0.75}}},
    };
    s.postings_per_city_quarter = 40;
    s.nonjob_noise = 0.10;
    s.province_only_noise = 0.05;
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("city ids are stable and ordinal-addressable") {
    CHECK(city_id_of(0) == "ctyAAA");
    CHECK(city_id_of(3) == "ctyAAD");
    CHECK(city_id_of(12) == "ctyAAM");
    CHECK(city_id_of(25) == "ctyAAZ");
    CHECK(city_id_of(26) == "ctyABA");
}

TEST_CASE("the default scenario is valid") {
    const Scenario s = Scenario::default_scenario();
    CHECK_NOTHROW(s.validate());
    CHECK(s.total_cities() == 52);
    CHECK(s.quarters.size() == 4);
    CHECK(s.categories.size() == 4);
}

TEST_CASE("scenario validation rejects bad plans") {
    const Scenario base = small_scenario();
    CHECK_NOTHROW(base.validate());

    SUBCASE("city counts") {
        Scenario s = base;
        s.cities_per_tier.clear();
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("cities_per_tier"), Error);
        s = base;
        s.cities_per_tier = {{labourflow::geo::Tier::T1, 1}};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("at least 2"), Error);
        s = base;
        s.cities_per_tier.push_back({labourflow::geo::Tier::T1, 3});
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("duplicate tier"), Error);
    }
    SUBCASE("communities and provinces") {
        Scenario s = base;
        s.n_communities = 0;
        CHECK_THROWS_AS(s.validate(), Error);
        s = base;
        s.n_communities = s.total_cities() + 1;
        CHECK_THROWS_AS(s.validate(), Error);
        s = base;
        s.n_provinces = 0;
        CHECK_THROWS_AS(s.validate(), Error);
    }
    SUBCASE("quarters must ascend strictly") {
        Scenario s = base;
        s.quarters = {{2020, 2}, {2020, 1}};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("ascending"), Error);
        s.quarters = {{2020, 1}, {2020, 1}};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("ascending"), Error);
        s.quarters.clear();
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("quarters"), Error);
    }
    SUBCASE("blackhole plans") {
        Scenario s = base;
        s.blackholes = {{99, 10}};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("out of range"), Error);
        s = base;
        s.blackholes = {{0, 0}};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("surplus"), Error);
        s = base;
        s.blackholes = {{0, 5}, {0, 7}};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("duplicate blackhole"), Error);
        s = base;
        s.blackholes.clear();
        for (std::size_t i = 0; i < 6; ++i) s.blackholes.push_back({i, 5});
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("no donors"), Error);
    }
    SUBCASE("demand mixture") {
        Scenario s = base;
        s.demand_mixture.erase("T3");
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("missing tier"), Error);
        s = base;
        s.demand_mixture["T1"]["ghost-cat"] = 0.0;
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("not declared"), Error);
        s = base;
        s.demand_mixture["T1"]["alpha-cat"] = -0.1;
        s.demand_mixture["T1"]["beta-cat"] = 1.1;
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("infeasible"), Error);
        s = base;
        s.demand_mixture["T1"]["alpha-cat"] = 0.7;  // sums to 1.2 now
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("sum to"), Error);
    }
    SUBCASE("noise and postings") {
        Scenario s = base;
        s.postings_per_city_quarter = -1;
        CHECK_THROWS_AS(s.validate(), Error);
        s = base;
        s.nonjob_noise = 1.0;
        CHECK_THROWS_AS(s.validate(), Error);
        s = base;
        s.province_only_noise = -0.01;
        CHECK_THROWS_AS(s.validate(), Error);
    }
}

TEST_CASE("generate writes a consistent corpus") {
    testsupport::TempDir tmp("synth-gen");
    const Scenario s = small_scenario();
    const GeneratedFiles files = generate(s, tmp.path());

    CHECK(std::filesystem::exists(files.registry));
    CHECK(std::filesystem::exists(files.queries));
    CHECK(std::filesystem::exists(files.postings));
    CHECK(std::filesystem::exists(files.indicators));
    CHECK(std::filesystem::exists(files.ground_truth));

    SUBCASE("the registry loads and covers the planned cities") {
        const auto reg = labourflow::geo::load_registry(files.registry);
        CHECK(reg.city_ids().size() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(reg.find(city_id_of(i)) != nullptr);
        }
    }
    SUBCASE("ground truth matches the plan") {
        const GroundTruth gt = GroundTruth::load(files.ground_truth);
        CHECK(gt.partition.size() == 6);
        for (const auto& [city, community] : gt.partition) {
            CHECK(community >= 0);
            CHECK(community < 2);
        }
        REQUIRE(gt.blackholes.size() == 1);
        CHECK(gt.blackholes.at(city_id_of(0)) == 10);
        CHECK(gt.mixture.at({"T1", "alpha-cat"}) == 0.5);
        CHECK(gt.mixture.at({"T3", "beta-cat"}) == 0.75);
        CHECK(gt.total_postings == 6u * 2u * 40u);
        CHECK(gt.total_queries > 0);

        // Planted surpluses are exact in the generator's own bookkeeping,
        // and flow is conserved per quarter.
        for (const QuarterId q : s.quarters) {
            double net_sum = 0.0;
            for (std::size_t i = 0; i < 6; ++i) {
                const auto it = gt.quarter_flow.find({q, city_id_of(i)});
                REQUIRE(it != gt.quarter_flow.end());
                const auto [inflow, outflow] = it->second;
                net_sum += inflow - outflow;
                if (i == 0) CHECK(inflow - outflow == 10.0);
            }
            CHECK(net_sum == 0.0);
        }
    }
    SUBCASE("generation is deterministic per seed") {
        testsupport::TempDir tmp2("synth-gen2");
        const GeneratedFiles again = generate(s, tmp2.path());
        CHECK(slurp(again.registry) == slurp(files.registry));
        CHECK(slurp(again.queries) == slurp(files.queries));
        CHECK(slurp(again.postings) == slurp(files.postings));
        CHECK(slurp(again.indicators) == slurp(files.indicators));
        CHECK(slurp(again.ground_truth) == slurp(files.ground_truth));
    }
    SUBCASE("the seed matters") {
        testsupport::TempDir tmp3("synth-gen3");
        Scenario other = s;
        other.seed = 8;
        const GeneratedFiles again = generate(other, tmp3.path());
        CHECK(slurp(again.queries) != slurp(files.queries));
    }
}

TEST_CASE("scenarios load from JSON with defaults for absent keys") {
    testsupport::TempDir tmp("synth-json");
    {
        std::ofstream out(tmp.file("scenario.json"));
        out << R"({
  "seed": 9,
  "cities_per_tier": [["T1", 2], ["T3", 3]],
  "n_provinces": 2,
  "n_communities": 2,
  "blackholes": [{"city_ordinal": 1, "surplus": 5}],
  "flow_intensity": 2,
  "quarters": ["2021Q1", "2021Q2"],
  "categories": ["x-cat", "y-cat"],
  "demand_mixture": {
    "T1": {"x-cat": 0.4, "y-cat": 0.6},
    "T3": {"x-cat": 0.7, "y-cat": 0.3}
  }
})";
    }
    const Scenario s = Scenario::from_json_file(tmp.file("scenario.json"));
    CHECK(s.seed == 9);
    CHECK(s.total_cities() == 5);
    CHECK(s.quarters == std::vector<QuarterId>{{2021, 1}, {2021, 2}});
    REQUIRE(s.blackholes.size() == 1);
    CHECK(s.blackholes[0].city_ordinal == 1);
    CHECK(s.blackholes[0].surplus == 5);
    CHECK(s.demand_mixture.at("T3").at("x-cat") == 0.7);
    // untouched keys keep their defaults
    CHECK(s.intra_factor == 5);
    CHECK(s.postings_per_city_quarter == 120);

    SUBCASE("unknown tiers are rejected") {
        std::ofstream out(tmp.file("tier.json"));
        out << R"({"cities_per_tier": [["T9", 2]]})";
        out.close();
        CHECK_THROWS_WITH_AS(Scenario::from_json_file(tmp.file("tier.json")),
                             doctest::Contains("unknown tier"), Error);
    }
    SUBCASE("the loaded scenario is validated") {
        std::ofstream out(tmp.file("bad.json"));
        out << R"({"quarters": ["2021Q2", "2021Q1"]})";
        out.close();
        CHECK_THROWS_WITH_AS(Scenario::from_json_file(tmp.file("bad.json")),
                             doctest::Contains("ascending"), Error);
    }
    SUBCASE("broken JSON carries the path") {
        std::ofstream out(tmp.file("broken.json"));
        out << "{oops";
        out.close();
        CHECK_THROWS_WITH_AS(Scenario::from_json_file(tmp.file("broken.json")),
                             doctest::Contains("broken.json"), Error);
    }
}

TEST_CASE("ground truth loader rejects bad rows") {
    testsupport::TempDir tmp("synth-gt");
    {
        std::ofstream out(tmp.file("gt.jsonl"));
        out << R"({"kind": "bogus"})" << "\n";
    }
    CHECK_THROWS_WITH_AS(GroundTruth::load(tmp.file("gt.jsonl")),
                         doctest::Contains("unknown ground-truth kind"), Error);
    {
        std::ofstream out(tmp.file("missing.jsonl"));
        out << R"({"community": 1})" << "\n";
    }
    CHECK_THROWS_WITH_AS(GroundTruth::load(tmp.file("missing.jsonl")),
                         doctest::Contains(":1"), Error);
}

}  // TEST_SUITE
