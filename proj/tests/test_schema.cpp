#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncpp/schema.hpp"
#include "test_common.hpp"

using namespace ncpp;

TEST_CASE("default schema has the published group layout") {
    auto s = default_schema();
    CHECK(s.size() == 35);
    CHECK(s.count(FeatureKind::Numeric) == 29);
    CHECK(s.count(FeatureKind::Categorical) == 6);

    auto p = group_partition(s);
    CHECK(p.memory.size() == 7);
    CHECK(p.cpu.size() == 20);
    CHECK(p.other.size() == 2);
    CHECK(p.chars.size() == 6);
    CHECK(GroupPartition::names() == std::vector<std::string>{"memory", "cpu", "other", "char"});

    // every feature lands in exactly one partition bucket
    std::set<int> seen;
    for (const auto* grp : p.all())
        for (int i : *grp) CHECK(seen.insert(i).second);
    CHECK(static_cast<int>(seen.size()) == s.size());
}

TEST_CASE("categorical features always route to the char group") {
    FeatureSchema s;
    s.features.push_back({"m_num", FeatureKind::Numeric, FeatureGroup::Memory, ""});
    s.features.push_back({"m_cat", FeatureKind::Categorical, FeatureGroup::Memory, ""});
    s.features.push_back({"c_cat", FeatureKind::Categorical, FeatureGroup::Cpu, ""});
    s.features.push_back({"w_num", FeatureKind::Numeric, FeatureGroup::Workload, ""});
    auto p = group_partition(s);
    CHECK(p.memory == std::vector<int>{0});
    CHECK(p.chars == std::vector<int>{1, 2});
    CHECK(p.other == std::vector<int>{3}); // numeric Workload falls through to Other
    CHECK(p.cpu.empty());
}

TEST_CASE("built-in suites carry the published benchmark counts") {
    auto suites = default_suites();
    REQUIRE(suites.size() == 6);
    CHECK(find_suite("SPECrate2017_int_base").output_dim() == 11);
    CHECK(find_suite("SPECrate2017_fp_base").output_dim() == 14);
    CHECK(find_suite("MLC_Latency").output_dim() == 9);
    CHECK(find_suite("MLC_Bandwidth").output_dim() == 9);
    CHECK(find_suite("Stream").output_dim() == 4);
    CHECK(find_suite("HPCG").output_dim() == 1);
    CHECK(find_suite("Stream").benchmarks ==
          std::vector<std::string>{"Copy", "Scale", "Sum", "Triad"});
    CHECK_THROWS_AS(find_suite("nope"), DataError);
}

TEST_CASE("schema validation rejects duplicates and empty names") {
    FeatureSchema s;
    s.features.push_back({"x", FeatureKind::Numeric, FeatureGroup::Cpu, ""});
    s.features.push_back({"x", FeatureKind::Numeric, FeatureGroup::Cpu, ""});
    CHECK_THROWS_AS(s.validate(), DataError);
    FeatureSchema e;
    e.features.push_back({"", FeatureKind::Numeric, FeatureGroup::Cpu, ""});
    CHECK_THROWS_AS(e.validate(), DataError);
}

TEST_CASE("schema JSON round trip preserves every field") {
    auto s = default_schema();
    auto back = schema_from_json(schema_to_json(s));
    REQUIRE(back.size() == s.size());
    for (int i = 0; i < s.size(); ++i) {
        CHECK(back.features[i].name == s.features[i].name);
        CHECK(back.features[i].kind == s.features[i].kind);
        CHECK(back.features[i].group == s.features[i].group);
        CHECK(back.features[i].unit == s.features[i].unit);
    }
    CHECK(s.index_of("TDP") >= 0);
    CHECK(s.index_of("missing") == -1);

    const std::string path = testutil::temp_dir("schema") + "/schema.json";
    save_schema(s, path);
    CHECK(load_schema(path).size() == 35);
    CHECK_THROWS_AS(load_schema("/nonexistent/schema.json"), IoError);
    CHECK_THROWS_AS(kind_from_string("weird"), DataError);
    CHECK_THROWS_AS(group_from_string("weird"), DataError);
}
