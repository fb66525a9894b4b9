#include <doctest.h>

#include <filesystem>

#include "sefkit/core.hpp"
#include "sefkit/error.hpp"
#include "sefkit/io.hpp"

using namespace sefkit;

TEST_SUITE_BEGIN("core");

namespace {

const char* kTwoLineCatalog =
    R"({"fact_id":"P36_Q183","relation_id":"P36","subject":{"label":"Germany","aliases":["Federal Republic of Germany"]},"object":{"label":"Berlin"}})"
    "\n"
    R"({"fact_id":"P176_Q3957","relation_id":"P176","subject":{"label":"Boeing 747"},"object":{"label":"Boeing Commercial Airplanes","aliases":["Boeing"]}})"
    "\n";

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("catalog parses well-formed lines") {
    const auto catalog = parse_fact_catalog(kTwoLineCatalog);
    REQUIRE(catalog.size() == 2);
    CHECK(catalog[0].fact_id == "P36_Q183");
    CHECK(catalog[0].subject.label == "Germany");
    CHECK(catalog[1].object.aliases.size() == 2);
}

TEST_CASE("catalog merges the label into the alias set") {
    const auto catalog = parse_fact_catalog(kTwoLineCatalog);
    const EntityRef& subject = catalog[0].subject;
    REQUIRE(subject.aliases.size() == 2);
    CHECK(subject.aliases[0] == "Germany");
    CHECK(subject.aliases[1] == "Federal Republic of Germany");
}

TEST_CASE("catalog drops alias duplicates case-insensitively") {
    const auto catalog = parse_fact_catalog(
        R"({"fact_id":"f","subject":{"label":"Boeing","aliases":["boeing","BOEING","Boeing Co"]},"object":{"label":"x"}})"
        "\n");
    CHECK(catalog[0].subject.aliases == std::vector<std::string>{"Boeing", "Boeing Co"});
}

TEST_CASE("catalog rejects duplicate fact ids by name") {
    const std::string text = std::string(kTwoLineCatalog) +
                             R"({"fact_id":"P36_Q183","subject":{"label":"a"},"object":{"label":"b"}})"
                             "\n";
    CHECK_THROWS_WITH_AS(parse_fact_catalog(text), doctest::Contains("P36_Q183"),
                         ValidationError);
}

TEST_CASE("catalog reports the failing line number") {
    const std::string text = std::string(kTwoLineCatalog) + "{not json\n";
    CHECK_THROWS_WITH_AS(parse_fact_catalog(text), doctest::Contains("line 3"), ParseError);
}

TEST_CASE("catalog round-trips") {
    const auto catalog = parse_fact_catalog(kTwoLineCatalog);
    const auto again = parse_fact_catalog(format_fact_catalog(catalog));
    CHECK(catalog == again);
}

TEST_CASE("frequency table round-trips with slices and manifest") {
    FrequencyTable table;
    table.counts = {{"a", 3}, {"b", 0}};
    table.slices = {{{"a", 1}, {"b", 0}}, {{"a", 2}, {"b", 0}}};
    table.validate();

    const std::string path = temp_path("sefkit_table_test.json");
    Json manifest;
    manifest["seed"] = 7;
    save_frequency_table(path, table, manifest);
    const FrequencyTable loaded = load_frequency_table(path);
    CHECK(loaded == table);

    // A bare counts object is accepted too.
    CHECK(frequency_table_from_json(Json::parse(R"({"a": 3, "b": 0})")).counts == table.counts);
}

TEST_CASE("frequency table rejects slice sums that miss the total") {
    FrequencyTable table;
    table.counts = {{"a", 3}};
    table.slices = {{{"a", 1}}, {{"a", 1}}};
    CHECK_THROWS_AS(table.validate(), ValidationError);
}

TEST_CASE("answer logs group by model and checkpoint and round-trip") {
    const char* text =
        R"({"model_id":"m1","checkpoint_id":"final","fact_id":"a","correct":true})"
        "\n"
        R"({"model_id":"m2","checkpoint_id":"0","fact_id":"a","correct":false})"
        "\n"
        R"({"model_id":"m1","checkpoint_id":"final","fact_id":"b","correct":false})"
        "\n";
    const auto logs = parse_answer_logs(text);
    REQUIRE(logs.size() == 2);
    CHECK(logs[0].model_id == "m1");
    CHECK(logs[0].records.size() == 2);
    CHECK(logs[0].correct_count() == 1);
    CHECK(logs[1].checkpoint_id == "0");

    Json manifest;
    manifest["seed"] = 1;
    const auto again = parse_answer_logs(format_answer_logs(logs, manifest));
    CHECK(again == logs);
}

TEST_CASE("answer logs reject duplicate records") {
    const char* text =
        R"({"model_id":"m","checkpoint_id":"final","fact_id":"a","correct":true})"
        "\n"
        R"({"model_id":"m","checkpoint_id":"final","fact_id":"a","correct":true})"
        "\n";
    CHECK_THROWS_AS(parse_answer_logs(text), ParseError);
}

TEST_CASE("validate_join is empty on identical id sets") {
    const auto catalog = parse_fact_catalog(kTwoLineCatalog);
    FrequencyTable table;
    table.counts = {{"P36_Q183", 1}, {"P176_Q3957", 2}};
    AnswerLog log{"m", "final", {{"P36_Q183", true}, {"P176_Q3957", false}}};
    const JoinReport report = validate_join(catalog, table, {log});
    CHECK(report.joinable());
    CHECK(report.to_json()["joinable"] == true);
}

TEST_CASE("validate_join names a log-only id") {
    FrequencyTable table;
    table.counts = {{"a", 1}};
    AnswerLog log{"m", "final", {{"a", true}, {"extra", false}}};
    const JoinReport report = validate_join({}, table, {log});
    REQUIRE(report.log_diffs.size() == 1);
    CHECK(report.log_diffs[0].log_not_in_table == std::vector<std::string>{"extra"});
    CHECK(report.log_diffs[0].table_not_in_log.empty());
}

TEST_CASE("validate_join names the single table-missing id") {
    std::vector<FactEntry> catalog;
    FrequencyTable table;
    for (int i = 0; i < 100; ++i) {
        FactEntry fact;
        fact.fact_id = "F" + std::to_string(i);
        fact.subject = {"", "s", {"s"}};
        fact.object = {"", "o", {"o"}};
        catalog.push_back(fact);
        if (i != 42) table.counts[fact.fact_id] = 1;
    }
    const JoinReport report = validate_join(catalog, table, {});
    CHECK(report.catalog_not_in_table == std::vector<std::string>{"F42"});
    CHECK(report.table_not_in_catalog.empty());
    CHECK_FALSE(report.joinable());
}

TEST_CASE("bucket spec invariants") {
    BucketSpec ok{{0, 1, 2, 4}};
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.upper(0) == Count{1});
    CHECK_FALSE(ok.upper(3).has_value());

    const BucketSpec starts_late{{1, 2}};
    const BucketSpec not_increasing{{0, 2, 2}};
    const BucketSpec empty{{}};
    CHECK_THROWS_AS(starts_late.validate(), ValidationError);
    CHECK_THROWS_AS(not_increasing.validate(), ValidationError);
    CHECK_THROWS_AS(empty.validate(), ValidationError);
}

TEST_SUITE_END();
