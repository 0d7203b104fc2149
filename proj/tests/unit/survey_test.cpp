#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "polalign/error.hpp"
#include "polalign/io.hpp"
#include "polalign/preference.hpp"
#include "polalign/survey.hpp"

using namespace polalign;
using nlohmann::json;

namespace {

json small_survey() {
    return json::parse(R"({
      "format_version": 1,
      "cases": [
        {"docket_id": "A1", "question_text": "Q1?", "choices": ["yes do", "no do not"],
         "keywords": ["alpha"], "decision_direction": "liberal"},
        {"docket_id": "B2", "question_text": "Q2?", "choices": ["allow", "forbid"],
         "keywords": ["beta"], "decision_direction": "conservative"}
      ],
      "group_responses": [
        {"docket_id": "A1", "group": "public", "pct_pro": 0.25},
        {"docket_id": "B2", "group": "public", "pct_pro": 0.75, "respondent_count": 900},
        {"docket_id": "A1", "group": "democrat", "pct_pro": 0.5}
      ],
      "court_votes": [
        {"docket_id": "A1", "votes_majority": 6, "votes_dissent": 3},
        {"docket_id": "B2", "votes_majority": 9, "votes_dissent": 0}
      ]
    })");
}

template <class F>
ValidationError validation_error(F&& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        return e;
    }
    FAIL("no ValidationError");
    return ValidationError("unreachable");
}

}  // namespace

TEST_CASE("bundled survey loads with 32 cases and complete groups") {
    const auto ds = load_survey(std::string(POLALIGN_DATA_DIR) + "/scope_survey.json");
    CHECK(ds.cases.size() == 32);
    CHECK(ds.group_responses.size() == 96);
    CHECK(ds.court_votes.size() == 32);
    const auto& c = ds.find_case("20A87");
    CHECK(c.pro_label() != c.opp_label());
    CHECK(group_distribution(ds, RespondentGroup::general_public).p_pro("20A87") == 0.536);
    CHECK(group_distribution(ds, RespondentGroup::republican).p_pro("20A87") == 0.774);
    CHECK(group_distribution(ds, RespondentGroup::democrat).p_pro("20A87") == 0.290);
    CHECK(ds.try_find_case("nope") == nullptr);
    CHECK_THROWS_AS(ds.find_case("nope"), ValidationError);
}

TEST_CASE("group and court distributions") {
    const auto ds = parse_survey(small_survey());
    const auto pub = group_distribution(ds, RespondentGroup::general_public);
    CHECK(pub.entity_id() == "public");
    CHECK(pub.kind() == EntityKind::human_group);
    CHECK(pub.rows()[0].p_opp() == 0.75);
    const auto dem = group_distribution(ds, RespondentGroup::democrat);
    CHECK(dem.present_count() == 1);
    CHECK_FALSE(dem.p_pro("B2").has_value());
    CHECK_THROWS_AS(group_distribution(ds, RespondentGroup::republican), InsufficientDataError);
    const auto court = court_distribution(ds);
    CHECK(court.p_pro("A1") == 6.0 / 9.0);
    CHECK(court.p_pro("B2") == 1.0);
    CHECK(court.kind() == EntityKind::court);
}

TEST_CASE("survey validation names the docket and field") {
    auto doc = small_survey();
    doc["cases"][1]["choices"][1] = "allow";
    auto e = validation_error([&] { parse_survey(doc); });
    CHECK(e.docket_id() == "B2");
    CHECK(e.field() == "choices");

    doc = small_survey();
    doc["group_responses"][0]["pct_pro"] = 1.2;
    e = validation_error([&] { parse_survey(doc); });
    CHECK(e.docket_id() == "A1");
    CHECK(e.field() == "pct_pro");

    doc = small_survey();
    doc["group_responses"].push_back({{"docket_id", "A1"}, {"group", "public"}, {"pct_pro", 0.3}});
    e = validation_error([&] { parse_survey(doc); });
    CHECK(e.field() == "group");

    doc = small_survey();
    doc["court_votes"][0]["votes_dissent"] = 6;
    e = validation_error([&] { parse_survey(doc); });
    CHECK(e.field() == "votes_majority");

    doc = small_survey();
    doc["cases"][0]["keywords"] = json::array();
    e = validation_error([&] { parse_survey(doc); });
    CHECK(e.field() == "keywords");

    doc = small_survey();
    doc["cases"][1]["docket_id"] = "A1";
    e = validation_error([&] { parse_survey(doc); });
    CHECK(e.field() == "docket_id");
}

TEST_CASE("malformed survey files raise ParseError") {
    CHECK_THROWS_AS(parse_survey(json::array()), ParseError);
    auto doc = small_survey();
    doc["cases"][0].erase("question_text");
    CHECK_THROWS_AS(parse_survey(doc), ParseError);
    doc = small_survey();
    doc["group_responses"][0]["group"] = "independent";
    CHECK_THROWS_AS(parse_survey(doc), ParseError);
}

TEST_CASE("court distribution lists every docket without a vote") {
    auto doc = small_survey();
    doc["court_votes"] = json::array();
    const auto ds = parse_survey(doc);
    auto e = validation_error([&] { court_distribution(ds); });
    CHECK(std::string(e.what()).find("A1") != std::string::npos);
    CHECK(std::string(e.what()).find("B2") != std::string::npos);
}

TEST_CASE("survey and distribution files round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "polalign_survey_test";
    std::filesystem::create_directories(dir);
    const auto ds = parse_survey(small_survey());
    save_survey(ds, dir / "s.json");
    CHECK(load_survey(dir / "s.json") == ds);

    const auto dem = group_distribution(ds, RespondentGroup::democrat);
    save_distribution(dem, (dir / "d.json").string(), {{"note", "x"}});
    CHECK(load_distribution((dir / "d.json").string()) == dem);
    std::filesystem::remove_all(dir);
}

TEST_CASE("CSV quoting round-trips") {
    CsvTable t;
    t.comments = {"hello"};
    t.header = {"a", "b"};
    t.rows = {{"plain", "with, comma"}, {"quote \"inside\"", "multi\nline"}};
    const auto back = parse_csv(format_csv(t));
    CHECK(back.comments == t.comments);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(back.column("b") == 1);
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(0.536) == "0.536");
    CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
    for (double v : {1.0 / 3.0, 3.5729166666666665, 1e-300, 6.0514480968435046e-05})
        CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("placeholders fill every occurrence") {
    CHECK(fill_placeholders("{a} and {b} and {a}", {{"a", "x"}, {"b", "{a}"}}) == "x and {a} and x");
}
