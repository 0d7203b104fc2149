#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include <json.hpp>

#include "polalign/error.hpp"
#include "polalign/io.hpp"
#include "polalign/llm_client.hpp"
#include "polalign/stance.hpp"
#include "polalign/survey.hpp"

using namespace polalign;
using namespace polalign::stance;

namespace {

StanceRecord rec(std::string doc, StanceStatus status, int score = 0) {
    StanceRecord r;
    r.doc_id = std::move(doc);
    r.docket_id = "D";
    r.corpus_id = "c";
    r.judge_model_id = "j";
    r.status = status;
    r.score = score;
    return r;
}

SurveyCase sample_case() {
    SurveyCase c;
    c.docket_id = "D";
    c.case_name = "Doe v. Roe";
    c.question_text = "Should the law apply?";
    c.choices = {"It applies", "It does not apply"};
    c.keywords = {"law"};
    return c;
}

}  // namespace

TEST_CASE("judge outputs parse per the fixture") {
    const auto doc = read_json_file(std::string(POLALIGN_TEST_DATA_DIR) + "/judge_outputs.json");
    REQUIRE(doc.at("items").size() == 20);
    for (const auto& item : doc.at("items")) {
        const auto text = item.at("text").get<std::string>();
        const auto p = parse_judge_output(text);
        INFO("text: " << text);
        CHECK(to_string(p.status) == item.at("status").get<std::string>());
        if (p.status == StanceStatus::scored) CHECK(p.score == item.at("score").get<int>());
    }
}

TEST_CASE("likert transform") {
    CHECK(likert_to_probability(1.0) == 0.0);
    CHECK(likert_to_probability(3.0) == 0.5);
    CHECK(likert_to_probability(5.0) == 1.0);
    CHECK(likert_to_probability(3.57) == doctest::Approx(0.6425).epsilon(1e-15));
    CHECK_THROWS_AS(likert_to_probability(0.99), DomainError);
    CHECK_THROWS_AS(likert_to_probability(5.01), DomainError);
}

TEST_CASE("percentile interpolates linearly") {
    const std::vector<double> v = {4, 1, 3, 2, 5};
    CHECK(percentile(v, 0) == 1.0);
    CHECK(percentile(v, 100) == 5.0);
    CHECK(percentile(v, 50) == 3.0);
    CHECK(percentile(v, 5) == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(percentile(v, 95) == doctest::Approx(4.8).epsilon(1e-15));
    CHECK(percentile({7.0}, 33) == 7.0);
}

TEST_CASE("bootstrap properties") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> s(1, 5);
    std::vector<double> scores(97);
    for (auto& x : scores) x = s(rng);
    BootstrapOptions opt;
    const auto a = bootstrap_ci(scores, opt);
    CHECK(a.resample_means.size() == 100);
    CHECK(a.full_mean == std::accumulate(scores.begin(), scores.end(), 0.0) / 97.0);
    CHECK(a.ci_low <= a.ci_high);
    for (double m : a.resample_means) {
        CHECK(m >= 1.0);
        CHECK(m <= 5.0);
    }
    // ceil(0.8 * 97) = 78 draws: every resample mean is a multiple of 1/78.
    for (double m : a.resample_means) CHECK(std::fabs(m * 78 - std::round(m * 78)) < 1e-9);

    opt.seed = 99;
    const auto b = bootstrap_ci(scores, opt);
    CHECK(b.resample_means != a.resample_means);
    opt.fraction = 1.0;
    const auto full = bootstrap_ci(scores, opt);
    CHECK(full.ci_low == full.full_mean);
    CHECK(full.ci_high == full.full_mean);

    const std::vector<double> one = {4.0};
    const auto single = bootstrap_ci(one);
    CHECK(single.ci_low == 4.0);
    CHECK(single.ci_high == 4.0);
    CHECK_THROWS(bootstrap_ci(std::vector<double>{}));
    opt.fraction = 0.0;
    CHECK_THROWS(bootstrap_ci(scores, opt));
}

TEST_CASE("case seed depends on corpus and docket") {
    CHECK(case_seed(1, "dolma", "20A87") == case_seed(1, "dolma", "20A87"));
    CHECK(case_seed(1, "dolma", "20A87") != case_seed(1, "dolma", "19-123"));
    CHECK(case_seed(1, "dolma", "20A87") != case_seed(1, "c4", "20A87"));
    CHECK(case_seed(0, "a", "b") == fnv1a64("a/b"));
}

TEST_CASE("aggregate over numeric scores only") {
    const std::vector<StanceRecord> rs = {
        rec("1", StanceStatus::scored, 5),         rec("2", StanceStatus::scored, 2),
        rec("3", StanceStatus::not_related),       rec("4", StanceStatus::parse_failure),
        rec("5", StanceStatus::transport_error),   rec("6", StanceStatus::scored, 4),
    };
    const auto s = aggregate_stance(rs, BootstrapOptions{});
    CHECK(s.mean_score == 11.0 / 3.0);
    CHECK(s.related_count == 3);
    CHECK(s.not_related_count == 1);
    CHECK(s.parse_failures == 1);
    CHECK(s.transport_errors == 1);
    CHECK(s.p_pro == likert_to_probability(11.0 / 3.0));
    CHECK(s.ci_low.has_value());

    const std::vector<StanceRecord> none = {rec("1", StanceStatus::not_related)};
    const auto m = aggregate_stance(none);
    CHECK(m.missing());
    CHECK_FALSE(m.p_pro.has_value());

    auto mixed = rs;
    mixed[1].docket_id = "other";
    CHECK_THROWS_AS(aggregate_stance(mixed), ValidationError);
}

TEST_CASE("corpus distribution keeps dataset order and marks missing cases") {
    SurveyDataset ds;
    ds.cases = {sample_case(), sample_case()};
    ds.cases[1].docket_id = "E";
    const std::vector<StanceSummary> sums = {aggregate_stance(std::vector<StanceRecord>{rec("1", StanceStatus::scored, 4)})};
    const auto d = corpus_distribution(sums, ds, "c");
    CHECK(d.kind() == EntityKind::corpus);
    CHECK(d.p_pro("D") == 0.75);
    CHECK_FALSE(d.p_pro("E").has_value());
}

TEST_CASE("judge requests are deterministic and tagged") {
    RetrievedDocument doc{"doc-1", "D", "c", "Some text about the law.", 5, "fixture://c/doc-1"};
    const auto tmpl = StanceTemplate::bundled();
    const auto r = judge_request(doc, sample_case(), "judge", tmpl);
    CHECK(r.temperature == 0.0);
    CHECK(r.max_tokens == kJudgeMaxTokens);
    CHECK(r.request_tag == "stance/c/D/doc-1");
    CHECK(r.prompt_text.find("Some text about the law.") != std::string::npos);
    CHECK(r.prompt_text.find("It applies") != std::string::npos);

    llm::MockClient judge;
    judge.set("stance/c/D/doc-1", "Score: 4");
    const auto s = score_stance(doc, sample_case(), judge, "judge", tmpl);
    CHECK(s.status == StanceStatus::scored);
    CHECK(s.score == 4);
    CHECK(s.raw_judge_text == "Score: 4");

    judge.set_failure("stance/c/D/doc-1", "down", 500);
    const auto f = score_stance(doc, sample_case(), judge, "judge", tmpl);
    CHECK(f.status == StanceStatus::transport_error);
    CHECK_FALSE(f.error.empty());
}

TEST_CASE("stance log and summary files round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "polalign_stance_files";
    std::filesystem::create_directories(dir);
    std::vector<StanceRecord> rs = {rec("1", StanceStatus::scored, 3), rec("2", StanceStatus::not_related)};
    rs[1].raw_judge_text = "Not related, \"clearly\"";
    write_stance_log(dir / "s.jsonl", rs, "h");
    CHECK(read_stance_log(dir / "s.jsonl") == rs);

    std::vector<StanceSummary> sums = {aggregate_stance(rs, BootstrapOptions{}), empty_summary("E", "c")};
    write_summaries(dir / "s.csv", sums, {"polalign config_hash=h"});
    const auto back = read_summaries(dir / "s.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].mean_score == sums[0].mean_score);
    CHECK(back[0].ci_low == sums[0].ci_low);
    CHECK(back[0].related_count == 1);
    CHECK(back[0].not_related_count == 1);
    CHECK(back[1].missing());
    std::filesystem::remove_all(dir);
}
