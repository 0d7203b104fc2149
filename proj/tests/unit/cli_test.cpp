#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "polalign/commands.hpp"
#include "polalign/error.hpp"
#include "polalign/io.hpp"
#include "polalign/preference.hpp"
#include "polalign/probe.hpp"
#include "polalign/report.hpp"

using namespace polalign;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path dir;
    std::ostringstream out, err;
    cli::Streams io{out, err};

    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    RunConfig config(json extra = json::object()) {
        json doc = {{"dataset", std::string(POLALIGN_DATA_DIR) + "/scope_survey.json"},
                    {"output_dir", "run"},
                    {"models", json::array({{{"id", "demlike"}, {"mock_script", "fx/model_democrat.json"}},
                                            {{"id", "vague"}, {"mock_script", "vague.json"}},
                                            {{"id", "offline"}, {"url", "http://127.0.0.1:1/v1"}}})},
                    {"judge", {{"id", "judge"}, {"mock_script", "fx/judge_script.json"}}},
                    {"corpora", json::array({{{"id", "dolma"}, {"index", "fx/index.json"}}})},
                    {"retry", {{"max_attempts", 1}, {"base_delay_ms", 0}, {"max_delay_ms", 0}}},
                    {"timeout_ms", 500}};
        doc.update(extra);
        write_json_file(dir / "config.json", doc);
        return load_config(dir / "config.json");
    }
};

int fixture(Workspace& ws) {
    cli::FixtureArgs a;
    a.stats = std::string(POLALIGN_DATA_DIR) + "/dolma_retrieval_stats.json";
    a.dataset = std::string(POLALIGN_DATA_DIR) + "/scope_survey.json";
    a.out_dir = ws.dir / "fx";
    a.plant_group = "democrat";
    return cli::cmd_fixture(a, ws.io);
}

}  // namespace

TEST_CASE("exit codes map error categories") {
    std::ostringstream out, err;
    cli::Streams io{out, err};
    CHECK(cli::guarded([] { return 0; }, io) == cli::kExitOk);
    CHECK(cli::guarded([]() -> int { throw ValidationError("v"); }, io) == cli::kExitValidation);
    CHECK(cli::guarded([]() -> int { throw ParseError("p"); }, io) == cli::kExitValidation);
    CHECK(cli::guarded([]() -> int { throw AuthenticationError("a", 401); }, io) == cli::kExitTransport);
    CHECK(cli::guarded([]() -> int { throw std::runtime_error("x"); }, io) == cli::kExitInternal);
    CHECK(err.str().find("validation error: v") != std::string::npos);
}

TEST_CASE("full pipeline on fixtures") {
    Workspace ws("polalign_cli_pipeline");
    REQUIRE(fixture(ws) == cli::kExitOk);
    write_json_file(ws.dir / "vague.json", {{"*", "I am not sure."}, {"20A87/v1/s1", "A"}});
    const auto cfg = ws.config();
    const report::OutputLayout layout{cfg.output_dir};

    CHECK(cli::cmd_ingest(cfg, ws.io) == cli::kExitOk);
    for (const char* e : {"public", "democrat", "republican", "court"}) CHECK(fs::exists(layout.distribution(e)));

    CHECK(cli::cmd_probe(cfg, {"demlike", {}, {}}, ws.io) == cli::kExitOk);
    const auto model = load_distribution(layout.distribution("demlike").string());
    CHECK(model.present_count() == 32);

    SUBCASE("partial and transport failures") {
        CHECK(cli::cmd_probe(cfg, {"vague", {}, {}}, ws.io) == cli::kExitPartial);
        const auto vague = load_distribution(layout.distribution("vague").string());
        CHECK(vague.present_count() == 1);
        CHECK(vague.p_pro("20A87") == 1.0);

        auto small = ws.config({{"samples_per_variant", 1}});
        CHECK(cli::cmd_probe(small, {"offline", {}, {}}, ws.io) == cli::kExitTransport);
    }

    SUBCASE("adjudication: rejected files change nothing") {
        REQUIRE(cli::cmd_probe(cfg, {"vague", {}, {}}, ws.io) == cli::kExitPartial);
        const auto log_before = read_text_file(layout.responses("vague"));
        const auto dist_before = read_text_file(layout.distribution("vague"));
        auto table = read_csv_file(layout.adjudication("vague"));
        REQUIRE(table.rows.size() == 959);
        const auto col = table.column("manual_choice");

        auto bad = table;
        bad.rows[0][col] = "pro";
        bad.rows[1][col] = "both";
        write_text_file(ws.dir / "bad.csv", format_csv(bad));
        const int rc = cli::guarded([&] { return cli::cmd_adjudicate(cfg, "vague", ws.dir / "bad.csv", ws.io); },
                                    ws.io);
        CHECK(rc == cli::kExitValidation);
        CHECK(read_text_file(layout.responses("vague")) == log_before);
        CHECK(read_text_file(layout.distribution("vague")) == dist_before);

        // Code every reply of one case as pro.
        auto good = table;
        std::size_t coded = 0;
        for (auto& row : good.rows)
            if (row[table.column("docket")] == "19-123") {
                row[col] = "pro";
                ++coded;
            }
        write_text_file(ws.dir / "good.csv", format_csv(good));
        CHECK(cli::cmd_adjudicate(cfg, "vague", ws.dir / "good.csv", ws.io) == cli::kExitOk);
        const auto after = load_distribution(layout.distribution("vague").string());
        CHECK(coded == 30);
        CHECK(after.p_pro("19-123") == 1.0);
        CHECK(after.present_count() == 2);
        std::size_t manual = 0;
        for (const auto& r : probe::read_response_log(layout.responses("vague")))
            manual += r.mapping_stage == probe::MappingStage::manual;
        CHECK(manual == 30);
    }

    CHECK(cli::cmd_mine(cfg, {"dolma", {}, {}}, ws.io) == cli::kExitOk);
    const auto summary = read_csv_file(layout.stance_summary("dolma"));
    REQUIRE_FALSE(summary.comments.empty());
    CHECK(summary.comments.front().find("config_hash=" + cfg.config_hash) != std::string::npos);
    CHECK(summary.rows.size() == 32);
    CHECK(fs::exists(layout.stance_log("dolma")));
    CHECK(fs::exists(layout.retrieval_log("dolma")));

    cli::AlignArgs align;
    align.js_divergence = true;
    CHECK(cli::cmd_align(cfg, align, ws.io) == cli::kExitOk);
    const auto aj = read_json_file(layout.alignment_json());
    CHECK(aj["matrix"]["demlike"]["democrat"]["rho"].get<double>() > 0.999);
    CHECK(aj["metadata"]["config_hash"] == cfg.config_hash);
    CHECK(aj["metadata"]["williams_form"] == "standard");
    CHECK(fs::exists(layout.significance_json("demlike")));
    CHECK(fs::exists(layout.divergence_csv()));
    const auto long_csv = read_csv_file(layout.alignment_csv());
    CHECK(long_csv.header.front() == "row_entity");
    CHECK(long_csv.comments.front().find("seed=") != std::string::npos);

    // Reruns with the same config produce identical outputs.
    const auto first = read_text_file(layout.alignment_json());
    CHECK(cli::cmd_align(cfg, align, ws.io) == cli::kExitOk);
    CHECK(read_text_file(layout.alignment_json()) == first);

    cli::AlignArgs missing;
    missing.entities = {"public", "nobody"};
    CHECK(cli::guarded([&] { return cli::cmd_align(cfg, missing, ws.io); }, ws.io) == cli::kExitValidation);

    CHECK(cli::cmd_report(cfg, ws.io) == cli::kExitOk);
    const auto md = read_text_file(layout.report_markdown());
    CHECK(md.find("## Pearson alignment") != std::string::npos);
    CHECK(md.find("demlike") != std::string::npos);
}

TEST_CASE("judge record and replay reproduce the stance log") {
    Workspace ws("polalign_cli_replay");
    REQUIRE(fixture(ws) == cli::kExitOk);
    write_json_file(ws.dir / "vague.json", {{"*", "x"}});
    const auto cfg = ws.config();
    const report::OutputLayout layout{cfg.output_dir};
    CHECK(cli::cmd_mine(cfg, {"dolma", ws.dir / "rec.json", {}}, ws.io) == cli::kExitOk);
    const auto first = read_text_file(layout.stance_log("dolma"));
    CHECK(cli::cmd_mine(cfg, {"dolma", {}, ws.dir / "rec.json"}, ws.io) == cli::kExitOk);
    CHECK(read_text_file(layout.stance_log("dolma")) == first);
}
