#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polalign/commands.hpp"
#include "polalign/config.hpp"
#include "polalign/io.hpp"

using namespace polalign;

int main(int argc, char** argv) {
    CLI::App app{"Opinion alignment between survey groups, the Court, language models and pretraining corpora"};
    app.require_subcommand(1);

    std::string config_path;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    };

    auto* ingest = app.add_subcommand("ingest", "Validate the survey and write group and court distributions");
    add_config(ingest);

    cli::ProbeArgs probe_args;
    std::string probe_record, probe_replay;
    auto* probe = app.add_subcommand("probe", "Sample a model on every case and map its answers");
    add_config(probe);
    probe->add_option("-m,--model", probe_args.model_id, "Model id from the config")->required();
    probe->add_option("--record", probe_record, "Save replies to a mock script for later replay");
    probe->add_option("--replay", probe_replay, "Answer from a mock script instead of the endpoint")
        ->check(CLI::ExistingFile);

    std::string adjudicate_model, adjudicate_file;
    auto* adjudicate = app.add_subcommand("adjudicate", "Merge manual codes for unmatched responses");
    add_config(adjudicate);
    adjudicate->add_option("-m,--model", adjudicate_model, "Model id from the config")->required();
    adjudicate->add_option("-f,--file", adjudicate_file, "Adjudication CSV")->required()->check(CLI::ExistingFile);

    cli::MineArgs mine_args;
    std::string judge_record, judge_replay;
    auto* mine = app.add_subcommand("mine", "Retrieve, judge and aggregate corpus stance");
    add_config(mine);
    mine->add_option("--corpus", mine_args.corpus_id, "Corpus id from the config")->required();
    mine->add_option("--judge-record", judge_record, "Save judge replies to a mock script");
    mine->add_option("--judge-replay", judge_replay, "Answer judge requests from a mock script")
        ->check(CLI::ExistingFile);

    cli::AlignArgs align_args;
    auto* align = app.add_subcommand("align", "Pearson alignment matrix and Williams significance grids");
    add_config(align);
    align->add_option("-e,--entities", align_args.entities, "Entities to include (default: all available)")
        ->delimiter(',');
    align->add_flag("--js", align_args.js_divergence, "Also write mean Jensen-Shannon divergences");

    auto* report = app.add_subcommand("report", "Write a Markdown summary of existing outputs");
    add_config(report);

    cli::FixtureArgs fixture_args;
    auto* fixture = app.add_subcommand("fixture", "Generate a synthetic corpus index and judge script");
    fixture->add_option("--stats", fixture_args.stats, "Per-case retrieval statistics (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    fixture->add_option("--dataset", fixture_args.dataset, "Survey dataset (JSON)")->required()->check(CLI::ExistingFile);
    fixture->add_option("-o,--out", fixture_args.out_dir, "Output directory")->required();
    fixture->add_option("--seed", fixture_args.seed, "Generator seed");
    fixture->add_option("--plant-group", fixture_args.plant_group,
                        "Also write a model mock script reproducing public | democrat | republican | court");
    fixture->add_option("--plant-samples", fixture_args.plant_samples, "Samples per variant for --plant-group")
        ->check(CLI::PositiveNumber);
    fixture->add_option("--templates", fixture_args.templates, "Prompt templates for --plant-group")
        ->check(CLI::ExistingFile);

    // Flags that override config fields.
    std::string williams_form, sidedness, output_dir;
    int samples = 0;
    std::uint64_t seed = 0;
    for (auto* sub : {probe, adjudicate, mine, align, report, ingest}) {
        sub->add_option("-o,--output-dir", output_dir, "Override output_dir");
        if (sub == probe) sub->add_option("--samples-per-variant", samples, "Override samples_per_variant");
        if (sub == align || sub == report) {
            sub->add_option("--williams-form", williams_form, "standard | printed | symmetrized");
            sub->add_option("--sidedness", sidedness, "one-sided | two-sided");
        }
        if (sub == align || sub == mine) sub->add_option("--seed", seed, "Override seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitValidation;
    }

    const bool seed_set = align->count("--seed") > 0 || mine->count("--seed") > 0;
    cli::Streams io{std::cout, std::cerr};
    if (fixture->parsed()) return cli::guarded([&] { return cli::cmd_fixture(fixture_args, io); }, io);

    return cli::guarded(
        [&]() -> int {
            nlohmann::json doc = read_json_file(config_path);
            if (doc.is_object()) {
                if (!output_dir.empty()) doc["output_dir"] = output_dir;
                if (samples > 0) doc["samples_per_variant"] = samples;
                if (!williams_form.empty()) doc["williams_form"] = williams_form;
                if (!sidedness.empty()) doc["sidedness"] = sidedness;
                if (seed_set) {
                    if (align->parsed()) doc["seed"] = seed;
                    if (mine->parsed()) doc["bootstrap"]["seed"] = seed;
                }
            }
            const RunConfig config = parse_config(doc, std::filesystem::absolute(config_path).parent_path());

            if (ingest->parsed()) return cli::cmd_ingest(config, io);
            if (probe->parsed()) {
                probe_args.record = probe_record;
                probe_args.replay = probe_replay;
                return cli::cmd_probe(config, probe_args, io);
            }
            if (adjudicate->parsed()) return cli::cmd_adjudicate(config, adjudicate_model, adjudicate_file, io);
            if (mine->parsed()) {
                mine_args.judge_record = judge_record;
                mine_args.judge_replay = judge_replay;
                return cli::cmd_mine(config, mine_args, io);
            }
            if (align->parsed()) return cli::cmd_align(config, align_args, io);
            return cli::cmd_report(config, io);
        },
        io);
}
