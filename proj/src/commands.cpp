#include "polalign/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include "polalign/alignment.hpp"
#include "polalign/error.hpp"
#include "polalign/fixture_corpus.hpp"
#include "polalign/io.hpp"
#include "polalign/probe.hpp"
#include "polalign/report.hpp"
#include "polalign/stance.hpp"
#include "polalign/survey.hpp"

namespace polalign::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

report::OutputLayout layout_for(const RunConfig& config) { return {config.output_dir}; }

json file_metadata(const RunConfig& config) {
    return {{"config_hash", config.config_hash}, {"tool", "polalign"}};
}

std::string fixed(double v, int digits = 3) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

probe::PromptTemplateSet load_templates(const RunConfig& config) {
    return config.templates_path.empty() ? probe::PromptTemplateSet::bundled()
                                         : probe::PromptTemplateSet::load(config.templates_path);
}

stance::StanceTemplate load_stance_template(const RunConfig& config) {
    return config.stance_template_path.empty() ? stance::StanceTemplate::bundled()
                                               : stance::StanceTemplate::load(config.stance_template_path);
}

// Client for an endpoint, optionally replaced by a replay script and/or
// wrapped by a recorder.
struct ClientStack {
    std::unique_ptr<llm::CompletionClient> base;
    std::unique_ptr<llm::RecordingClient> recorder;

    llm::CompletionClient& top() { return recorder ? *recorder : *base; }
};

ClientStack make_client_stack(const ModelEndpointConfig& endpoint, const RunConfig& config, const fs::path& replay,
                              const fs::path& record) {
    ClientStack s;
    if (!replay.empty())
        s.base = std::make_unique<llm::MockClient>(llm::MockClient::from_file(replay));
    else
        s.base = make_completion_client(endpoint, config);
    if (!record.empty()) s.recorder = std::make_unique<llm::RecordingClient>(*s.base);
    return s;
}

void save_model_distribution(const RunConfig& config, const std::vector<probe::ResponseRecord>& records,
                             const SurveyDataset& dataset, const std::string& model_id) {
    const auto dist = probe::aggregate_llm_distribution(records, dataset, model_id);
    save_distribution(dist, layout_for(config).distribution(model_id).string(), file_metadata(config));
}

}  // namespace

int guarded(const std::function<int()>& body, Streams io) {
    try {
        return body();
    } catch (const ValidationError& e) {
        io.err << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        io.err << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const TransportError& e) {
        io.err << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const DomainError& e) {
        io.err << "domain error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DegenerateInputError& e) {
        io.err << "degenerate input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InsufficientDataError& e) {
        io.err << "insufficient data: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        io.err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

// ---- ingest ------------------------------------------------------------

int cmd_ingest(const RunConfig& config, Streams io) {
    const SurveyDataset dataset = load_survey(config.dataset_path);
    const auto layout = layout_for(config);
    int status = kExitOk;
    io.out << "ingest: " << dataset.cases.size() << " cases, " << dataset.group_responses.size()
           << " group records, " << dataset.court_votes.size() << " vote records\n";

    for (auto group : {RespondentGroup::general_public, RespondentGroup::democrat, RespondentGroup::republican}) {
        try {
            const auto dist = group_distribution(dataset, group);
            save_distribution(dist, layout.distribution(dist.entity_id()).string(), file_metadata(config));
            io.out << "  " << dist.entity_id() << ": " << dist.present_count() << "/" << dist.size() << " present\n";
            if (dist.present_count() < dist.size()) status = kExitPartial;
        } catch (const InsufficientDataError& e) {
            io.err << "warning: " << e.what() << "\n";
            status = kExitPartial;
        }
    }
    try {
        const auto court = court_distribution(dataset);
        save_distribution(court, layout.distribution(court.entity_id()).string(), file_metadata(config));
        io.out << "  " << court.entity_id() << ": " << court.present_count() << "/" << court.size() << " present\n";
    } catch (const ValidationError& e) {
        io.err << "warning: court distribution skipped: " << e.what() << "\n";
        status = kExitPartial;
    }
    return status;
}

// ---- probe -------------------------------------------------------------

int cmd_probe(const RunConfig& config, const ProbeArgs& args, Streams io) {
    const SurveyDataset dataset = load_survey(config.dataset_path);
    const auto& endpoint = config.model(args.model_id);
    const auto templates = load_templates(config);
    const auto layout = layout_for(config);

    auto clients = make_client_stack(endpoint, config, args.replay, args.record);
    probe::ProbeOptions options;
    options.samples_per_variant = config.samples_per_variant;
    options.temperature = endpoint.temperature.value_or(config.probe_temperature);
    options.max_tokens = config.max_tokens;
    options.max_in_flight = config.max_in_flight;

    const auto records = probe::collect_responses(dataset.cases, endpoint.id, templates, clients.top(), options);
    if (clients.recorder) clients.recorder->save(args.record);

    probe::write_response_log(layout.responses(endpoint.id), records, config.config_hash);
    probe::export_adjudication(layout.adjudication(endpoint.id), records, config.config_hash);
    save_model_distribution(config, records, dataset, endpoint.id);

    const auto tallies = probe::tally(records);
    std::size_t errors = 0, unmatched = 0, empty_cases = 0;
    for (const auto& c : dataset.cases) {
        const auto& t = tallies.at(c.docket_id);
        io.out << "probe " << endpoint.id << " " << c.docket_id << ": pro=" << t.pro << " opp=" << t.opp
               << " unmatched=" << t.unmatched << " errors=" << t.errors << "\n";
        errors += t.errors;
        unmatched += t.unmatched;
        if (t.mapped() == 0) ++empty_cases;
    }
    io.out << "probe " << endpoint.id << ": " << records.size() << " responses, " << unmatched
           << " unmatched (adjudication file " << layout.adjudication(endpoint.id).string() << "), " << errors
           << " transport errors\n";

    if (!records.empty() && errors == records.size()) {
        io.err << "error: every request to '" << endpoint.id << "' failed\n";
        return kExitTransport;
    }
    if (empty_cases > 0) {
        io.err << "warning: " << empty_cases << " case(s) have no mapped response\n";
        return kExitPartial;
    }
    return kExitOk;
}

// ---- adjudicate --------------------------------------------------------

int cmd_adjudicate(const RunConfig& config, const std::string& model_id, const fs::path& csv_path, Streams io) {
    const SurveyDataset dataset = load_survey(config.dataset_path);
    const auto& endpoint = config.model(model_id);
    const auto layout = layout_for(config);

    auto records = probe::read_response_log(layout.responses(endpoint.id));
    const CsvTable table = read_csv_file(csv_path);
    if (table.header.empty() && table.rows.empty()) {
        io.out << "adjudicate " << endpoint.id << ": empty file, nothing to do\n";
        return kExitOk;
    }
    const auto outcome = probe::apply_adjudication(records, table);
    probe::write_response_log(layout.responses(endpoint.id), records, config.config_hash);
    save_model_distribution(config, records, dataset, endpoint.id);

    std::size_t still_unmatched = 0;
    for (const auto& r : records)
        if (r.mapped_choice == probe::MappedChoice::unmatched) ++still_unmatched;
    io.out << "adjudicate " << endpoint.id << ": " << outcome.applied << " applied, " << outcome.skipped_blank
           << " blank rows skipped, " << still_unmatched << " still unmatched\n";
    return kExitOk;
}

// ---- mine --------------------------------------------------------------

int cmd_mine(const RunConfig& config, const MineArgs& args, Streams io) {
    const SurveyDataset dataset = load_survey(config.dataset_path);
    const auto& corpus = config.corpus(args.corpus_id);
    const auto layout = layout_for(config);
    const auto tmpl = load_stance_template(config);

    if (!config.judge && args.judge_replay.empty())
        throw ValidationError("mining needs a judge endpoint in the config or --judge-replay", {}, "judge");
    ModelEndpointConfig judge_cfg = config.judge.value_or(ModelEndpointConfig{"judge", "", "", "", {}, {}});
    auto judge = make_client_stack(judge_cfg, config, args.judge_replay, args.judge_record);
    auto search_client = make_search_client(corpus, config);

    std::vector<stance::StanceRecord> all_records;
    std::vector<stance::StanceSummary> summaries;
    CsvTable retrieval;
    retrieval.comments.push_back(report::csv_provenance(config));
    retrieval.header = {"docket", "corpus", "matched", "returned", "fetched", "over_limit", "duplicates", "status"};

    std::size_t retrieval_failures = 0, missing = 0;
    for (const auto& c : dataset.cases) {
        stance::RetrievalResult found;
        try {
            found = stance::retrieve_documents(c, corpus.id, *search_client, config.word_limit, config.search_limit);
        } catch (const TransportError& e) {
            ++retrieval_failures;
            ++missing;
            io.err << "warning: retrieval failed for " << c.docket_id << ": " << e.what() << "\n";
            retrieval.rows.push_back({c.docket_id, corpus.id, "", "", "", "", "", "transport_error"});
            summaries.push_back(stance::empty_summary(c.docket_id, corpus.id));
            continue;
        }
        retrieval.rows.push_back({c.docket_id, corpus.id, found.matched ? std::to_string(*found.matched) : "",
                                  std::to_string(found.returned), std::to_string(found.documents.size()),
                                  std::to_string(found.over_limit), std::to_string(found.duplicates), "ok"});

        auto records = stance::score_documents(found.documents, c, judge.top(), judge_cfg.id, tmpl, config.max_in_flight);
        stance::StanceSummary summary = records.empty()
                                            ? stance::empty_summary(c.docket_id, corpus.id)
                                            : stance::aggregate_stance(records, config.bootstrap);
        if (summary.missing()) ++missing;

        io.out << "mine " << corpus.id << " " << c.docket_id << ": matched="
               << (found.matched ? std::to_string(*found.matched) : std::string("?"))
               << " fetched=" << found.documents.size() << " related=" << summary.related_count
               << " not_related=" << summary.not_related_count << " failures="
               << summary.parse_failures + summary.transport_errors << " mean="
               << (summary.mean_score ? fixed(*summary.mean_score) : std::string("missing")) << "\n";
        all_records.insert(all_records.end(), records.begin(), records.end());
        summaries.push_back(std::move(summary));
    }
    if (judge.recorder) judge.recorder->save(args.judge_record);

    stance::write_stance_log(layout.stance_log(corpus.id), all_records, config.config_hash);
    stance::write_summaries(layout.stance_summary(corpus.id), summaries,
                            {report::csv_provenance(config),
                             "transform=" + std::string(stance::kTransformName) + " ci=p5/p95 of " +
                                 std::to_string(config.bootstrap.resamples) + " resample means, " +
                                 format_double(config.bootstrap.fraction) + " of scores without replacement, seed=" +
                                 std::to_string(config.bootstrap.seed)});
    write_text_file(layout.retrieval_log(corpus.id), format_csv(retrieval));
    const auto dist = stance::corpus_distribution(summaries, dataset, corpus.id);
    json meta = file_metadata(config);
    meta["transform"] = std::string(stance::kTransformName);
    save_distribution(dist, layout.distribution(corpus.id).string(), meta);

    io.out << "mine " << corpus.id << ": " << dist.present_count() << "/" << dist.size() << " cases present, "
           << all_records.size() << " stance records\n";
    if (!dataset.cases.empty() && retrieval_failures == dataset.cases.size()) {
        io.err << "error: every retrieval from '" << corpus.id << "' failed\n";
        return kExitTransport;
    }
    if (missing > 0) {
        io.err << "warning: " << missing << " case(s) have no related document\n";
        return kExitPartial;
    }
    return kExitOk;
}

// ---- align -------------------------------------------------------------

int cmd_align(const RunConfig& config, const AlignArgs& args, Streams io) {
    const SurveyDataset dataset = load_survey(config.dataset_path);
    const auto layout = layout_for(config);
    const std::string baseline_id(stats::kRandomBaselineId);

    std::vector<std::string> candidates;
    for (const auto& id : reserved_entity_ids())
        if (id != baseline_id) candidates.push_back(id);
    for (const auto& m : config.models) candidates.push_back(m.id);
    for (const auto& k : config.corpora) candidates.push_back(k.id);

    std::vector<std::string> selected;
    if (args.entities.empty()) {
        for (const auto& id : candidates)
            if (fs::exists(layout.distribution(id))) selected.push_back(id);
            else io.err << "note: no distribution for '" << id << "', skipped\n";
        if (config.random_baseline) selected.push_back(baseline_id);
    } else {
        selected = args.entities;
    }
    std::set<std::string> seen;
    for (const auto& id : selected)
        if (!seen.insert(id).second) throw ValidationError("entity '" + id + "' selected twice", {}, "entities");

    std::vector<std::string> absent;
    for (const auto& id : selected) {
        if (id == baseline_id && config.random_baseline) continue;
        if (!fs::exists(layout.distribution(id))) absent.push_back(layout.distribution(id).string());
    }
    if (!absent.empty()) {
        std::string message = "missing distribution files:";
        for (const auto& a : absent) message += "\n  " + a;
        throw ValidationError(message, {}, "entities");
    }

    std::vector<PreferenceDistribution> dists;
    for (const auto& id : selected) {
        if (id == baseline_id && config.random_baseline) {
            auto baseline = stats::random_baseline(dataset.docket_order(), config.seed, baseline_id);
            save_distribution(baseline, layout.distribution(baseline_id).string(), report::run_metadata(config));
            dists.push_back(std::move(baseline));
        } else {
            dists.push_back(load_distribution(layout.distribution(id).string()));
            if (dists.back().entity_id() != id)
                throw ValidationError("distribution file for '" + id + "' names entity '" + dists.back().entity_id() + "'",
                                      {}, "entity");
        }
    }

    const json metadata = report::run_metadata(config);
    const auto matrix = stats::alignment_matrix(dists);
    write_json_file(layout.alignment_json(), report::alignment_json(matrix, metadata));
    write_text_file(layout.alignment_csv(), format_csv(report::alignment_long(matrix, {report::csv_provenance(config)})));
    io.out << "Pearson alignment (* p<" << stats::kStarThreshold << ", ** p<" << stats::kDoubleStarThreshold << ")\n"
           << report::format_alignment_table(matrix);

    std::vector<PreferenceDistribution> comparators;
    for (const auto& d : dists)
        if (d.kind() != EntityKind::model && d.kind() != EntityKind::baseline) comparators.push_back(d);
    std::vector<stats::SignificanceMatrix> grids;
    for (const auto& d : dists) {
        if (d.kind() != EntityKind::model) continue;
        if (comparators.size() < 2) {
            io.err << "note: fewer than two comparison entities, no significance grid for '" << d.entity_id() << "'\n";
            continue;
        }
        auto grid = stats::significance_matrix(d, comparators, config.williams_form, config.alpha);
        report::apply_sidedness(grid, config.sidedness);
        write_json_file(layout.significance_json(d.entity_id()), report::significance_json(grid, metadata));
        io.out << "\nWilliams test for " << d.entity_id() << " (row higher than column, " << config.sidedness
               << " p<" << config.alpha << ", form " << stats::to_string(config.williams_form) << ")\n"
               << report::format_significance_table(grid);
        grids.push_back(std::move(grid));
    }
    write_text_file(layout.significance_csv(),
                    format_csv(report::significance_long(grids, {report::csv_provenance(config)})));

    if (args.js_divergence) {
        CsvTable js;
        js.comments.push_back(report::csv_provenance(config));
        js.header = {"entity_a", "entity_b", "n", "mean_js"};
        for (std::size_t i = 0; i < dists.size(); ++i)
            for (std::size_t j = i + 1; j < dists.size(); ++j) {
                try {
                    const auto d = stats::js_divergence(dists[i], dists[j]);
                    js.rows.push_back({dists[i].entity_id(), dists[j].entity_id(), std::to_string(d.per_case.size()),
                                       format_double(d.mean)});
                } catch (const InsufficientDataError&) {
                    js.rows.push_back({dists[i].entity_id(), dists[j].entity_id(), "0", ""});
                }
            }
        write_text_file(layout.divergence_csv(), format_csv(js));
    }
    return kExitOk;
}

// ---- report ------------------------------------------------------------

namespace {

std::string markdown_alignment(const json& doc) {
    const auto& entities = doc.at("entities");
    std::string out = "| |";
    for (const auto& e : entities) out += " " + e.get<std::string>() + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < entities.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& r : entities) {
        const auto row_id = r.get<std::string>();
        out += "| " + row_id + " |";
        for (const auto& c : entities) {
            const auto& cell = doc.at("matrix").at(row_id).at(c.get<std::string>());
            out += cell.contains("rho") ? " " + fixed(cell["rho"].get<double>(), 2) + cell["stars"].get<std::string>() + " |"
                                        : " n/a |";
        }
        out += "\n";
    }
    return out;
}

std::string markdown_significance(const json& doc) {
    const auto& entities = doc.at("entities");
    std::string out = "| higher \\ than |";
    for (const auto& e : entities) out += " " + e.get<std::string>() + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < entities.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& r : entities) {
        const auto row_id = r.get<std::string>();
        out += "| " + row_id + " |";
        for (const auto& c : entities) {
            if (c == r) {
                out += " - |";
                continue;
            }
            const auto& cell = doc.at("grid").at(row_id).at(c.get<std::string>());
            out += cell.contains("t") ? (cell["significant"].get<bool>() ? " * |" : " |") : " n/a |";
        }
        out += "\n";
    }
    return out;
}

}  // namespace

int cmd_report(const RunConfig& config, Streams io) {
    const auto layout = layout_for(config);
    if (!fs::exists(layout.alignment_json()))
        throw ValidationError("no alignment output at " + layout.alignment_json().string() + "; run align first", {},
                              "align");
    const json alignment = read_json_file(layout.alignment_json());

    std::string md = "# Alignment report\n\n";
    md += "config hash `" + config.config_hash + "`, seed " + std::to_string(config.seed) + ", Williams form " +
          std::string(stats::to_string(config.williams_form)) + ", " + config.sidedness + " Williams p-values.\n\n";
    md += "## Pearson alignment\n\nStars: * p < 0.05, ** p < 0.001 (two-sided).\n\n" + markdown_alignment(alignment);

    for (const auto& m : config.models) {
        if (!fs::exists(layout.significance_json(m.id))) continue;
        const json grid = read_json_file(layout.significance_json(m.id));
        md += "\n## Williams significance: " + m.id + "\n\n* marks rows the model correlates with significantly more "
              "than the column entity (alpha " + format_double(grid.at("alpha").get<double>()) + ").\n\n" +
              markdown_significance(grid);
    }

    for (const auto& k : config.corpora) {
        if (!fs::exists(layout.stance_summary(k.id))) continue;
        const auto summaries = stance::read_summaries(layout.stance_summary(k.id));
        md += "\n## Stance summary: " + k.id + "\n\nCI bounds are the 5th and 95th percentiles of " +
              std::to_string(config.bootstrap.resamples) + " resample means.\n\n";
        md += "| docket | related | not related | mean | p_pro | ci_low | ci_high |\n|---|---|---|---|---|---|---|\n";
        for (const auto& s : summaries) {
            auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("missing"); };
            md += "| " + s.docket_id + " | " + std::to_string(s.related_count) + " | " +
                  std::to_string(s.not_related_count) + " | " + opt(s.mean_score) + " | " + opt(s.p_pro) + " | " +
                  opt(s.ci_low) + " | " + opt(s.ci_high) + " |\n";
        }
    }
    write_text_file(layout.report_markdown(), md);
    io.out << md;
    return kExitOk;
}

// ---- fixture -----------------------------------------------------------

int cmd_fixture(const FixtureArgs& args, Streams io) {
    const auto stats_table = fixture::RetrievalStatsTable::load(args.stats);
    const SurveyDataset dataset = load_survey(args.dataset);
    const auto corpus = fixture::generate_fixture_corpus(stats_table, dataset, args.seed);
    fixture::write_fixture_corpus(corpus, args.out_dir);
    io.out << "fixture " << corpus.corpus_id << ": " << corpus.documents.size() << " documents, "
           << corpus.judge_script.size() << " scripted judge replies, " << corpus.planted.size() << " cases -> "
           << args.out_dir.string() << "\n";
    if (!args.plant_group.empty()) {
        const auto templates = args.templates.empty() ? probe::PromptTemplateSet::bundled()
                                                      : probe::PromptTemplateSet::load(args.templates);
        const auto target = args.plant_group == "court"
                                ? court_distribution(dataset)
                                : group_distribution(dataset, respondent_group_from_string(args.plant_group));
        const auto counts = fixture::pro_counts_for(target, args.plant_samples);
        const auto script = fixture::planted_model_script(dataset, templates, counts, args.plant_samples, args.seed);
        const auto path = args.out_dir / ("model_" + args.plant_group + ".json");
        write_json_file(path, script);
        io.out << "fixture model script for " << args.plant_group << ": " << script.size() << " replies -> "
               << path.string() << "\n";
    }
    return kExitOk;
}

}  // namespace polalign::cli
