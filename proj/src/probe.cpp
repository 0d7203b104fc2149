#include "polalign/probe.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "polalign/error.hpp"

#ifndef POLALIGN_ASSET_DIR
#define POLALIGN_ASSET_DIR "assets"
#endif

namespace polalign::probe {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::ab: return "AB";
        case TemplateId::repeat: return "Repeat";
        case TemplateId::compare: return "Compare";
    }
    return "AB";
}

TemplateId template_id_from_string(std::string_view text) {
    if (text == "AB") return TemplateId::ab;
    if (text == "Repeat") return TemplateId::repeat;
    if (text == "Compare") return TemplateId::compare;
    throw ParseError("unknown template id '" + std::string(text) + "'");
}

std::string_view to_string(ChoiceOrder order) { return order == ChoiceOrder::pro_first ? "pro_first" : "opp_first"; }

ChoiceOrder choice_order_from_string(std::string_view text) {
    if (text == "pro_first") return ChoiceOrder::pro_first;
    if (text == "opp_first") return ChoiceOrder::opp_first;
    throw ParseError("unknown choice order '" + std::string(text) + "'");
}

std::string_view to_string(MappedChoice choice) {
    switch (choice) {
        case MappedChoice::pro: return "pro";
        case MappedChoice::opp: return "opp";
        case MappedChoice::unmatched: return "unmatched";
    }
    return "unmatched";
}

MappedChoice mapped_choice_from_string(std::string_view text) {
    if (text == "pro") return MappedChoice::pro;
    if (text == "opp") return MappedChoice::opp;
    if (text == "unmatched") return MappedChoice::unmatched;
    throw ParseError("unknown mapped choice '" + std::string(text) + "'");
}

std::string_view to_string(MappingStage stage) {
    switch (stage) {
        case MappingStage::exact: return "exact";
        case MappingStage::normalized: return "normalized";
        case MappingStage::manual: return "manual";
        case MappingStage::none: return "none";
    }
    return "none";
}

MappingStage mapping_stage_from_string(std::string_view text) {
    if (text == "exact") return MappingStage::exact;
    if (text == "normalized") return MappingStage::normalized;
    if (text == "manual") return MappingStage::manual;
    if (text == "none") return MappingStage::none;
    throw ParseError("unknown mapping stage '" + std::string(text) + "'");
}

// ---- Templates ---------------------------------------------------------

static std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1))
        ++count;
    return count;
}

PromptTemplateSet PromptTemplateSet::from_json(const json& document) {
    if (!document.is_object() || !document.contains("templates") || !document["templates"].is_array())
        throw ParseError("template file must be an object with a 'templates' array");
    PromptTemplateSet set;
    set.version = document.value("version", std::string("1"));
    std::set<TemplateId> seen;
    for (const auto& entry : document["templates"]) {
        if (!entry.is_object() || !entry.contains("id") || !entry.contains("text") || !entry.contains("labels"))
            throw ParseError("template entries need 'id', 'text' and 'labels'");
        PromptTemplate t;
        t.id = template_id_from_string(entry["id"].get<std::string>());
        t.text = entry["text"].get<std::string>();
        const auto& labels = entry["labels"];
        if (labels.is_string() && labels.get<std::string>() == "options") {
            t.labels_are_options = true;
        } else if (labels.is_array() && labels.size() == 2 && labels[0].is_string() && labels[1].is_string()) {
            t.labels = {labels[0].get<std::string>(), labels[1].get<std::string>()};
            if (t.labels[0].empty() || t.labels[1].empty() || t.labels[0] == t.labels[1])
                throw ValidationError("template labels must be two distinct non-empty strings", {}, "labels");
        } else {
            throw ParseError("template 'labels' must be \"options\" or a two-element string array");
        }
        for (const char* placeholder : {"{question}", "{option_1}", "{option_2}"})
            if (count_occurrences(t.text, placeholder) != 1)
                throw ValidationError("template " + std::string(to_string(t.id)) + " must contain " + placeholder +
                                          " exactly once",
                                      {}, "text");
        if (!seen.insert(t.id).second)
            throw ValidationError("duplicate template " + std::string(to_string(t.id)), {}, "id");
        set.templates[static_cast<std::size_t>(t.id)] = std::move(t);
    }
    if (seen.size() != 3) throw ValidationError("template file must define AB, Repeat and Compare", {}, "templates");
    return set;
}

PromptTemplateSet PromptTemplateSet::load(const fs::path& path) { return from_json(read_json_file(path)); }

PromptTemplateSet PromptTemplateSet::bundled() {
    fs::path dir = POLALIGN_ASSET_DIR;
    if (const char* env = std::getenv("POLALIGN_ASSET_DIR"); env && *env) dir = env;
    return load(dir / "templates" / "probe_templates.json");
}

const PromptTemplate& PromptTemplateSet::get(TemplateId id) const { return templates[static_cast<std::size_t>(id)]; }

// ---- Variants ----------------------------------------------------------

std::string PromptVariant::variant_id() const {
    const int index = static_cast<int>(template_id) * 2 + (choice_order == ChoiceOrder::pro_first ? 1 : 2);
    return "v" + std::to_string(index);
}

std::string PromptVariant::variant_name() const {
    return std::string(to_string(template_id)) + "/" + std::string(to_string(choice_order));
}

MappedChoice PromptVariant::choice_at(std::size_t position) const {
    const bool first_is_pro = choice_order == ChoiceOrder::pro_first;
    return (position == 0) == first_is_pro ? MappedChoice::pro : MappedChoice::opp;
}

const std::string& PromptVariant::label_for(MappedChoice choice) const {
    if (choice == MappedChoice::unmatched) throw DomainError("no label for an unmatched choice");
    return choice_at(0) == choice ? answer_labels[0] : answer_labels[1];
}

std::vector<PromptVariant> render_prompts(const SurveyCase& survey_case, const PromptTemplateSet& templates) {
    const auto& pro = survey_case.pro_label();
    const auto& opp = survey_case.opp_label();
    if (survey_case.question_text.empty())
        throw ValidationError("empty question text", survey_case.docket_id, "question_text");
    if (pro.empty() || opp.empty() || pro == opp)
        throw ValidationError("choices must be two distinct non-empty strings", survey_case.docket_id, "choices");

    std::vector<PromptVariant> out;
    out.reserve(kVariantsPerCase);
    for (TemplateId id : {TemplateId::ab, TemplateId::repeat, TemplateId::compare}) {
        const auto& tmpl = templates.get(id);
        for (ChoiceOrder order : {ChoiceOrder::pro_first, ChoiceOrder::opp_first}) {
            const std::string& first = order == ChoiceOrder::pro_first ? pro : opp;
            const std::string& second = order == ChoiceOrder::pro_first ? opp : pro;
            PromptVariant v;
            v.docket_id = survey_case.docket_id;
            v.template_id = id;
            v.choice_order = order;
            v.rendered_text = fill_placeholders(
                tmpl.text, {{"question", survey_case.question_text}, {"option_1", first}, {"option_2", second}});
            v.answer_labels = tmpl.labels_are_options ? std::array<std::string, 2>{first, second} : tmpl.labels;

            if (v.rendered_text.find(survey_case.question_text) == std::string::npos)
                throw ValidationError("rendered prompt lost the question text", v.docket_id, "question_text");
            for (const auto* choice : {&first, &second})
                if (count_occurrences(v.rendered_text, *choice) != 1)
                    throw ValidationError("choice text must appear exactly once in the " + v.variant_name() +
                                              " prompt: '" + *choice + "'",
                                          v.docket_id, "choices");
            out.push_back(std::move(v));
        }
    }
    return out;
}

// ---- Mapping -----------------------------------------------------------

static bool is_space(unsigned char c) { return std::isspace(c) != 0; }
static bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

static std::string_view trim(std::string_view s, bool (*pred)(unsigned char)) {
    while (!s.empty() && pred(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && pred(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

static bool is_space_or_punct(unsigned char c) { return is_space(c) || is_punct(c); }

std::string normalize_answer(std::string_view text) {
    text = trim(text, is_space_or_punct);
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        out += (c < 0x80) ? static_cast<char>(std::tolower(c)) : ch;
    }
    return out;
}

static std::string first_word(std::string_view normalized) {
    const auto end = normalized.find(' ');
    return std::string(trim(normalized.substr(0, end), is_punct));
}

static bool matches_normalized(const std::string& normalized_text, const std::string& label) {
    const std::string norm_label = normalize_answer(label);
    if (norm_label.empty()) return false;
    if (norm_label.find(' ') == std::string::npos) return first_word(normalized_text) == norm_label;
    return normalized_text == norm_label;
}

Mapping map_response(std::string_view raw_text, const PromptVariant& variant) {
    const std::string_view trimmed = trim(raw_text, is_space);
    const bool exact0 = trimmed == variant.answer_labels[0];
    const bool exact1 = trimmed == variant.answer_labels[1];
    if (exact0 != exact1) return {variant.choice_at(exact0 ? 0 : 1), MappingStage::exact};

    const std::string normalized = normalize_answer(raw_text);
    const bool norm0 = matches_normalized(normalized, variant.answer_labels[0]);
    const bool norm1 = matches_normalized(normalized, variant.answer_labels[1]);
    if (norm0 != norm1) return {variant.choice_at(norm0 ? 0 : 1), MappingStage::normalized};
    return {};
}

// ---- Collection --------------------------------------------------------

std::string ResponseRecord::variant_name() const {
    return std::string(to_string(template_id)) + "/" + std::string(to_string(choice_order));
}

std::string request_tag(std::string_view docket_id, std::string_view variant_id, int sample_index) {
    return std::string(docket_id) + "/" + std::string(variant_id) + "/s" + std::to_string(sample_index);
}

std::vector<ResponseRecord> collect_responses(std::span<const SurveyCase> cases, const std::string& model_id,
                                              const PromptTemplateSet& templates, llm::CompletionClient& client,
                                              const ProbeOptions& options) {
    if (model_id.empty()) throw ValidationError("model id is empty", {}, "model_id");
    if (options.samples_per_variant < 1)
        throw ValidationError("samples_per_variant must be >= 1", {}, "samples_per_variant");

    std::vector<PromptVariant> variants;
    std::vector<int> samples;
    std::vector<llm::CompletionRequest> requests;
    for (const auto& c : cases) {
        for (auto& v : render_prompts(c, templates)) {
            for (int s = 1; s <= options.samples_per_variant; ++s) {
                llm::CompletionRequest r;
                r.model_id = model_id;
                r.prompt_text = v.rendered_text;
                r.temperature = options.temperature;
                r.max_tokens = options.max_tokens;
                r.request_tag = request_tag(v.docket_id, v.variant_id(), s);
                requests.push_back(std::move(r));
                variants.push_back(v);
                samples.push_back(s);
            }
        }
    }

    const auto items = llm::complete_batch(client, requests, options.max_in_flight);
    std::vector<ResponseRecord> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& v = variants[i];
        ResponseRecord rec;
        rec.docket_id = v.docket_id;
        rec.model_id = model_id;
        rec.variant_id = v.variant_id();
        rec.template_id = v.template_id;
        rec.choice_order = v.choice_order;
        rec.sample_index = samples[i];
        if (items[i].ok()) {
            rec.raw_text = items[i].result->raw_text;
            const auto m = map_response(rec.raw_text, v);
            rec.mapped_choice = m.choice;
            rec.mapping_stage = m.stage;
        } else {
            const auto& f = *items[i].failure;
            rec.error = std::string(llm::to_string(f.kind)) + ": " + f.message;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<ResponseRecord> collect_responses(const SurveyCase& survey_case, const std::string& model_id,
                                              const PromptTemplateSet& templates, llm::CompletionClient& client,
                                              const ProbeOptions& options) {
    return collect_responses(std::span<const SurveyCase>(&survey_case, 1), model_id, templates, client, options);
}

std::map<std::string, CaseTally> tally(std::span<const ResponseRecord> records) {
    std::map<std::string, CaseTally> out;
    for (const auto& r : records) {
        auto& t = out[r.docket_id];
        switch (r.mapped_choice) {
            case MappedChoice::pro: ++t.pro; break;
            case MappedChoice::opp: ++t.opp; break;
            case MappedChoice::unmatched: ++t.unmatched; break;
        }
        if (!r.error.empty()) ++t.errors;
    }
    return out;
}

PreferenceDistribution aggregate_llm_distribution(std::span<const ResponseRecord> records,
                                                  const SurveyDataset& dataset, std::string entity_id) {
    std::string model;
    for (const auto& r : records) {
        if (model.empty()) model = r.model_id;
        if (r.model_id != model)
            throw ValidationError("responses mix models '" + model + "' and '" + r.model_id + "'", r.docket_id,
                                  "model");
        if (!dataset.try_find_case(r.docket_id)) throw ValidationError("response for unknown docket", r.docket_id);
    }
    if (entity_id.empty()) entity_id = model;
    if (entity_id.empty()) throw ValidationError("cannot name a distribution without responses or an entity id");

    const auto counts = tally(records);
    std::vector<PreferenceRow> rows;
    rows.reserve(dataset.cases.size());
    for (const auto& c : dataset.cases) {
        PreferenceRow row{c.docket_id, std::nullopt};
        if (const auto it = counts.find(c.docket_id); it != counts.end() && it->second.mapped() > 0)
            row.p_pro = static_cast<double>(it->second.pro) / static_cast<double>(it->second.mapped());
        rows.push_back(std::move(row));
    }
    return PreferenceDistribution(std::move(entity_id), std::move(rows), EntityKind::model);
}

// ---- Response log ------------------------------------------------------

json to_json(const ResponseRecord& r) {
    json j = {{"docket", r.docket_id},
              {"model", r.model_id},
              {"variant", r.variant_id},
              {"template", to_string(r.template_id)},
              {"order", to_string(r.choice_order)},
              {"sample", r.sample_index},
              {"raw_text", r.raw_text},
              {"mapped_choice", to_string(r.mapped_choice)},
              {"mapping_stage", to_string(r.mapping_stage)}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

ResponseRecord response_from_json(const json& j) {
    try {
        ResponseRecord r;
        r.docket_id = j.at("docket").get<std::string>();
        r.model_id = j.at("model").get<std::string>();
        r.variant_id = j.at("variant").get<std::string>();
        r.template_id = template_id_from_string(j.at("template").get<std::string>());
        r.choice_order = choice_order_from_string(j.at("order").get<std::string>());
        r.sample_index = j.at("sample").get<int>();
        r.raw_text = j.at("raw_text").get<std::string>();
        r.mapped_choice = mapped_choice_from_string(j.at("mapped_choice").get<std::string>());
        r.mapping_stage = mapping_stage_from_string(j.at("mapping_stage").get<std::string>());
        r.error = j.value("error", std::string());
        if ((r.mapped_choice == MappedChoice::unmatched) != (r.mapping_stage == MappingStage::none))
            throw ParseError("mapped_choice and mapping_stage disagree for " +
                             request_tag(r.docket_id, r.variant_id, r.sample_index));
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed response record: ") + e.what());
    }
}

std::string format_response_log(std::span<const ResponseRecord> records, const std::string& config_hash) {
    std::string out;
    for (const auto& r : records) {
        json j = to_json(r);
        if (!config_hash.empty()) j["config_hash"] = config_hash;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void write_response_log(const fs::path& path, std::span<const ResponseRecord> records,
                        const std::string& config_hash) {
    write_text_file(path, format_response_log(records, config_hash));
}

void append_response_log(const fs::path& path, std::span<const ResponseRecord> records,
                         const std::string& config_hash) {
    std::string existing;
    if (fs::exists(path)) existing = read_text_file(path);
    if (!existing.empty() && existing.back() != '\n') existing += '\n';
    write_text_file(path, existing + format_response_log(records, config_hash));
}

std::vector<ResponseRecord> read_response_log(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<ResponseRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line, is_space).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            out.push_back(response_from_json(j));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// ---- Adjudication ------------------------------------------------------

CsvTable adjudication_table(std::span<const ResponseRecord> records, const std::string& config_hash) {
    CsvTable table;
    if (!config_hash.empty()) table.comments.push_back("polalign config_hash=" + config_hash);
    table.header.assign(kAdjudicationHeader.begin(), kAdjudicationHeader.end());
    for (const auto& r : records) {
        if (r.mapped_choice != MappedChoice::unmatched || !r.error.empty()) continue;
        table.rows.push_back({r.docket_id, r.model_id, r.variant_id, std::to_string(r.sample_index), r.raw_text, ""});
    }
    return table;
}

void export_adjudication(const fs::path& path, std::span<const ResponseRecord> records,
                         const std::string& config_hash) {
    write_text_file(path, format_csv(adjudication_table(records, config_hash)));
}

AdjudicationOutcome apply_adjudication(std::vector<ResponseRecord>& records, const CsvTable& table) {
    const std::size_t c_docket = table.column("docket");
    const std::size_t c_model = table.column("model");
    const std::size_t c_variant = table.column("variant");
    const std::size_t c_sample = table.column("sample");
    const std::size_t c_choice = table.column("manual_choice");

    std::map<std::tuple<std::string, std::string, std::string, int>, std::size_t> index;
    for (std::size_t i = 0; i < records.size(); ++i)
        index[{records[i].docket_id, records[i].model_id, records[i].variant_id, records[i].sample_index}] = i;

    AdjudicationOutcome outcome;
    std::vector<std::pair<std::size_t, MappedChoice>> updates;
    std::set<std::size_t> touched;
    std::vector<std::string> problems;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = "line " + std::to_string(table.line_numbers[r]);
        const std::string choice_text{trim(row[c_choice], is_space)};
        if (choice_text.empty()) {
            ++outcome.skipped_blank;
            continue;
        }
        if (choice_text != "pro" && choice_text != "opp") {
            problems.push_back(where + ": manual_choice must be 'pro' or 'opp', found '" + choice_text + "'");
            continue;
        }
        int sample = 0;
        try {
            std::size_t used = 0;
            sample = std::stoi(row[c_sample], &used);
            if (used != row[c_sample].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            problems.push_back(where + ": sample is not an integer");
            continue;
        }
        const auto it = index.find({row[c_docket], row[c_model], row[c_variant], sample});
        if (it == index.end()) {
            problems.push_back(where + ": no such response " + row[c_model] + " " +
                               request_tag(row[c_docket], row[c_variant], sample));
            continue;
        }
        const auto& rec = records[it->second];
        if (rec.mapped_choice != MappedChoice::unmatched) {
            problems.push_back(where + ": response was already mapped at stage " +
                               std::string(to_string(rec.mapping_stage)));
            continue;
        }
        if (!touched.insert(it->second).second) {
            problems.push_back(where + ": response adjudicated twice");
            continue;
        }
        updates.emplace_back(it->second, mapped_choice_from_string(choice_text));
    }
    if (!problems.empty()) {
        std::string message = "adjudication rejected:";
        for (const auto& p : problems) message += "\n  " + p;
        throw ValidationError(message, {}, "manual_choice");
    }
    for (const auto& [i, choice] : updates) {
        records[i].mapped_choice = choice;
        records[i].mapping_stage = MappingStage::manual;
    }
    outcome.applied = updates.size();
    return outcome;
}

}  // namespace polalign::probe
