#include "polalign/config.hpp"

#include <cctype>
#include <cstdlib>
#include <set>

#include "polalign/error.hpp"
#include "polalign/io.hpp"
#include "polalign/survey.hpp"

namespace polalign {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTopLevelKeys = {
    "dataset",     "output_dir",    "templates",   "stance_template", "models",          "judge",
    "corpora",     "samples_per_variant", "probe_temperature", "max_tokens", "max_in_flight", "word_limit",
    "search_limit", "bootstrap",    "transform",   "sidedness",       "williams_form",   "alpha",
    "seed",        "random_baseline", "retry",     "timeout_ms"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in " + where, {}, key);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path.lexically_normal() : (base / path).lexically_normal();
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("wrong type: ") + e.what(), {}, key);
    }
}

void check_id(const std::string& id, const std::string& where) {
    if (id.empty()) throw ValidationError(where + " id is empty", {}, "id");
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
            throw ValidationError(where + " id '" + id + "' may only use letters, digits, '-', '_' and '.'", {}, "id");
}

ModelEndpointConfig parse_endpoint(const json& j, const fs::path& base, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + " entry must be an object", {}, where);
    reject_unknown(j, {"id", "url", "model_name", "api_key_env", "temperature", "mock_script", "api_key"}, where);
    if (j.contains("api_key"))
        throw ValidationError("credentials may not appear in the config; name an environment variable in api_key_env",
                              {}, "api_key");
    ModelEndpointConfig e;
    e.id = get_or<std::string>(j, "id", "");
    check_id(e.id, where);
    e.url = get_or<std::string>(j, "url", "");
    e.model_name = get_or<std::string>(j, "model_name", "");
    e.api_key_env = get_or<std::string>(j, "api_key_env", "");
    if (j.contains("temperature")) e.temperature = get_or<double>(j, "temperature", 1.0);
    e.mock_script = resolve(base, get_or<std::string>(j, "mock_script", ""));
    if (e.url.empty() == e.mock_script.empty())
        throw ValidationError(where + " '" + e.id + "' needs exactly one of url or mock_script", {}, "url");
    if (e.temperature && (*e.temperature < 0.0 || *e.temperature > 2.0))
        throw ValidationError(where + " temperature must lie in [0, 2]", {}, "temperature");
    return e;
}

json endpoint_json(const ModelEndpointConfig& e) {
    json j = {{"id", e.id}};
    if (!e.url.empty()) j["url"] = e.url;
    if (!e.model_name.empty()) j["model_name"] = e.model_name;
    if (!e.api_key_env.empty()) j["api_key_env"] = e.api_key_env;
    if (e.temperature) j["temperature"] = *e.temperature;
    if (!e.mock_script.empty()) j["mock_script"] = e.mock_script.generic_string();
    return j;
}

}  // namespace

const ModelEndpointConfig& RunConfig::model(const std::string& id) const {
    for (const auto& m : models)
        if (m.id == id) return m;
    throw ValidationError("model '" + id + "' is not configured", {}, "models");
}

const CorpusConfig& RunConfig::corpus(const std::string& id) const {
    for (const auto& c : corpora)
        if (c.id == id) return c;
    throw ValidationError("corpus '" + id + "' is not configured", {}, "corpora");
}

std::vector<std::string> reserved_entity_ids() {
    return {entity_id(RespondentGroup::general_public), entity_id(RespondentGroup::democrat),
            entity_id(RespondentGroup::republican), std::string(court_entity_id), "random_1"};
}

RunConfig parse_config(const json& document, const fs::path& base_dir) {
    if (!document.is_object()) throw ParseError("config must be a JSON object");
    reject_unknown(document, kTopLevelKeys, "config");

    RunConfig c;
    c.dataset_path = resolve(base_dir, get_or<std::string>(document, "dataset", ""));
    if (c.dataset_path.empty()) throw ValidationError("config needs 'dataset'", {}, "dataset");
    c.output_dir = resolve(base_dir, get_or<std::string>(document, "output_dir", "out"));
    c.templates_path = resolve(base_dir, get_or<std::string>(document, "templates", ""));
    c.stance_template_path = resolve(base_dir, get_or<std::string>(document, "stance_template", ""));

    if (document.contains("models")) {
        if (!document["models"].is_array()) throw ValidationError("'models' must be an array", {}, "models");
        for (const auto& m : document["models"]) c.models.push_back(parse_endpoint(m, base_dir, "model"));
    }
    if (document.contains("judge")) c.judge = parse_endpoint(document["judge"], base_dir, "judge");
    if (document.contains("corpora")) {
        if (!document["corpora"].is_array()) throw ValidationError("'corpora' must be an array", {}, "corpora");
        for (const auto& j : document["corpora"]) {
            if (!j.is_object()) throw ValidationError("corpus entry must be an object", {}, "corpora");
            reject_unknown(j, {"id", "url", "api_key_env", "index", "match_mode"}, "corpus");
            CorpusConfig k;
            k.id = get_or<std::string>(j, "id", "");
            check_id(k.id, "corpus");
            k.url = get_or<std::string>(j, "url", "");
            k.api_key_env = get_or<std::string>(j, "api_key_env", "");
            k.index = resolve(base_dir, get_or<std::string>(j, "index", ""));
            try {
                k.match_mode = search::match_mode_from_string(get_or<std::string>(j, "match_mode", "any"));
            } catch (const ParseError& e) {
                throw ValidationError(e.what(), {}, "match_mode");
            }
            if (k.url.empty() == k.index.empty())
                throw ValidationError("corpus '" + k.id + "' needs exactly one of url or index", {}, "url");
            c.corpora.push_back(std::move(k));
        }
    }

    c.samples_per_variant = get_or<int>(document, "samples_per_variant", c.samples_per_variant);
    c.probe_temperature = get_or<double>(document, "probe_temperature", c.probe_temperature);
    c.max_tokens = get_or<int>(document, "max_tokens", c.max_tokens);
    c.max_in_flight = get_or<std::size_t>(document, "max_in_flight", c.max_in_flight);
    c.word_limit = get_or<int>(document, "word_limit", c.word_limit);
    c.search_limit = get_or<int>(document, "search_limit", c.search_limit);
    if (document.contains("bootstrap")) {
        const auto& b = document["bootstrap"];
        if (!b.is_object()) throw ValidationError("'bootstrap' must be an object", {}, "bootstrap");
        reject_unknown(b, {"resamples", "fraction", "seed"}, "bootstrap");
        c.bootstrap.resamples = get_or<int>(b, "resamples", c.bootstrap.resamples);
        c.bootstrap.fraction = get_or<double>(b, "fraction", c.bootstrap.fraction);
        c.bootstrap.seed = get_or<std::uint64_t>(b, "seed", c.bootstrap.seed);
    }
    c.transform = get_or<std::string>(document, "transform", c.transform);
    c.sidedness = get_or<std::string>(document, "sidedness", c.sidedness);
    try {
        c.williams_form = stats::williams_form_from_string(get_or<std::string>(document, "williams_form", "standard"));
    } catch (const Error& e) {
        throw ValidationError(e.what(), {}, "williams_form");
    }
    c.alpha = get_or<double>(document, "alpha", c.alpha);
    c.seed = get_or<std::uint64_t>(document, "seed", c.seed);
    c.random_baseline = get_or<bool>(document, "random_baseline", c.random_baseline);
    if (document.contains("retry")) {
        const auto& r = document["retry"];
        if (!r.is_object()) throw ValidationError("'retry' must be an object", {}, "retry");
        reject_unknown(r, {"max_attempts", "base_delay_ms", "max_delay_ms", "jitter"}, "retry");
        c.retry.max_attempts = get_or<int>(r, "max_attempts", c.retry.max_attempts);
        c.retry.base_delay = std::chrono::milliseconds(get_or<long long>(r, "base_delay_ms", c.retry.base_delay.count()));
        c.retry.max_delay = std::chrono::milliseconds(get_or<long long>(r, "max_delay_ms", c.retry.max_delay.count()));
        c.retry.jitter = get_or<bool>(r, "jitter", c.retry.jitter);
    }
    c.timeout = std::chrono::milliseconds(get_or<long long>(document, "timeout_ms", c.timeout.count()));

    // Numeric preconditions.
    if (c.samples_per_variant < 1) throw ValidationError("samples_per_variant must be >= 1", {}, "samples_per_variant");
    if (c.probe_temperature < 0.0 || c.probe_temperature > 2.0)
        throw ValidationError("probe_temperature must lie in [0, 2]", {}, "probe_temperature");
    if (c.max_tokens < 1) throw ValidationError("max_tokens must be >= 1", {}, "max_tokens");
    if (c.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1", {}, "max_in_flight");
    if (c.word_limit < 1) throw ValidationError("word_limit must be >= 1", {}, "word_limit");
    if (c.search_limit < 1) throw ValidationError("search_limit must be >= 1", {}, "search_limit");
    if (c.bootstrap.resamples < 1) throw ValidationError("bootstrap.resamples must be >= 1", {}, "bootstrap.resamples");
    if (!(c.bootstrap.fraction > 0.0 && c.bootstrap.fraction <= 1.0))
        throw ValidationError("bootstrap.fraction must lie in (0, 1]", {}, "bootstrap.fraction");
    if (c.transform != "linear")
        throw ValidationError("transform '" + c.transform + "' is not supported (available: linear)", {}, "transform");
    if (c.sidedness != "one-sided" && c.sidedness != "two-sided")
        throw ValidationError("sidedness must be 'one-sided' or 'two-sided'", {}, "sidedness");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)", {}, "alpha");
    if (c.retry.max_attempts < 1) throw ValidationError("retry.max_attempts must be >= 1", {}, "retry.max_attempts");
    if (c.retry.base_delay.count() < 0 || c.retry.max_delay < c.retry.base_delay)
        throw ValidationError("retry delays must satisfy 0 <= base_delay_ms <= max_delay_ms", {}, "retry");
    if (c.timeout.count() < 1) throw ValidationError("timeout_ms must be >= 1", {}, "timeout_ms");

    // Entity ids are unique across every category.
    std::set<std::string> ids;
    for (const auto& r : reserved_entity_ids()) ids.insert(r);
    auto claim = [&](const std::string& id, const char* field) {
        if (!ids.insert(id).second) throw ValidationError("entity id '" + id + "' is used twice", {}, field);
    };
    for (const auto& m : c.models) claim(m.id, "models");
    for (const auto& k : c.corpora) claim(k.id, "corpora");

    // Hash the document as written so it does not depend on where it is checked out.
    c.config_hash = hex64(fnv1a64(document.dump()));
    return c;
}

RunConfig load_config(const fs::path& path) {
    return parse_config(read_json_file(path), fs::absolute(path).parent_path());
}

json to_json(const RunConfig& c) {
    json models = json::array();
    for (const auto& m : c.models) models.push_back(endpoint_json(m));
    json corpora = json::array();
    for (const auto& k : c.corpora) {
        json j = {{"id", k.id}, {"match_mode", search::to_string(k.match_mode)}};
        if (!k.url.empty()) j["url"] = k.url;
        if (!k.api_key_env.empty()) j["api_key_env"] = k.api_key_env;
        if (!k.index.empty()) j["index"] = k.index.generic_string();
        corpora.push_back(std::move(j));
    }
    json j = {{"dataset", c.dataset_path.generic_string()},
              {"output_dir", c.output_dir.generic_string()},
              {"models", std::move(models)},
              {"corpora", std::move(corpora)},
              {"samples_per_variant", c.samples_per_variant},
              {"probe_temperature", c.probe_temperature},
              {"max_tokens", c.max_tokens},
              {"max_in_flight", c.max_in_flight},
              {"word_limit", c.word_limit},
              {"search_limit", c.search_limit},
              {"bootstrap", {{"resamples", c.bootstrap.resamples}, {"fraction", c.bootstrap.fraction}, {"seed", c.bootstrap.seed}}},
              {"transform", c.transform},
              {"sidedness", c.sidedness},
              {"williams_form", stats::to_string(c.williams_form)},
              {"alpha", c.alpha},
              {"seed", c.seed},
              {"random_baseline", c.random_baseline},
              {"retry",
               {{"max_attempts", c.retry.max_attempts},
                {"base_delay_ms", c.retry.base_delay.count()},
                {"max_delay_ms", c.retry.max_delay.count()},
                {"jitter", c.retry.jitter}}},
              {"timeout_ms", c.timeout.count()}};
    if (!c.templates_path.empty()) j["templates"] = c.templates_path.generic_string();
    if (!c.stance_template_path.empty()) j["stance_template"] = c.stance_template_path.generic_string();
    if (c.judge) j["judge"] = endpoint_json(*c.judge);
    return j;
}

std::string resolve_api_key(const std::string& api_key_env) {
    if (api_key_env.empty()) return {};
    const char* value = std::getenv(api_key_env.c_str());
    if (!value || !*value)
        throw ValidationError("environment variable " + api_key_env + " is not set", {}, "api_key_env");
    return value;
}

std::unique_ptr<llm::CompletionClient> make_completion_client(const ModelEndpointConfig& endpoint,
                                                              const RunConfig& config) {
    if (!endpoint.mock_script.empty())
        return std::make_unique<llm::MockClient>(llm::MockClient::from_file(endpoint.mock_script));
    http::ChatEndpoint chat;
    chat.url = endpoint.url;
    chat.model_name = endpoint.model_name.empty() ? endpoint.id : endpoint.model_name;
    chat.api_key = resolve_api_key(endpoint.api_key_env);
    chat.timeout = config.timeout;
    chat.retry = config.retry;
    chat.jitter_seed = config.seed;
    return std::make_unique<http::ChatCompletionClient>(std::move(chat));
}

std::unique_ptr<search::SearchClient> make_search_client(const CorpusConfig& corpus, const RunConfig& config) {
    if (!corpus.index.empty())
        return std::make_unique<search::FixtureIndex>(search::FixtureIndex::load(corpus.index, corpus.match_mode));
    search::SearchEndpoint ep;
    ep.url = corpus.url;
    ep.api_key = resolve_api_key(corpus.api_key_env);
    ep.timeout = config.timeout;
    ep.retry = config.retry;
    ep.jitter_seed = config.seed;
    return std::make_unique<search::HttpSearchClient>(std::move(ep));
}

}  // namespace polalign
