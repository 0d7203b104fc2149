#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polalign/http_client.hpp"
#include "polalign/llm_client.hpp"
#include "polalign/search.hpp"
#include "polalign/stance.hpp"
#include "polalign/williams.hpp"

namespace polalign {

/// A completion endpoint: live (`url`) or scripted (`mock_script`).
struct ModelEndpointConfig {
    std::string id;
    std::string url;
    /// Name sent on the wire; defaults to the id.
    std::string model_name;
    /// Environment variable holding the bearer token. Never the token itself.
    std::string api_key_env;
    std::optional<double> temperature;
    std::filesystem::path mock_script;
};

struct CorpusConfig {
    std::string id;
    std::string url;
    std::string api_key_env;
    /// Local fixture index used instead of a live endpoint.
    std::filesystem::path index;
    search::MatchMode match_mode = search::MatchMode::any;
};

struct RunConfig {
    std::filesystem::path dataset_path;
    std::filesystem::path output_dir;
    std::filesystem::path templates_path;
    std::filesystem::path stance_template_path;
    std::vector<ModelEndpointConfig> models;
    std::optional<ModelEndpointConfig> judge;
    std::vector<CorpusConfig> corpora;

    int samples_per_variant = 5;
    double probe_temperature = 1.0;
    int max_tokens = 64;
    std::size_t max_in_flight = llm::kDefaultMaxInFlight;
    int word_limit = search::kDefaultWordLimit;
    int search_limit = search::kDefaultResultLimit;
    stance::BootstrapOptions bootstrap;
    std::string transform = "linear";
    std::string sidedness = "one-sided";
    stats::WilliamsForm williams_form = stats::WilliamsForm::standard;
    double alpha = 0.05;
    std::uint64_t seed = 20240601;
    bool random_baseline = true;
    http::RetryPolicy retry;
    std::chrono::milliseconds timeout{120000};

    /// FNV-1a of the config document (keys sorted); embedded in every output.
    std::string config_hash;

    const ModelEndpointConfig& model(const std::string& id) const;
    const CorpusConfig& corpus(const std::string& id) const;
};

/// Parses the JSON config grammar; relative paths resolve against
/// `base_dir`. Throws ParseError / ValidationError.
RunConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form (sorted keys, resolved paths).
nlohmann::json to_json(const RunConfig& config);

/// Entity ids reserved for the survey groups, the court and the baseline.
std::vector<std::string> reserved_entity_ids();

/// Reads the credential named by `api_key_env`; ValidationError when the
/// variable is named but unset.
std::string resolve_api_key(const std::string& api_key_env);

/// Live or scripted client for an endpoint.
std::unique_ptr<llm::CompletionClient> make_completion_client(const ModelEndpointConfig& endpoint,
                                                              const RunConfig& config);
std::unique_ptr<search::SearchClient> make_search_client(const CorpusConfig& corpus, const RunConfig& config);

}  // namespace polalign
