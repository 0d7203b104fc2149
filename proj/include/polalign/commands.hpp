#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "polalign/config.hpp"

namespace polalign::cli {

/// Stable process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitValidation = 2,
    kExitTransport = 3,
    kExitPartial = 4,
};

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

/// Validates the survey and writes the human-group and court distributions.
int cmd_ingest(const RunConfig& config, Streams io);

struct ProbeArgs {
    std::string model_id;
    /// Capture live replies into a mock script at this path.
    std::filesystem::path record;
    /// Serve replies from this mock script instead of the endpoint.
    std::filesystem::path replay;
};

/// Writes the response log, the adjudication file and the model
/// distribution. Exit 3 when every request failed in transport, 4 when any
/// case has no mapped response.
int cmd_probe(const RunConfig& config, const ProbeArgs& args, Streams io);

/// Merges manual codes into the model's response log and rebuilds its
/// distribution. Rejected files leave every output untouched (exit 2).
int cmd_adjudicate(const RunConfig& config, const std::string& model_id, const std::filesystem::path& csv_path,
                   Streams io);

struct MineArgs {
    std::string corpus_id;
    std::filesystem::path judge_record;
    std::filesystem::path judge_replay;
};

/// Retrieval, stance scoring and aggregation for one corpus. Per-case
/// retrieval failures are logged and the run continues. Exit 3 when every
/// retrieval failed, 4 when any case ends up missing.
int cmd_mine(const RunConfig& config, const MineArgs& args, Streams io);

struct AlignArgs {
    /// Empty: every entity with a distribution file, plus the baseline.
    std::vector<std::string> entities;
    bool js_divergence = false;
};

/// Alignment matrix, per-model Williams grids and long-format CSVs.
int cmd_align(const RunConfig& config, const AlignArgs& args, Streams io);

/// Markdown summary of the alignment, significance and stance outputs.
int cmd_report(const RunConfig& config, Streams io);

struct FixtureArgs {
    std::filesystem::path stats;
    std::filesystem::path dataset;
    std::filesystem::path out_dir;
    std::uint64_t seed = 20240601;
    /// Also write model_<group>.json: a model mock script that reproduces
    /// this group's distribution ("court" plants the court votes).
    std::string plant_group;
    int plant_samples = 5;
    std::filesystem::path templates;
};

/// Synthetic corpus index plus judge mock script from retrieval statistics.
int cmd_fixture(const FixtureArgs& args, Streams io);

/// Runs `body`, mapping exceptions to exit codes and messages on io.err.
int guarded(const std::function<int()>& body, Streams io);

}  // namespace polalign::cli
