#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polalign/alignment.hpp"
#include "polalign/config.hpp"
#include "polalign/io.hpp"

namespace polalign::report {

/// Where each command reads and writes, below the configured output dir.
struct OutputLayout {
    std::filesystem::path root;

    std::filesystem::path distribution(const std::string& entity) const;
    std::filesystem::path responses(const std::string& model) const;
    std::filesystem::path adjudication(const std::string& model) const;
    std::filesystem::path recording(const std::string& endpoint) const;
    std::filesystem::path stance_log(const std::string& corpus) const;
    std::filesystem::path stance_summary(const std::string& corpus) const;
    std::filesystem::path retrieval_log(const std::string& corpus) const;
    std::filesystem::path alignment_json() const;
    std::filesystem::path alignment_csv() const;
    std::filesystem::path significance_json(const std::string& model) const;
    std::filesystem::path significance_csv() const;
    std::filesystem::path divergence_csv() const;
    std::filesystem::path report_markdown() const;
};

/// Seed, transform, sidedness, thresholds, Williams form, config hash.
nlohmann::json run_metadata(const RunConfig& config);

/// Comment line that opens every CSV output.
std::string csv_provenance(const RunConfig& config);

/// {"metadata", "entities", "kinds", "matrix": {row: {col: {rho, p, n, stars}}}}.
/// Undefined cells carry {"degenerate": reason} instead.
nlohmann::json alignment_json(const stats::AlignmentMatrix& matrix, const nlohmann::json& metadata);

/// Long format: one row per ordered entity pair.
CsvTable alignment_long(const stats::AlignmentMatrix& matrix, const std::vector<std::string>& comments = {});

/// Marks cells significant under the chosen sidedness: one-sided p < alpha,
/// or two-sided p < alpha with a positive statistic.
void apply_sidedness(stats::SignificanceMatrix& matrix, const std::string& sidedness);

nlohmann::json significance_json(const stats::SignificanceMatrix& matrix, const nlohmann::json& metadata);
CsvTable significance_long(std::span<const stats::SignificanceMatrix> matrices,
                           const std::vector<std::string>& comments = {});

/// Fixed-width text table of rho with stars, for terminals and Markdown.
std::string format_alignment_table(const stats::AlignmentMatrix& matrix);
/// Grid of "*" marks: row i correlates significantly higher than column j.
std::string format_significance_table(const stats::SignificanceMatrix& matrix);

}  // namespace polalign::report
