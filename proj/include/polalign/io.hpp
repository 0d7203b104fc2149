#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace polalign {

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Two-space indented JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& document);

/// 64-bit FNV-1a. Stable across platforms; used for prompt-hash mock keys,
/// config hashes and per-case seed derivation.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

// Minimal RFC 4180 CSV. Lines starting with '#' before the header are
// comments (output files put their metadata there).
using CsvRow = std::vector<std::string>;

struct CsvTable {
    std::vector<std::string> comments;
    CsvRow header;
    std::vector<CsvRow> rows;
    /// 1-based line number of each row in the source text.
    std::vector<std::size_t> line_numbers;

    std::size_t column(std::string_view name) const;
};

std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& row);
CsvTable parse_csv(std::string_view text);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Serializes comments, header and rows. Comment lines are prefixed with "# ".
std::string format_csv(const CsvTable& table);

/// Shortest of 15 or `precision` significant digits that reads back exactly.
std::string format_double(double value, int precision = 17);

/// Single-pass substitution of "{name}" placeholders. Substituted text is not
/// rescanned; unknown placeholders are left untouched.
std::string fill_placeholders(std::string_view text, const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace polalign
