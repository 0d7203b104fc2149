#include "polalign/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "polalign/error.hpp"

namespace polalign {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

nlohmann::json read_json_file(const fs::path& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const nlohmann::json& document) {
    write_text_file(path, document.dump(2) + "\n");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError("CSV is missing column '" + std::string(name) + "'");
}

std::string csv_escape(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                              (!field.empty() && (field.front() == ' ' || field.back() == ' ' || field.front() == '#'));
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_line(const CsvRow& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(row[i]);
    }
    out += '\n';
    return out;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t pos = 0;
    std::size_t line = 1;
    bool have_header = false;

    while (pos < text.size()) {
        // Comment lines are only recognised ahead of the header.
        if (!have_header && text[pos] == '#') {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            std::string_view body = text.substr(pos + 1, end - pos - 1);
            if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
            if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            table.comments.emplace_back(body);
            pos = end + 1;
            ++line;
            continue;
        }

        const std::size_t row_line = line;
        CsvRow row;
        std::string field;
        bool in_quotes = false;
        bool row_done = false;
        while (!row_done) {
            if (pos >= text.size()) {
                if (in_quotes) throw ParseError("CSV: unterminated quoted field starting on line " + std::to_string(row_line));
                row.push_back(std::move(field));
                break;
            }
            const char c = text[pos++];
            if (in_quotes) {
                if (c == '"') {
                    if (pos < text.size() && text[pos] == '"') {
                        field += '"';
                        ++pos;
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') ++line;
                    field += c;
                }
            } else if (c == '"' && field.empty()) {
                in_quotes = true;
            } else if (c == ',') {
                row.push_back(std::move(field));
                field.clear();
            } else if (c == '\n' || c == '\r') {
                if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
                ++line;
                row.push_back(std::move(field));
                row_done = true;
            } else {
                field += c;
            }
        }
        if (row.size() == 1 && row.front().empty()) continue;  // blank line
        if (!have_header) {
            table.header = std::move(row);
            have_header = true;
        } else {
            if (row.size() != table.header.size())
                throw ParseError("CSV line " + std::to_string(row_line) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, found " + std::to_string(row.size()));
            table.rows.push_back(std::move(row));
            table.line_numbers.push_back(row_line);
        }
    }
    return table;
}

CsvTable read_csv_file(const fs::path& path) { return parse_csv(read_text_file(path)); }

std::string format_csv(const CsvTable& table) {
    std::string out;
    for (const auto& c : table.comments) out += "# " + c + "\n";
    out += csv_line(table.header);
    for (const auto& row : table.rows) out += csv_line(row);
    return out;
}

std::string format_double(double value, int precision) {
    auto render = [value](int digits) {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os.precision(digits);
        os << value;
        return os.str();
    };
    if (precision > 15) {
        std::string shorter = render(15);
        std::istringstream in(shorter);
        in.imbue(std::locale::classic());
        double back = 0.0;
        if (in >> back && back == value) return shorter;
    }
    return render(precision);
}

std::string fill_placeholders(std::string_view text, const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find('{', pos);
        if (open == std::string_view::npos) break;
        const std::size_t close = text.find('}', open + 1);
        if (close == std::string_view::npos) break;
        out.append(text.substr(pos, open - pos));
        const std::string_view name = text.substr(open + 1, close - open - 1);
        const auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
        if (it == values.end()) {
            out += '{';
            pos = open + 1;
            continue;
        }
        out += it->second;
        pos = close + 1;
    }
    out.append(text.substr(pos));
    return out;
}

}  // namespace polalign
