#include "polalign/report.hpp"

#include <algorithm>
#include <cstdio>

#include "polalign/stance.hpp"

namespace polalign::report {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path OutputLayout::distribution(const std::string& entity) const { return root / "distributions" / (entity + ".json"); }
fs::path OutputLayout::responses(const std::string& model) const { return root / "responses" / (model + ".jsonl"); }
fs::path OutputLayout::adjudication(const std::string& model) const {
    return root / "adjudication" / (model + ".csv");
}
fs::path OutputLayout::recording(const std::string& endpoint) const {
    return root / "recordings" / (endpoint + ".json");
}
fs::path OutputLayout::stance_log(const std::string& corpus) const { return root / "stance" / (corpus + ".jsonl"); }
fs::path OutputLayout::stance_summary(const std::string& corpus) const {
    return root / "stance" / (corpus + "_summary.csv");
}
fs::path OutputLayout::retrieval_log(const std::string& corpus) const {
    return root / "stance" / (corpus + "_retrieval.csv");
}
fs::path OutputLayout::alignment_json() const { return root / "align" / "alignment.json"; }
fs::path OutputLayout::alignment_csv() const { return root / "align" / "alignment_long.csv"; }
fs::path OutputLayout::significance_json(const std::string& model) const {
    return root / "align" / ("significance_" + model + ".json");
}
fs::path OutputLayout::significance_csv() const { return root / "align" / "significance_long.csv"; }
fs::path OutputLayout::divergence_csv() const { return root / "align" / "js_divergence.csv"; }
fs::path OutputLayout::report_markdown() const { return root / "report.md"; }

json run_metadata(const RunConfig& config) {
    return {{"tool", "polalign"},
            {"config_hash", config.config_hash},
            {"seed", config.seed},
            {"random_baseline", config.random_baseline ? json(std::string(stats::kRandomBaselineId)) : json(nullptr)},
            {"transform", std::string(stance::kTransformName)},
            {"pearson_p", "two-sided, t on n-2 df"},
            {"williams_p", config.sidedness + ", t on n-3 df"},
            {"williams_form", stats::to_string(config.williams_form)},
            {"star_thresholds", {{"*", stats::kStarThreshold}, {"**", stats::kDoubleStarThreshold}}},
            {"alpha", config.alpha},
            {"bootstrap",
             {{"resamples", config.bootstrap.resamples},
              {"fraction", config.bootstrap.fraction},
              {"seed", config.bootstrap.seed},
              {"sampling", "without replacement"},
              {"bounds", "percentiles 5 and 95 of resample means, linear interpolation"}}}};
}

std::string csv_provenance(const RunConfig& config) {
    return "polalign config_hash=" + config.config_hash + " seed=" + std::to_string(config.seed) +
           " williams_form=" + std::string(stats::to_string(config.williams_form)) + " sidedness=" + config.sidedness;
}

json alignment_json(const stats::AlignmentMatrix& m, const json& metadata) {
    json kinds = json::array();
    for (auto k : m.kinds) kinds.push_back(to_string(k));
    json matrix = json::object();
    for (std::size_t i = 0; i < m.entities.size(); ++i) {
        json row = json::object();
        for (std::size_t j = 0; j < m.entities.size(); ++j) {
            const auto& cell = m.at(i, j);
            json c;
            if (cell.ok())
                c = {{"rho", cell.result->rho}, {"p", cell.result->p_value}, {"n", cell.result->n}, {"stars", cell.stars()}};
            else
                c = {{"degenerate", cell.degenerate_reason}};
            if (cell.involves_baseline) c["baseline"] = true;
            row[m.entities[j]] = std::move(c);
        }
        matrix[m.entities[i]] = std::move(row);
    }
    return {{"metadata", metadata}, {"entities", m.entities}, {"kinds", std::move(kinds)}, {"matrix", std::move(matrix)}};
}

CsvTable alignment_long(const stats::AlignmentMatrix& m, const std::vector<std::string>& comments) {
    CsvTable t;
    t.comments = comments;
    t.header = {"row_entity", "col_entity", "row_kind", "col_kind", "rho", "p_value", "n", "stars", "baseline", "degenerate"};
    for (std::size_t i = 0; i < m.entities.size(); ++i) {
        for (std::size_t j = 0; j < m.entities.size(); ++j) {
            const auto& cell = m.at(i, j);
            CsvRow row{m.entities[i], m.entities[j], std::string(to_string(m.kinds[i])), std::string(to_string(m.kinds[j]))};
            if (cell.ok()) {
                row.insert(row.end(), {format_double(cell.result->rho), format_double(cell.result->p_value),
                                       std::to_string(cell.result->n), cell.stars()});
            } else {
                row.insert(row.end(), {"", "", "", ""});
            }
            row.push_back(cell.involves_baseline ? "1" : "0");
            row.push_back(cell.degenerate_reason);
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

void apply_sidedness(stats::SignificanceMatrix& m, const std::string& sidedness) {
    for (auto& row : m.cells)
        for (auto& cell : row) {
            if (!cell.ok()) continue;
            const auto& w = *cell.result;
            cell.significant = sidedness == "two-sided" ? (w.t_stat > 0.0 && w.p_value_two_sided < m.alpha)
                                                        : w.p_value < m.alpha;
        }
}

json significance_json(const stats::SignificanceMatrix& m, const json& metadata) {
    json grid = json::object();
    for (std::size_t i = 0; i < m.entities.size(); ++i) {
        json row = json::object();
        for (std::size_t j = 0; j < m.entities.size(); ++j) {
            if (i == j) continue;
            const auto& cell = m.at(i, j);
            json c;
            if (cell.ok()) {
                const auto& w = *cell.result;
                c = {{"rho_12", w.rho_12}, {"rho_13", w.rho_13},     {"rho_23", w.rho_23},
                     {"t", w.t_stat},      {"df", w.df},             {"n", w.n},
                     {"p", w.p_value},     {"p_two_sided", w.p_value_two_sided}, {"significant", cell.significant}};
            } else {
                c = {{"degenerate", cell.degenerate_reason}, {"significant", false}};
            }
            row[m.entities[j]] = std::move(c);
        }
        grid[m.entities[i]] = std::move(row);
    }
    return {{"metadata", metadata},
            {"model", m.model_entity},
            {"entities", m.entities},
            {"alpha", m.alpha},
            {"williams_form", stats::to_string(m.form)},
            {"grid", std::move(grid)}};
}

CsvTable significance_long(std::span<const stats::SignificanceMatrix> matrices, const std::vector<std::string>& comments) {
    CsvTable t;
    t.comments = comments;
    t.header = {"model", "entity_1", "entity_2", "rho_12", "rho_13", "rho_23", "t", "df", "n",
                "p_value", "p_two_sided", "significant", "form", "degenerate"};
    for (const auto& m : matrices) {
        for (std::size_t i = 0; i < m.entities.size(); ++i) {
            for (std::size_t j = 0; j < m.entities.size(); ++j) {
                if (i == j) continue;
                const auto& cell = m.at(i, j);
                CsvRow row{m.model_entity, m.entities[i], m.entities[j]};
                if (cell.ok()) {
                    const auto& w = *cell.result;
                    row.insert(row.end(), {format_double(w.rho_12), format_double(w.rho_13), format_double(w.rho_23),
                                           format_double(w.t_stat), std::to_string(w.df), std::to_string(w.n),
                                           format_double(w.p_value), format_double(w.p_value_two_sided)});
                } else {
                    row.insert(row.end(), 8, "");
                }
                row.push_back(cell.significant ? "1" : "0");
                row.push_back(std::string(stats::to_string(m.form)));
                row.push_back(cell.degenerate_reason);
                t.rows.push_back(std::move(row));
            }
        }
    }
    return t;
}

static std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string format_alignment_table(const stats::AlignmentMatrix& m) {
    std::size_t w = 8;
    for (const auto& e : m.entities) w = std::max(w, e.size() + 1);
    std::string out = pad("", w);
    for (const auto& e : m.entities) out += pad(e, w);
    out += '\n';
    for (std::size_t i = 0; i < m.entities.size(); ++i) {
        out += pad(m.entities[i], w);
        for (std::size_t j = 0; j < m.entities.size(); ++j) {
            const auto& cell = m.at(i, j);
            if (!cell.ok()) {
                out += pad("n/a", w);
                continue;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f%s", cell.result->rho, cell.stars().c_str());
            out += pad(buf, w);
        }
        out += '\n';
    }
    return out;
}

std::string format_significance_table(const stats::SignificanceMatrix& m) {
    std::size_t w = 8;
    for (const auto& e : m.entities) w = std::max(w, e.size() + 1);
    std::string out = pad(m.model_entity, w);
    for (const auto& e : m.entities) out += pad(e, w);
    out += '\n';
    for (std::size_t i = 0; i < m.entities.size(); ++i) {
        out += pad(m.entities[i], w);
        for (std::size_t j = 0; j < m.entities.size(); ++j) {
            if (i == j) {
                out += pad("-", w);
                continue;
            }
            const auto& cell = m.at(i, j);
            out += pad(!cell.ok() ? "n/a" : cell.significant ? "*" : ".", w);
        }
        out += '\n';
    }
    return out;
}

}  // namespace polalign::report
