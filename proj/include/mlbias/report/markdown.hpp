#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

namespace mlbias::report {

/// Fixed-point rendering with `decimals` places; "n/a" for null or
/// non-numeric values.
inline std::string fixed(const nlohmann::json& v, int decimals) {
    if (!v.is_number()) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v.get<double>());
    return buf;
}

inline std::string escape_cell(std::string s) {
    std::string out;
    for (char ch : s) {
        if (ch == '|') out += "\\|";
        else if (ch == '\n') out += ' ';
        else out += ch;
    }
    return out;
}

inline const nlohmann::json* find_task(const nlohmann::json& report, std::string_view name) {
    for (const auto& t : report.at("tasks"))
        if (t.at("task") == name) return &t;
    return nullptr;
}

inline nlohmann::json task_result(const nlohmann::json& report, std::string_view name) {
    const auto* t = find_task(report, name);
    if (!t || t->at("status") != "ok") return nullptr;
    return t->at("result");
}

namespace detail {

inline void render_seat(std::string& md, const nlohmann::json& r) {
    md += "| Test | d | p |\n|---|---|---|\n";
    for (const auto& t : r.at("tests"))
        md += "| " + escape_cell(t.at("test").get<std::string>()) + " | " + fixed(t.at("d"), 3) + " | " +
              fixed(t.at("p_value"), 4) + " |\n";
    md += "\nAvg. SEAT (mean |d|): " + fixed(r.at("avg_abs_d"), 3) + "\n";
}

inline void render_crows(std::string& md, const nlohmann::json& r) {
    md += "Metric score: " + fixed(r.at("metric_score"), 2) + " (pairs " + r.at("n_pairs").dump() + ", ties " +
          r.at("n_ties").dump() + ", unscorable " + r.at("n_unscorable").dump() + ")\n\n";
    md += "| Category | Pairs | Score |\n|---|---|---|\n";
    for (const auto& [name, c] : r.at("per_category").items())
        md += "| " + escape_cell(name) + " | " + c.at("n_pairs").dump() + " | " + fixed(c.at("score"), 2) + " |\n";
}

inline void render_templates(std::string& md, const nlohmann::json& r) {
    for (const auto& c : r.at("contrasts")) {
        md += "**" + escape_cell(c.at("template").get<std::string>()) + "** (" +
              escape_cell(c.at("subject_set").get<std::string>()) + ")\n\n";
        md += "| Male subject | Top predictions | Female subject | Top predictions | Overlap |\n|---|---|---|---|---|\n";
        auto tokens = [](const nlohmann::json& ranking) {
            std::string s;
            for (const auto& e : ranking.at("entries")) {
                if (!s.empty()) s += ", ";
                s += e.at("token").get<std::string>();
            }
            return escape_cell(s);
        };
        for (const auto& row : c.at("rows"))
            md += "| " + escape_cell(row.at("male").at("subject").get<std::string>()) + " | " + tokens(row.at("male")) +
                  " | " + escape_cell(row.at("female").at("subject").get<std::string>()) + " | " +
                  tokens(row.at("female")) + " | " + fixed(row.at("overlap"), 2) + " |\n";
        md += "\n";
    }
}

inline void render_cda(std::string& md, const nlohmann::json& r) {
    md += "Mode " + r.at("mode").get<std::string>() + ": " + r.at("n_input").dump() + " input lines, " +
          r.at("n_swapped").dump() + " swapped (" + fixed(r.at("swap_fraction"), 4) + "), " + r.at("n_output").dump() +
          " output lines\n";
}

inline void render_jsd(std::string& md, const nlohmann::json& r) {
    md += "| Rank | Prompt | Mean JSD |\n|---|---|---|\n";
    std::size_t rank = 1;
    for (const auto& p : r.at("prompts")) {
        std::string prompt;
        for (const auto& w : p.at("prompt")) prompt += (prompt.empty() ? "" : " ") + w.get<std::string>();
        md += "| " + std::to_string(rank++) + " | " + escape_cell(prompt.empty() ? "(empty)" : prompt) + " | " +
              fixed(p.at("mean_jsd"), 5) + " |\n";
    }
}

inline void render_tsne(std::string& md, const nlohmann::json& r) {
    md += "Final KL: " + fixed(r.at("kl"), 4) + "\n\n";
    md += "| Adjective | Nearer | d(male) / d(female) |\n|---|---|---|\n";
    for (const auto& row : r.at("proximity").at("rows"))
        md += "| " + escape_cell(row.at("adjective").get<std::string>()) + " | " + row.at("nearer").get<std::string>() +
              " | " + fixed(row.at("ratio"), 3) + " |\n";
}

} // namespace detail

/// Markdown view of a run report. Pure function of the JSON: CrowS scores
/// at 2 decimals, SEAT effect sizes at 3.
inline std::string render_markdown(const nlohmann::json& report) {
    std::string md = "# Bias report: " + escape_cell(report.at("label").get<std::string>()) + "\n\n";
    const auto& b = report.at("backend");
    md += "Backend: " + escape_cell(b.at("descriptor").get<std::string>());
    if (b.contains("model_id")) md += " (" + escape_cell(b.at("model_id").get<std::string>()) + ")";
    md += ", pooling " + b.at("pooling").get<std::string>() + ", seed " + report.at("seed").dump() + "\n\n";
    if (b.contains("error")) md += "Backend error: " + escape_cell(b.at("error").get<std::string>()) + "\n\n";

    const auto crows = task_result(report, "crows");
    const auto seat = task_result(report, "seat");
    md += "| Model | CrowS | Avg. SEAT |\n|---|---|---|\n";
    md += "| " + escape_cell(report.at("label").get<std::string>()) + " | " +
          fixed(crows.is_null() ? crows : crows.at("metric_score"), 2) + " | " +
          fixed(seat.is_null() ? seat : seat.at("avg_abs_d"), 3) + " |\n";

    for (const auto& t : report.at("tasks")) {
        const std::string name = t.at("task");
        md += "\n## " + name + "\n\n";
        if (t.at("status") != "ok") {
            md += "Failed: " + escape_cell(t.at("error").get<std::string>()) + "\n";
            continue;
        }
        const auto& r = t.at("result");
        if (name == "seat") detail::render_seat(md, r);
        else if (name == "crows") detail::render_crows(md, r);
        else if (name == "templates") detail::render_templates(md, r);
        else if (name == "cda") detail::render_cda(md, r);
        else if (name == "jsd") detail::render_jsd(md, r);
        else if (name == "tsne") detail::render_tsne(md, r);
    }
    return md;
}

} // namespace mlbias::report
