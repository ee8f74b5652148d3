#pragma once

#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "mlbias/error.hpp"
#include "mlbias/report/markdown.hpp"

namespace mlbias::report {

/// Task lists of two reports differ.
class TaskMismatchError : public InputError {
public:
    using InputError::InputError;
};

inline std::set<std::string> task_names(const nlohmann::json& report) {
    std::set<std::string> out;
    for (const auto& t : report.at("tasks")) out.insert(t.at("task").get<std::string>());
    return out;
}

namespace detail {

inline nlohmann::json delta_row(std::string metric, const nlohmann::json& base, const nlohmann::json& deb) {
    nlohmann::json row = {{"metric", std::move(metric)}, {"baseline", base}, {"debiased", deb}, {"delta", nullptr}};
    if (base.is_number() && deb.is_number()) row["delta"] = deb.get<double>() - base.get<double>();
    return row;
}

inline nlohmann::json field(const nlohmann::json& result, const char* key) {
    return result.is_null() ? nlohmann::json(nullptr) : result.at(key);
}

inline nlohmann::json distance_from_ideal(const nlohmann::json& score) {
    return score.is_number() ? nlohmann::json(std::abs(score.get<double>() - 50.0)) : nlohmann::json(nullptr);
}

inline nlohmann::json mean_overlap(const nlohmann::json& r) {
    if (r.is_null()) return nullptr;
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& c : r.at("contrasts"))
        for (const auto& row : c.at("rows")) {
            s += row.at("overlap").get<double>();
            ++n;
        }
    return n ? nlohmann::json(s / static_cast<double>(n)) : nlohmann::json(nullptr);
}

inline nlohmann::json top_jsd(const nlohmann::json& r) {
    if (r.is_null() || r.at("prompts").empty()) return nullptr;
    return r.at("prompts").at(0).at("mean_jsd");
}

inline nlohmann::json male_nearer_fraction(const nlohmann::json& r) {
    if (r.is_null()) return nullptr;
    const auto& s = r.at("proximity").at("summary");
    const double total = s.at("male").get<double>() + s.at("female").get<double>() + s.at("tie").get<double>();
    return total > 0 ? nlohmann::json(s.at("male").get<double>() / total) : nlohmann::json(nullptr);
}

} // namespace detail

/// Per-metric deltas (debiased minus baseline). Both reports must list the
/// same tasks. Metrics of a task that failed in either report get a null
/// delta.
inline nlohmann::json compare(const nlohmann::json& baseline, const nlohmann::json& debiased) {
    const auto a = task_names(baseline);
    const auto b = task_names(debiased);
    if (a != b) {
        std::string msg = "task sets differ:";
        for (const auto& t : a)
            if (!b.count(t)) msg += " " + t + " (baseline only)";
        for (const auto& t : b)
            if (!a.count(t)) msg += " " + t + " (debiased only)";
        throw TaskMismatchError(msg);
    }
    using detail::delta_row;
    using detail::field;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& t : baseline.at("tasks")) {
        const std::string name = t.at("task");
        const auto rb = task_result(baseline, name);
        const auto rd = task_result(debiased, name);
        if (name == "crows") {
            const auto sb = field(rb, "metric_score");
            const auto sd = field(rd, "metric_score");
            rows.push_back(delta_row("crows", sb, sd));
            rows.push_back(delta_row("crows_distance_from_50", detail::distance_from_ideal(sb), detail::distance_from_ideal(sd)));
        } else if (name == "seat") {
            rows.push_back(delta_row("avg_seat", field(rb, "avg_abs_d"), field(rd, "avg_abs_d")));
            if (!rb.is_null() && !rd.is_null()) {
                for (const auto& tb : rb.at("tests"))
                    for (const auto& td : rd.at("tests"))
                        if (tb.at("test") == td.at("test"))
                            rows.push_back(delta_row("seat:" + tb.at("test").get<std::string>(), tb.at("d"), td.at("d")));
            }
        } else if (name == "jsd") {
            rows.push_back(delta_row("jsd_top_prompt", detail::top_jsd(rb), detail::top_jsd(rd)));
        } else if (name == "templates") {
            rows.push_back(delta_row("template_overlap", detail::mean_overlap(rb), detail::mean_overlap(rd)));
        } else if (name == "tsne") {
            rows.push_back(delta_row("tsne_male_nearer_fraction", detail::male_nearer_fraction(rb),
                                     detail::male_nearer_fraction(rd)));
        } else if (name == "cda") {
            rows.push_back(delta_row("cda_swap_fraction", field(rb, "swap_fraction"), field(rd, "swap_fraction")));
        }
    }
    return {{"baseline", baseline.at("label")}, {"debiased", debiased.at("label")}, {"rows", rows}};
}

/// Table with one line per metric; CrowS at 2 decimals, SEAT at 3, the rest at 4.
inline std::string render_comparison(const nlohmann::json& cmp) {
    std::string md = "| Metric | " + escape_cell(cmp.at("baseline").get<std::string>()) + " | " +
                     escape_cell(cmp.at("debiased").get<std::string>()) + " | Δ |\n|---|---|---|---|\n";
    for (const auto& row : cmp.at("rows")) {
        const std::string m = row.at("metric");
        const int dec = m.starts_with("crows") ? 2 : (m.starts_with("seat") || m == "avg_seat") ? 3 : 4;
        std::string label = m == "crows" ? "CrowS"
                            : m == "crows_distance_from_50" ? "CrowS |score - 50|"
                            : m == "avg_seat"               ? "Avg. SEAT"
                                                            : m;
        md += "| " + escape_cell(label) + " | " + fixed(row.at("baseline"), dec) + " | " + fixed(row.at("debiased"), dec) +
              " | " + fixed(row.at("delta"), dec) + " |\n";
    }
    return md;
}

} // namespace mlbias::report
