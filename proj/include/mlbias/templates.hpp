#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbias/backend/backend.hpp"
#include "mlbias/error.hpp"
#include "mlbias/parallel.hpp"
#include "mlbias/unicode.hpp"

namespace mlbias::templates {

inline constexpr std::string_view subject_slot = "[X]";

inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
    return n;
}

/// A sentence with one subject slot "[X]" and one "[MASK]".
struct TemplateSpec {
    std::string text;
    std::string language;
    std::optional<std::string> noun_coercion_prefix;
    /// Variant used for female subjects where the verb agrees in gender.
    std::optional<std::string> female_text;

    void validate() const {
        for (const auto* t : {&text, female_text ? &*female_text : nullptr}) {
            if (!t) continue;
            if (count_occurrences(*t, subject_slot) != 1)
                throw InputError("template must contain exactly one [X]: \"" + *t + "\"");
            if (count_occurrences(*t, mask_token) != 1)
                throw InputError("template must contain exactly one [MASK]: \"" + *t + "\"");
        }
        if (noun_coercion_prefix && noun_coercion_prefix->empty()) throw InputError("empty noun coercion prefix");
    }

    TemplateSpec for_female() const {
        TemplateSpec t = *this;
        if (female_text) t.text = *female_text;
        t.female_text.reset();
        return t;
    }
};

struct SubjectSet {
    std::string label;
    std::vector<std::string> male_subjects;
    std::vector<std::string> female_subjects;

    void validate() const {
        if (male_subjects.size() != female_subjects.size())
            throw InputError("subject set \"" + label + "\" is not aligned (" + std::to_string(male_subjects.size()) +
                             " male vs " + std::to_string(female_subjects.size()) + " female)");
        if (male_subjects.empty()) throw InputError("subject set \"" + label + "\" is empty");
    }
};

struct RankedToken {
    std::size_t rank = 0;
    std::string token;
    double logprob = 0.0;
};

struct PredictionRanking {
    std::string subject;
    std::string template_text;
    std::string sentence;  // the query actually sent, after any coercion
    std::vector<RankedToken> entries;
    bool coerced = false;
};

/// Detects verb continuations (pronominal suffixes) in the top prediction.
struct CoercionHeuristic {
    std::string continuation_marker = "##";
    std::vector<std::string> suffixes = {"ha", "hom", "u", "ni", "k"};

    bool triggers(std::string_view token) const {
        if (!continuation_marker.empty() && token.starts_with(continuation_marker)) return true;
        return std::find(suffixes.begin(), suffixes.end(), token) != suffixes.end();
    }
};

/// Replaces [X] with the subject, capitalizing it when the slot opens the sentence.
inline std::string instantiate(const TemplateSpec& tpl, std::string_view subject) {
    if (count_occurrences(tpl.text, subject_slot) != 1)
        throw InputError("template must contain exactly one [X]: \"" + tpl.text + "\"");
    if (count_occurrences(tpl.text, mask_token) != 1)
        throw InputError("template must contain exactly one [MASK]: \"" + tpl.text + "\"");
    const auto pos = tpl.text.find(subject_slot);
    const bool initial = unicode::trim(tpl.text.substr(0, pos)).empty();
    const std::string filled = initial ? unicode::capitalize_first(subject) : std::string(subject);
    std::string out = tpl.text;
    out.replace(pos, subject_slot.size(), filled);
    return out;
}

inline std::string insert_prefix(std::string sentence, std::string_view prefix) {
    const auto pos = sentence.find(mask_token);
    sentence.insert(pos, prefix);
    return sentence;
}

namespace detail {

inline PredictionRanking query(const std::string& sentence, const Backend& backend, std::size_t k) {
    const auto seq = backend.tokenize(sentence);
    const auto it = std::find(seq.tokens.begin(), seq.tokens.end(), mask_token);
    if (it == seq.tokens.end()) throw BackendError("tokenizer dropped [MASK] from \"" + sentence + "\"");
    MaskedQuery q{seq.tokens, static_cast<std::size_t>(it - seq.tokens.begin()), std::nullopt, k};
    const auto dist = backend.mask_logprobs(q);
    PredictionRanking r;
    r.sentence = sentence;
    for (std::size_t i = 0; i < dist.entries.size(); ++i)
        r.entries.push_back({i + 1, dist.entries[i].first, dist.entries[i].second});
    return r;
}

} // namespace detail

/// Top-k predictions for the masked slot. With noun_filter, a top-1 verb
/// continuation triggers a single retry with the coercion prefix before [MASK].
inline PredictionRanking rank_predictions(const TemplateSpec& tpl, std::string_view subject, const Backend& backend,
                                          std::size_t k, bool noun_filter, const CoercionHeuristic& heuristic = {}) {
    if (k == 0) throw InputError("k must be at least 1");
    tpl.validate();
    const std::string sentence = instantiate(tpl, subject);
    auto r = detail::query(sentence, backend, k);
    if (noun_filter && tpl.noun_coercion_prefix && !r.entries.empty() && heuristic.triggers(r.entries.front().token)) {
        r = detail::query(insert_prefix(sentence, *tpl.noun_coercion_prefix), backend, k);
        r.coerced = true;
    }
    r.subject = std::string(subject);
    r.template_text = tpl.text;
    return r;
}

/// Jaccard overlap of the two rankings' token sets.
inline double overlap(const PredictionRanking& a, const PredictionRanking& b) {
    std::set<std::string> sa, sb;
    for (const auto& e : a.entries) sa.insert(e.token);
    for (const auto& e : b.entries) sb.insert(e.token);
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

struct ContrastRow {
    PredictionRanking male;
    PredictionRanking female;
    double overlap = 0.0;
};

/// Ranks every aligned male/female subject pair and measures their overlap.
/// Female subjects use the template's female variant when it has one.
inline std::vector<ContrastRow> gender_contrast(const TemplateSpec& tpl, const SubjectSet& subjects, const Backend& backend,
                                                std::size_t k, bool noun_filter = false,
                                                const CoercionHeuristic& heuristic = {}, unsigned workers = 0) {
    subjects.validate();
    tpl.validate();
    const TemplateSpec female_tpl = tpl.for_female();
    const std::size_t n = subjects.male_subjects.size();
    auto rankings = parallel_map(
        2 * n,
        [&](std::size_t i) {
            return i < n ? rank_predictions(tpl, subjects.male_subjects[i], backend, k, noun_filter, heuristic)
                         : rank_predictions(female_tpl, subjects.female_subjects[i - n], backend, k, noun_filter, heuristic);
        },
        workers);
    std::vector<ContrastRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        ContrastRow row{std::move(rankings[i]), std::move(rankings[n + i]), 0.0};
        row.overlap = overlap(row.male, row.female);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline TemplateSpec parse_template(const nlohmann::json& j) {
    TemplateSpec t;
    t.text = j.at("text").get<std::string>();
    t.language = j.value("language", std::string());
    if (j.contains("noun_coercion_prefix") && !j["noun_coercion_prefix"].is_null())
        t.noun_coercion_prefix = j["noun_coercion_prefix"].get<std::string>();
    if (j.contains("female_text") && !j["female_text"].is_null()) t.female_text = j["female_text"].get<std::string>();
    t.validate();
    return t;
}

/// JSON lines, one template object per line; blank lines ignored.
inline std::vector<TemplateSpec> load_templates(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open template file " + path.string());
    std::vector<TemplateSpec> out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (unicode::trim(line).empty()) continue;
        try {
            out.push_back(parse_template(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(no) + ": " + e.what());
        }
    }
    if (out.empty()) throw InputError("template file " + path.string() + " is empty");
    return out;
}

/// A JSON array of {"label", "male_subjects", "female_subjects"}.
inline std::vector<SubjectSet> load_subjects(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open subjects file " + path.string());
    std::vector<SubjectSet> out;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& s : j) {
            SubjectSet set{s.at("label").get<std::string>(), s.at("male_subjects").get<std::vector<std::string>>(),
                           s.at("female_subjects").get<std::vector<std::string>>()};
            set.validate();
            out.push_back(std::move(set));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed subjects file " + path.string() + ": " + e.what());
    }
    if (out.empty()) throw InputError("subjects file " + path.string() + " is empty");
    return out;
}

inline nlohmann::json to_json(const PredictionRanking& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) entries.push_back({{"rank", e.rank}, {"token", e.token}, {"logprob", e.logprob}});
    return {{"subject", r.subject}, {"template", r.template_text}, {"sentence", r.sentence}, {"coerced", r.coerced},
            {"entries", entries}};
}

inline nlohmann::json to_json(const std::vector<ContrastRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows)
        out.push_back({{"male", to_json(row.male)}, {"female", to_json(row.female)}, {"overlap", row.overlap}});
    return out;
}

/// One ranking table per template: a column per subject, a row per rank.
inline std::string rankings_markdown(const std::string& template_text, const std::vector<PredictionRanking>& cols) {
    std::string md = "**Template:** " + template_text + "\n\n| Ranking |";
    std::size_t depth = 0;
    for (const auto& c : cols) {
        md += " [X] = " + c.subject + (c.coerced ? " (coerced)" : "") + " |";
        depth = std::max(depth, c.entries.size());
    }
    md += "\n|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) md += "---|";
    md += "\n";
    for (std::size_t r = 0; r < depth; ++r) {
        md += "| " + std::to_string(r + 1) + " |";
        for (const auto& c : cols) md += " " + (r < c.entries.size() ? c.entries[r].token : std::string()) + " |";
        md += "\n";
    }
    return md;
}

} // namespace mlbias::templates
