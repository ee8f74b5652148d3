#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mlbias/backend/types.hpp"
#include "mlbias/cda.hpp"
#include "mlbias/error.hpp"
#include "mlbias/unicode.hpp"
#include "mlbias/viz/tsne.hpp"

namespace mlbias::report {

namespace fs = std::filesystem;

/// Invalid run configuration (maps to exit code 2).
class ConfigError : public InputError {
public:
    using InputError::InputError;
};

enum class Task { seat, crows, templates, cda, jsd, tsne };

inline constexpr Task all_tasks[] = {Task::seat, Task::crows, Task::templates, Task::cda, Task::jsd, Task::tsne};

inline std::string to_string(Task t) {
    switch (t) {
    case Task::seat: return "seat";
    case Task::crows: return "crows";
    case Task::templates: return "templates";
    case Task::cda: return "cda";
    case Task::jsd: return "jsd";
    case Task::tsne: return "tsne";
    }
    return "?";
}

inline Task parse_task(std::string_view s) {
    for (Task t : all_tasks)
        if (to_string(t) == s) return t;
    throw ConfigError("unknown task \"" + std::string(s) + "\"");
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = unicode::trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

struct SeatParams {
    std::string dir;
    std::vector<std::string> tests;
    std::uint64_t n_samples = 10'000;
};

struct CrowsParams {
    std::string data;
};

struct TemplatesParams {
    std::string templates;
    std::string subjects;
    std::size_t topk = 5;
    bool noun_filter = true;
};

struct CdaParams {
    std::string corpus;
    std::string wordlist;
    cda::Mode mode = cda::Mode::two_sided;
    bool shuffle = true;
};

struct JsdParams {
    std::string spec;
    std::optional<std::size_t> prompt_length;
    std::optional<std::size_t> beam;
};

struct TsneParams {
    std::string words;
    viz::TsneConfig config;
};

struct RunConfig {
    BackendDescriptor backend = BackendDescriptor::toy();
    std::vector<Task> tasks;
    std::uint64_t seed = 42;
    std::string output_dir = "mlbias-out";
    std::string label = "baseline";
    bool parallel_tasks = false;
    unsigned workers = 0;

    SeatParams seat;
    CrowsParams crows;
    TemplatesParams templates;
    CdaParams cda;
    JsdParams jsd;
    TsneParams tsne;

    bool has(Task t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

    void validate() const {
        if (tasks.empty()) throw ConfigError("no tasks selected");
        for (std::size_t i = 0; i < tasks.size(); ++i)
            for (std::size_t j = i + 1; j < tasks.size(); ++j)
                if (tasks[i] == tasks[j]) throw ConfigError("task \"" + to_string(tasks[i]) + "\" listed twice");
        try {
            backend.validate();
        } catch (const InputError& e) {
            throw ConfigError(e.what());
        }
        if (output_dir.empty()) throw ConfigError("output_dir is empty");
        auto need = [&](Task t, const std::string& value, const char* key) {
            if (has(t) && value.empty()) throw ConfigError(to_string(t) + "." + key + " is required");
        };
        need(Task::seat, seat.dir, "dir");
        need(Task::crows, crows.data, "data");
        need(Task::templates, templates.templates, "templates");
        need(Task::templates, templates.subjects, "subjects");
        need(Task::cda, cda.corpus, "corpus");
        need(Task::cda, cda.wordlist, "wordlist");
        need(Task::jsd, jsd.spec, "spec");
        need(Task::tsne, tsne.words, "words");
        if (has(Task::seat) && seat.n_samples < 100) throw ConfigError("seat.n_samples must be at least 100");
        if (has(Task::templates) && templates.topk == 0) throw ConfigError("templates.topk must be positive");
        if (has(Task::jsd) && jsd.beam && *jsd.beam == 0) throw ConfigError("jsd.beam must be positive");
    }
};

namespace detail {

inline std::string strip_quotes(std::string v) {
    v = unicode::trim(v);
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
        v = v.substr(1, v.size() - 2);
    return v;
}

template <typename T>
T number(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        T v;
        if constexpr (std::is_floating_point_v<T>) {
            v = static_cast<T>(std::stod(raw, &used));
        } else if constexpr (std::is_signed_v<T>) {
            v = static_cast<T>(std::stoll(raw, &used));
        } else {
            if (!raw.empty() && raw[0] == '-') throw std::invalid_argument("negative");
            v = static_cast<T>(std::stoull(raw, &used));
        }
        if (used != raw.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": \"" + raw + "\"");
    }
}

inline bool boolean(const std::string& key, const std::string& raw) {
    if (raw == "true" || raw == "yes" || raw == "1") return true;
    if (raw == "false" || raw == "no" || raw == "0") return false;
    throw ConfigError("bad boolean value for " + key + ": \"" + raw + "\"");
}

} // namespace detail

/// Applies one "section.key = value" setting. Paths are used verbatim.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& raw_value) {
    using detail::boolean;
    using detail::number;
    const std::string v = detail::strip_quotes(raw_value);
    if (key == "seed") c.seed = number<std::uint64_t>(key, v);
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "label") c.label = v;
    else if (key == "parallel_tasks") c.parallel_tasks = boolean(key, v);
    else if (key == "workers") c.workers = number<unsigned>(key, v);
    else if (key == "tasks") {
        c.tasks.clear();
        for (const auto& t : split_list(v)) c.tasks.push_back(parse_task(t));
    } else if (key == "backend") {
        try {
            const auto pooling = c.backend.pooling;
            c.backend = parse_descriptor(v, pooling);
        } catch (const InputError& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "pooling") {
        try {
            c.backend.pooling = parse_pooling(v);
        } catch (const InputError& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "max_in_flight") c.backend.max_in_flight = number<unsigned>(key, v);
    else if (key == "seat.dir") c.seat.dir = v;
    else if (key == "seat.tests") c.seat.tests = split_list(v);
    else if (key == "seat.n_samples") c.seat.n_samples = number<std::uint64_t>(key, v);
    else if (key == "crows.data") c.crows.data = v;
    else if (key == "templates.templates") c.templates.templates = v;
    else if (key == "templates.subjects") c.templates.subjects = v;
    else if (key == "templates.topk") c.templates.topk = number<std::size_t>(key, v);
    else if (key == "templates.noun_filter") c.templates.noun_filter = boolean(key, v);
    else if (key == "cda.corpus") c.cda.corpus = v;
    else if (key == "cda.wordlist") c.cda.wordlist = v;
    else if (key == "cda.mode") {
        try {
            c.cda.mode = cda::parse_mode(v);
        } catch (const InputError& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "cda.shuffle") c.cda.shuffle = boolean(key, v);
    else if (key == "jsd.spec") c.jsd.spec = v;
    else if (key == "jsd.prompt_length") c.jsd.prompt_length = number<std::size_t>(key, v);
    else if (key == "jsd.beam") c.jsd.beam = number<std::size_t>(key, v);
    else if (key == "tsne.words") c.tsne.words = v;
    else if (key == "tsne.perplexity") c.tsne.config.perplexity = number<double>(key, v);
    else if (key == "tsne.iterations") c.tsne.config.iterations = number<int>(key, v);
    else if (key == "tsne.learning_rate") c.tsne.config.learning_rate = number<double>(key, v);
    else if (key == "tsne.early_exaggeration") c.tsne.config.early_exaggeration_factor = number<double>(key, v);
    else if (key == "tsne.early_exaggeration_iters") c.tsne.config.early_exaggeration_iters = number<int>(key, v);
    else throw ConfigError("unknown configuration key \"" + key + "\"");
}

inline bool is_path_key(const std::string& key) {
    static const char* keys[] = {"output_dir", "seat.dir", "crows.data", "templates.templates", "templates.subjects",
                                 "cda.corpus", "cda.wordlist", "jsd.spec", "tsne.words"};
    return std::find(std::begin(keys), std::end(keys), key) != std::end(keys);
}

/// Reads an INI-style file: top-level "key = value" lines plus [seat],
/// [crows], [templates], [cda], [jsd] and [tsne] sections. Relative paths
/// are resolved against the file's directory.
inline RunConfig load_config(const fs::path& path, RunConfig base = {}) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    const fs::path dir = path.parent_path();
    auto apply = [&](const std::string& key, const std::string& value) {
        std::string v = detail::strip_quotes(value);
        if (is_path_key(key) && fs::path(v).is_relative() && !v.empty()) v = (dir / v).lexically_normal().string();
        if (key == "backend" && v.starts_with("fixture:") && fs::path(v.substr(8)).is_relative())
            v = "fixture:" + (dir / v.substr(8)).lexically_normal().string();
        apply_setting(base, key, v);
    };
    for (const auto& [key, node] : tree) {
        if (node.empty()) {
            apply(key, node.data());
        } else {
            for (const auto& [sub, leaf] : node) apply(key + "." + sub, leaf.data());
        }
    }
    return base;
}

/// MLBIAS_BACKEND and MLBIAS_OUTPUT_DIR override file settings.
inline void apply_environment(RunConfig& c) {
    if (const char* b = std::getenv("MLBIAS_BACKEND"); b && *b) apply_setting(c, "backend", b);
    if (const char* o = std::getenv("MLBIAS_OUTPUT_DIR"); o && *o) c.output_dir = o;
}

} // namespace mlbias::report
