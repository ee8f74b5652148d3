#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbias/backend/factory.hpp"
#include "mlbias/backend/fixture.hpp"
#include "mlbias/cda.hpp"
#include "mlbias/crows.hpp"
#include "mlbias/jsd.hpp"
#include "mlbias/parallel.hpp"
#include "mlbias/report/config.hpp"
#include "mlbias/report/markdown.hpp"
#include "mlbias/seat.hpp"
#include "mlbias/templates.hpp"
#include "mlbias/viz/proximity.hpp"
#include "mlbias/viz/tsne.hpp"
#include "mlbias/viz/words.hpp"

namespace mlbias::report {

using nlohmann::json;

inline constexpr std::string_view toolkit_name = "mlbias";
inline constexpr std::string_view toolkit_version = "0.1.0";

struct TaskOutcome {
    Task task{};
    bool ok = false;
    json result;
    std::string error;
    double wall_clock_ms = 0.0;
};

inline json conventions() {
    return {{"seat_std", "sample (n-1)"},
            {"seat_p_value", "one-sided permutation, exact when C(2n,n) <= 20000"},
            {"crows_ties", "excluded from the denominator"},
            {"jsd_log_base", "e"},
            {"display_precision", {{"crows", 2}, {"seat", 3}}}};
}

inline json run_seat(const RunConfig& c, const Backend& backend, unsigned workers) {
    const auto tests = seat::load_dir(c.seat.dir, c.seat.tests);
    std::vector<seat::EffectSizeResult> results;
    for (const auto& t : tests) results.push_back(seat::effect_size(t, backend, c.seat.n_samples, c.seed, workers));
    return seat::to_json(results);
}

inline json run_crows(const RunConfig& c, const Backend& backend, unsigned workers) {
    const auto pairs = crows::load_csv(c.crows.data);
    return crows::to_json(crows::crows_metric(pairs, backend, workers));
}

inline json run_templates(const RunConfig& c, const Backend& backend, unsigned workers) {
    const auto tpls = templates::load_templates(c.templates.templates);
    const auto subjects = templates::load_subjects(c.templates.subjects);
    json out = json::array();
    for (const auto& tpl : tpls) {
        for (const auto& set : subjects) {
            const auto rows = templates::gender_contrast(tpl, set, backend, c.templates.topk, c.templates.noun_filter, {},
                                                         workers);
            out.push_back({{"template", tpl.text}, {"subject_set", set.label}, {"rows", templates::to_json(rows)}});
        }
    }
    return {{"topk", c.templates.topk}, {"noun_filter", c.templates.noun_filter}, {"contrasts", out}};
}

inline json run_cda(const RunConfig& c) {
    const auto wl = cda::load_wordlist(c.cda.wordlist);
    cda::CdaConfig cfg;
    cfg.mode = c.cda.mode;
    if (c.cda.shuffle) cfg.shuffle_seed = c.seed;
    const fs::path out_dir = fs::path(c.output_dir) / "cda";
    fs::create_directories(out_dir);
    const auto stats = cda::augment_corpus(c.cda.corpus, wl, cfg, out_dir / "augmented.txt");
    json j = cda::to_json(stats);
    j["mode"] = c.cda.mode == cda::Mode::two_sided ? "two-sided" : "one-sided";
    j["output"] = "cda/augmented.txt";
    return j;
}

inline json run_jsd(const RunConfig& c, const Backend& backend, unsigned workers) {
    auto spec = jsd::load_spec(c.jsd.spec);
    if (c.jsd.prompt_length) spec.prompt_length = *c.jsd.prompt_length;
    if (c.jsd.beam) spec.beam_width = *c.jsd.beam;
    const auto ranked = jsd::search_biased_prompts(spec, backend, workers);
    return {{"beam_width", spec.beam_width}, {"prompt_length", spec.prompt_length}, {"prompts", jsd::to_json(ranked)}};
}

inline json run_tsne(const RunConfig& c, const Backend& backend, unsigned workers) {
    const auto words = viz::load_words(c.tsne.words);
    const auto m = viz::embed_words(words, backend, workers);
    auto cfg = c.tsne.config;
    cfg.seed = c.seed;
    const auto res = viz::tsne(m, cfg);
    json coords = json::array();
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        coords.push_back({{"label", m.labels[i]},
                          {"tag", viz::to_string(m.gender_tags[i])},
                          {"x", res.coords(i, 0)},
                          {"y", res.coords(i, 1)}});
    json j = {{"perplexity", cfg.perplexity},
              {"iterations", cfg.iterations},
              {"kl", res.kl},
              {"coords", coords},
              {"proximity", viz::to_json(viz::proximity_report(res.coords, m.labels, m.gender_tags))}};
    if (res.kl_after_exaggeration) j["kl_after_exaggeration"] = *res.kl_after_exaggeration;
    return j;
}

inline TaskOutcome run_task(Task t, const RunConfig& c, const Backend* backend, const std::string& backend_error,
                            unsigned workers) {
    TaskOutcome out;
    out.task = t;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (t != Task::cda && !backend) throw BackendError(backend_error);
        switch (t) {
        case Task::seat: out.result = run_seat(c, *backend, workers); break;
        case Task::crows: out.result = run_crows(c, *backend, workers); break;
        case Task::templates: out.result = run_templates(c, *backend, workers); break;
        case Task::cda: out.result = run_cda(c); break;
        case Task::jsd: out.result = run_jsd(c, *backend, workers); break;
        case Task::tsne: out.result = run_tsne(c, *backend, workers); break;
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
        out.result = nullptr;
    }
    out.wall_clock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunOutput {
    json report;
    int exit_code = 0;
};

/// Runs every configured task against `backend` (null when it could not be
/// constructed; `backend_error` then says why). Deterministic apart from the
/// "metadata" block.
inline RunOutput run(const RunConfig& c, BackendPtr backend, std::string backend_error = {}) {
    c.validate();
    const auto start = std::chrono::steady_clock::now();

    json binfo = {{"descriptor", describe(c.backend)}, {"pooling", to_string(c.backend.pooling)}};
    if (backend) {
        try {
            const auto info = backend->info();
            binfo["model_id"] = info.model_id;
            binfo["dim"] = info.dim;
            binfo["max_len"] = info.max_len;
        } catch (const std::exception& e) {
            backend_error = e.what();
            backend.reset();
        }
    }
    if (!backend) {
        if (backend_error.empty()) backend_error = "backend unavailable";
        binfo["error"] = backend_error;
    }

    const unsigned workers = c.workers ? c.workers : default_workers();
    std::vector<TaskOutcome> outcomes;
    if (c.parallel_tasks) {
        outcomes = parallel_map(
            c.tasks.size(), [&](std::size_t i) { return run_task(c.tasks[i], c, backend.get(), backend_error, 1); },
            workers);
    } else {
        for (Task t : c.tasks) outcomes.push_back(run_task(t, c, backend.get(), backend_error, workers));
    }

    json tasks = json::array();
    json timings = json::object();
    bool any_failed = false;
    for (const auto& o : outcomes) {
        json entry = {{"task", to_string(o.task)}, {"status", o.ok ? "ok" : "error"}};
        if (o.ok)
            entry["result"] = o.result;
        else
            entry["error"] = o.error;
        any_failed = any_failed || !o.ok;
        tasks.push_back(std::move(entry));
        timings[to_string(o.task)] = o.wall_clock_ms;
    }

    json report = {{"toolkit", {{"name", toolkit_name}, {"version", toolkit_version}}},
                   {"label", c.label},
                   {"backend", binfo},
                   {"conventions", conventions()},
                   {"seed", c.seed},
                   {"tasks", tasks}};
    const double total = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report["metadata"] = {{"created", utc_timestamp()}, {"wall_clock_ms", total}, {"task_wall_clock_ms", timings}};
    return {std::move(report), any_failed ? 1 : 0};
}

/// The report without its "metadata" block: the part covered by the
/// determinism guarantee.
inline json deterministic_part(json report) {
    report.erase("metadata");
    return report;
}

inline std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

/// Writes report.json and report.md into the output directory, each via a
/// temporary file and rename.
inline void write_report(const json& report, const fs::path& output_dir) {
    fs::create_directories(output_dir);
    fixture::write_atomic(output_dir / "report.json", dump_report(report));
    fixture::write_atomic(output_dir / "report.md", render_markdown(report));
}

/// Constructs the backend, runs, writes the report. Returns the exit code.
inline RunOutput run_and_write(const RunConfig& c) {
    c.validate();
    BackendPtr backend;
    std::string error;
    try {
        backend = make_backend(c.backend);
    } catch (const std::exception& e) {
        error = e.what();
    }
    auto out = run(c, backend, error);
    write_report(out.report, c.output_dir);
    return out;
}

} // namespace mlbias::report
