#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlbias/mlbias.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mlbias;

namespace {

struct BackendFlags {
    std::string descriptor;
    std::string pooling = "mean";
    unsigned max_in_flight = 8;

    void add(CLI::App* app) {
        app->add_option("--backend", descriptor, "toy, toy:<seed>, fixture:<dir> or an http(s) URL (env MLBIAS_BACKEND)");
        app->add_option("--pooling", pooling, "mean or cls")->check(CLI::IsMember({"mean", "cls"}));
        app->add_option("--max-in-flight", max_in_flight, "concurrent HTTP requests")->check(CLI::PositiveNumber);
    }

    BackendDescriptor descriptor_value() const {
        std::string d = descriptor;
        if (d.empty()) {
            const char* env = std::getenv("MLBIAS_BACKEND");
            d = env && *env ? env : "toy";
        }
        auto desc = parse_descriptor(d, parse_pooling(pooling));
        desc.max_in_flight = max_in_flight;
        return desc;
    }

    BackendPtr make() const { return make_backend(descriptor_value()); }
};

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    fixture::write_atomic(path, text);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::map<std::string, std::string> key_values(const std::vector<std::string>& items, const char* what) {
    std::map<std::string, std::string> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError(std::string("expected key=value for ") + what + ": " + item);
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bias measurement for masked language models"};
    app.require_subcommand(1);
    int exit_code = 0;

    // seat
    BackendFlags seat_backend;
    std::string seat_dir, seat_out;
    std::vector<std::string> seat_tests;
    std::uint64_t seat_samples = 10'000, seat_seed = 42;
    unsigned workers = 0;
    auto* seat_cmd = app.add_subcommand("seat", "SEAT effect sizes and permutation p-values");
    seat_backend.add(seat_cmd);
    seat_cmd->add_option("--dir", seat_dir, "directory of SEAT JSON tests")->required();
    seat_cmd->add_option("--tests", seat_tests, "test names (file stems); default all");
    seat_cmd->add_option("--n-samples", seat_samples, "permutations when sampling")->check(CLI::Range(100, 100'000'000));
    seat_cmd->add_option("--seed", seat_seed);
    seat_cmd->add_option("--workers", workers);
    seat_cmd->add_option("--out", seat_out, "JSON output (default stdout)");
    seat_cmd->callback([&] {
        const auto backend = seat_backend.make();
        std::vector<seat::EffectSizeResult> results;
        for (const auto& t : seat::load_dir(seat_dir, seat_tests))
            results.push_back(seat::effect_size(t, *backend, seat_samples, seat_seed, workers));
        emit(dump(seat::to_json(results)), seat_out);
    });

    // crows
    BackendFlags crows_backend;
    std::string crows_data, crows_out;
    bool crows_pairs = false;
    auto* crows_cmd = app.add_subcommand("crows", "CrowS-Pairs metric score");
    crows_backend.add(crows_cmd);
    crows_cmd->add_option("--data", crows_data, "CrowS-Pairs CSV")->required();
    crows_cmd->add_flag("--pairs", crows_pairs, "include per-pair scores");
    crows_cmd->add_option("--workers", workers);
    crows_cmd->add_option("--out", crows_out, "JSON output (default stdout)");
    crows_cmd->callback([&] {
        const auto backend = crows_backend.make();
        const auto pairs = crows::load_csv(crows_data);
        emit(dump(crows::to_json(crows::crows_metric(pairs, *backend, workers), crows_pairs)), crows_out);
    });

    // templates
    BackendFlags tpl_backend;
    std::string tpl_file, tpl_subjects, tpl_out, tpl_md;
    std::size_t tpl_topk = 5;
    bool tpl_no_filter = false;
    auto* tpl_cmd = app.add_subcommand("templates", "Fill-mask rankings for male and female subjects");
    tpl_backend.add(tpl_cmd);
    tpl_cmd->add_option("--templates", tpl_file, "JSON lines of templates")->required();
    tpl_cmd->add_option("--subjects", tpl_subjects, "JSON subject sets")->required();
    tpl_cmd->add_option("--topk", tpl_topk)->check(CLI::PositiveNumber);
    tpl_cmd->add_flag("--no-noun-filter", tpl_no_filter, "disable the noun coercion retry");
    tpl_cmd->add_option("--workers", workers);
    tpl_cmd->add_option("--out", tpl_out, "JSON output (default stdout)");
    tpl_cmd->add_option("--markdown", tpl_md, "also write ranking tables here");
    tpl_cmd->callback([&] {
        const auto backend = tpl_backend.make();
        json out = json::array();
        std::string md;
        for (const auto& tpl : templates::load_templates(tpl_file)) {
            for (const auto& set : templates::load_subjects(tpl_subjects)) {
                const auto rows = templates::gender_contrast(tpl, set, *backend, tpl_topk, !tpl_no_filter, {}, workers);
                out.push_back({{"template", tpl.text}, {"subject_set", set.label}, {"rows", templates::to_json(rows)}});
                std::vector<templates::PredictionRanking> male, female;
                for (const auto& r : rows) {
                    male.push_back(r.male);
                    female.push_back(r.female);
                }
                md += templates::rankings_markdown(tpl.text, male) + "\n";
                if (tpl.female_text) md += templates::rankings_markdown(*tpl.female_text, female) + "\n";
                else md += templates::rankings_markdown(tpl.text, female) + "\n";
            }
        }
        emit(dump(out), tpl_out);
        if (!tpl_md.empty()) emit(md, tpl_md);
    });

    // cda
    std::string cda_corpus, cda_wordlist, cda_mode = "two-sided", cda_out, cda_stats, cda_sheet, cda_manifest;
    std::optional<std::uint64_t> cda_seed;
    std::optional<std::uint64_t> cda_audit;
    bool cda_keep_case = false;
    auto* cda_cmd = app.add_subcommand("cda", "Gender-swap counterfactual augmentation");
    cda_cmd->add_option("--corpus", cda_corpus, "input text, one sentence per line");
    cda_cmd->add_option("--wordlist", cda_wordlist, "TSV of male<TAB>female pairs");
    cda_cmd->add_option("--mode", cda_mode)->check(CLI::IsMember({"one-sided", "two-sided"}));
    cda_cmd->add_option("--seed", cda_seed, "shuffle the output with this seed");
    cda_cmd->add_flag("--no-case-transfer", cda_keep_case, "emit replacements exactly as listed");
    cda_cmd->add_option("--out", cda_out, "augmented corpus")->required();
    cda_cmd->add_option("--stats", cda_stats, "write statistics JSON here");
    cda_cmd->add_option("--manifest", cda_manifest, "write a cda_finetune training manifest here");
    cda_cmd->add_option("--audit", cda_audit, "sample N swapped sentences from an existing output for review");
    cda_cmd->add_option("--sheet", cda_sheet, "audit sheet TSV path");
    cda_cmd->callback([&] {
        if (cda_audit) {
            if (cda_sheet.empty()) throw InputError("--audit needs --sheet");
            const auto n = cda::audit_sample(cda_out, *cda_audit, cda_seed.value_or(42), cda_sheet);
            std::cout << "wrote " << n << " rows to " << cda_sheet << "\n";
            return;
        }
        if (cda_corpus.empty() || cda_wordlist.empty()) throw InputError("--corpus and --wordlist are required");
        cda::CdaConfig cfg;
        cfg.mode = cda::parse_mode(cda_mode);
        cfg.shuffle_seed = cda_seed;
        cfg.preserve_case = !cda_keep_case;
        const auto stats = cda::augment_corpus(cda_corpus, cda::load_wordlist(cda_wordlist), cfg, cda_out);
        if (!cda_stats.empty()) emit(dump(cda::to_json(stats)), cda_stats);
        else std::cout << dump(cda::to_json(stats));
        if (!cda_manifest.empty()) {
            const auto m = report::emit_manifest(report::Method::cda_finetune, {{"augmentation", json(cda_mode == "two-sided" ? "two_sided" : "one_sided")}},
                                                 {{"train", fs::absolute(cda_out).string()}});
            emit(dump(report::to_json(m)), cda_manifest);
        }
    });

    // jsd
    BackendFlags jsd_backend;
    std::string jsd_spec, jsd_out;
    std::optional<std::size_t> jsd_len, jsd_beam;
    auto* jsd_cmd = app.add_subcommand("jsd", "Beam search for prompts that maximise gendered divergence");
    jsd_backend.add(jsd_cmd);
    jsd_cmd->add_option("--spec", jsd_spec, "probe specification JSON")->required();
    jsd_cmd->add_option("--prompt-length", jsd_len);
    jsd_cmd->add_option("--beam", jsd_beam)->check(CLI::PositiveNumber);
    jsd_cmd->add_option("--workers", workers);
    jsd_cmd->add_option("--out", jsd_out, "JSON output (default stdout)");
    jsd_cmd->callback([&] {
        const auto backend = jsd_backend.make();
        auto spec = jsd::load_spec(jsd_spec);
        if (jsd_len) spec.prompt_length = *jsd_len;
        if (jsd_beam) spec.beam_width = *jsd_beam;
        emit(dump(jsd::to_json(jsd::search_biased_prompts(spec, *backend, workers))), jsd_out);
    });

    // tsne
    BackendFlags tsne_backend;
    std::string tsne_words, tsne_svg, tsne_coords, tsne_out;
    viz::TsneConfig tsne_cfg;
    auto* tsne_cmd = app.add_subcommand("tsne", "2-D projection of gendered nouns and adjectives");
    tsne_backend.add(tsne_cmd);
    tsne_cmd->add_option("--words", tsne_words, "JSON word set")->required();
    tsne_cmd->add_option("--perplexity", tsne_cfg.perplexity);
    tsne_cmd->add_option("--iterations", tsne_cfg.iterations);
    tsne_cmd->add_option("--learning-rate", tsne_cfg.learning_rate);
    tsne_cmd->add_option("--seed", tsne_cfg.seed);
    tsne_cmd->add_option("--svg", tsne_svg, "scatter plot");
    tsne_cmd->add_option("--coords", tsne_coords, "coordinates TSV");
    tsne_cmd->add_option("--out", tsne_out, "proximity JSON (default stdout)");
    tsne_cmd->callback([&] {
        const auto backend = tsne_backend.make();
        const auto m = viz::embed_words(viz::load_words(tsne_words), *backend);
        const auto res = viz::tsne(m, tsne_cfg);
        if (!tsne_svg.empty()) emit(viz::render_svg(res.coords, m.labels, m.gender_tags), tsne_svg);
        if (!tsne_coords.empty()) {
            std::string tsv = "label\ttag\tx\ty\n";
            char buf[64];
            for (std::size_t i = 0; i < m.labels.size(); ++i) {
                std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\n", res.coords(i, 0), res.coords(i, 1));
                tsv += m.labels[i] + "\t" + viz::to_string(m.gender_tags[i]) + buf;
            }
            emit(tsv, tsne_coords);
        }
        json j = viz::to_json(viz::proximity_report(res.coords, m.labels, m.gender_tags));
        j["kl"] = res.kl;
        emit(dump(j), tsne_out);
    });

    // run
    std::string run_config, run_backend, run_tasks, run_output, run_label, run_pooling;
    std::optional<std::uint64_t> run_seed;
    std::optional<unsigned> run_workers;
    bool run_parallel = false;
    auto* run_cmd = app.add_subcommand("run", "Run several tasks and write report.json and report.md");
    run_cmd->add_option("--config", run_config, "INI-style run configuration");
    run_cmd->add_option("--backend", run_backend);
    run_cmd->add_option("--pooling", run_pooling);
    run_cmd->add_option("--tasks", run_tasks, "comma-separated subset of seat,crows,templates,cda,jsd,tsne");
    run_cmd->add_option("--seed", run_seed);
    run_cmd->add_option("--output-dir", run_output);
    run_cmd->add_option("--label", run_label, "baseline or debiased");
    run_cmd->add_flag("--parallel", run_parallel, "run tasks concurrently");
    run_cmd->add_option("--workers", run_workers);
    run_cmd->callback([&] {
        report::RunConfig cfg;
        try {
            if (!run_config.empty()) cfg = report::load_config(run_config);
            report::apply_environment(cfg);
            if (!run_backend.empty()) report::apply_setting(cfg, "backend", run_backend);
            if (!run_pooling.empty()) report::apply_setting(cfg, "pooling", run_pooling);
            if (!run_tasks.empty()) report::apply_setting(cfg, "tasks", run_tasks);
            if (run_seed) cfg.seed = *run_seed;
            if (!run_output.empty()) cfg.output_dir = run_output;
            if (!run_label.empty()) cfg.label = run_label;
            if (run_parallel) cfg.parallel_tasks = true;
            if (run_workers) cfg.workers = *run_workers;
            cfg.validate();
        } catch (const InputError& e) {
            throw report::ConfigError(e.what());
        }
        const auto out = report::run_and_write(cfg);
        for (const auto& t : out.report.at("tasks"))
            std::cerr << t.at("task").get<std::string>() << ": " << t.at("status").get<std::string>()
                      << (t.contains("error") ? " (" + t.at("error").get<std::string>() + ")" : "") << "\n";
        std::cerr << "report written to " << (fs::path(cfg.output_dir) / "report.json").string() << "\n";
        exit_code = out.exit_code;
    });

    // compare
    std::string cmp_base, cmp_deb, cmp_out, cmp_md;
    auto* cmp_cmd = app.add_subcommand("compare", "Deltas between a baseline and a debiased report");
    cmp_cmd->add_option("--baseline", cmp_base)->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--debiased", cmp_deb)->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--out", cmp_out, "JSON output (default stdout)");
    cmp_cmd->add_option("--markdown", cmp_md, "Markdown table output");
    cmp_cmd->callback([&] {
        const auto cmp = report::compare(fixture::read_json(cmp_base), fixture::read_json(cmp_deb));
        emit(dump(cmp), cmp_out);
        if (!cmp_md.empty()) emit(report::render_comparison(cmp), cmp_md);
    });

    // emit-manifest
    std::string man_method, man_out;
    std::vector<std::string> man_params, man_data;
    auto* man_cmd = app.add_subcommand("emit-manifest", "Training manifest for an external fine-tuning run");
    man_cmd->add_option("--method", man_method)
        ->required()
        ->check(CLI::IsMember({"cda_finetune", "dropout", "guidebias", "autodebias"}));
    man_cmd->add_option("--param", man_params, "hyperparameter override key=value");
    man_cmd->add_option("--data", man_data, "data path key=path");
    man_cmd->add_option("--out", man_out, "JSON output (default stdout)");
    man_cmd->callback([&] {
        std::map<std::string, json> params;
        for (const auto& [k, v] : key_values(man_params, "--param")) params[k] = report::parse_scalar(v);
        const auto m = report::emit_manifest(report::parse_method(man_method), params, key_values(man_data, "--data"));
        emit(dump(report::to_json(m)), man_out);
    });

    // record-fixtures
    std::string rec_source, rec_dir, rec_config, rec_output, rec_pooling = "mean";
    auto* rec_cmd = app.add_subcommand("record-fixtures", "Run a configuration against a live backend and store every exchange");
    rec_cmd->add_option("--source", rec_source, "backend to record from")->required();
    rec_cmd->add_option("--fixtures", rec_dir, "fixture directory")->required();
    rec_cmd->add_option("--config", rec_config, "run configuration selecting the inputs")->required();
    rec_cmd->add_option("--pooling", rec_pooling)->check(CLI::IsMember({"mean", "cls"}));
    rec_cmd->add_option("--output-dir", rec_output, "where the recorded run's report goes (default: the config's)");
    rec_cmd->callback([&] {
        report::RunConfig cfg;
        try {
            cfg = report::load_config(rec_config);
            cfg.backend = parse_descriptor(rec_source, parse_pooling(rec_pooling));
            if (!rec_output.empty()) cfg.output_dir = rec_output;
            cfg.validate();
        } catch (const InputError& e) {
            throw report::ConfigError(e.what());
        }
        auto recorder = std::make_shared<RecordingBackend>(make_backend(cfg.backend), rec_dir);
        const auto out = report::run(cfg, recorder);
        report::write_report(out.report, cfg.output_dir);
        std::cerr << "recorded " << recorder->recorded() << " exchanges into " << rec_dir << "\n";
        exit_code = out.exit_code;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const report::ConfigError& e) {
        std::cerr << "error: invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
