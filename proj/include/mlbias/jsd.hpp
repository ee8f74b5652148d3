#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbias/backend/backend.hpp"
#include "mlbias/error.hpp"
#include "mlbias/parallel.hpp"

namespace mlbias::jsd {

inline constexpr double ln2 = std::numbers::ln2;
/// Floor applied to mixture probabilities inside the logarithm.
inline constexpr double epsilon = 1e-12;

/// Jensen-Shannon divergence (natural log) of two non-negative weight
/// vectors, each renormalized to sum to one. Result in [0, ln 2].
inline double jsd(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw InputError("JSD inputs differ in length");
    if (p.empty()) throw InputError("JSD support is empty");
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) throw InputError("JSD inputs must be non-negative");
        sp += p[i];
        sq += q[i];
    }
    if (!(sp > 0.0) || !(sq > 0.0)) throw DegenerateError("restricted distribution has no mass on the support");
    double kl_p = 0.0, kl_q = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double a = p[i] / sp, b = q[i] / sq;
        const double m = std::max(0.5 * (a + b), epsilon);
        if (a > 0.0) kl_p += a * std::log(a / m);  // 0 ln(0/x) = 0
        if (b > 0.0) kl_q += b * std::log(b / m);
    }
    return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, ln2);
}

/// Probabilities of `support` under `d` (absent tokens get 0).
inline std::vector<double> restrict_to(const VocabDistribution& d, std::span<const std::string> support) {
    std::map<std::string_view, double> lp;
    for (const auto& [tok, l] : d.entries) lp.emplace(tok, l);
    std::vector<double> out;
    out.reserve(support.size());
    for (const auto& t : support) {
        const auto it = lp.find(t);
        out.push_back(it == lp.end() ? 0.0 : std::exp(it->second));
    }
    return out;
}

/// JSD of two mask distributions restricted to (and renormalized over) `support`.
inline double jsd(const VocabDistribution& p, const VocabDistribution& q, std::span<const std::string> support) {
    if (support.empty()) throw InputError("JSD support is empty");
    return jsd(restrict_to(p, support), restrict_to(q, support));
}

/// Union of the tokens of both distributions, for full-vocabulary JSD.
inline std::vector<std::string> union_support(const VocabDistribution& p, const VocabDistribution& q) {
    std::set<std::string> s;
    for (const auto& e : p.entries) s.insert(e.first);
    for (const auto& e : q.entries) s.insert(e.first);
    return {s.begin(), s.end()};
}

struct JsdProbeSpec {
    std::vector<std::pair<std::string, std::string>> attribute_pairs;
    std::vector<std::string> prompt_vocab;
    std::vector<std::string> stereotype_targets;
    std::size_t beam_width = 5;
    std::size_t prompt_length = 2;
    /// Compare full distributions instead of the stereotype targets.
    bool full_vocab = false;

    void validate() const {
        if (attribute_pairs.empty()) throw InputError("JSD probe needs at least one attribute pair");
        if (beam_width < 1) throw InputError("beam_width must be at least 1");
        if (stereotype_targets.empty() && !full_vocab) throw InputError("stereotype_targets is empty");
    }
};

struct JsdResult {
    std::vector<std::string> prompt;
    std::vector<double> per_pair_jsd;
    double mean_jsd = 0.0;
    std::vector<std::string> skipped;  // diagnostics for pairs left out
};

namespace detail {

// Single vocabulary token for an attribute word, or nullopt when the
// tokenizer splits it or maps it to [UNK].
inline std::optional<std::string> as_vocab_token(const std::string& word, const Backend& backend) {
    const auto seq = backend.tokenize(word);
    if (seq.size() != 1 || seq.tokens[0] == "[UNK]") return std::nullopt;
    return seq.tokens[0];
}

} // namespace detail

/// Queries "[attribute] prompt... [MASK]" for both attributes of every pair and
/// measures the divergence of the two mask distributions.
inline JsdResult probe_bias(const JsdProbeSpec& spec, std::span<const std::string> prompt, const Backend& backend) {
    spec.validate();
    JsdResult r;
    r.prompt.assign(prompt.begin(), prompt.end());
    auto distribution = [&](const std::string& attr) {
        MaskedQuery q;
        q.tokens.push_back(attr);
        q.tokens.insert(q.tokens.end(), prompt.begin(), prompt.end());
        q.tokens.emplace_back(mask_token);
        q.mask_index = q.tokens.size() - 1;
        return backend.mask_logprobs(q);
    };
    for (const auto& [m, f] : spec.attribute_pairs) {
        const auto tm = detail::as_vocab_token(m, backend), tf = detail::as_vocab_token(f, backend);
        if (!tm || !tf) {
            r.skipped.push_back("attribute pair (" + m + ", " + f + "): " + (!tm ? m : f) + " is not a single vocabulary token");
            continue;
        }
        const auto pm = distribution(*tm), pf = distribution(*tf);
        if (spec.full_vocab) {
            r.per_pair_jsd.push_back(jsd(pm, pf, union_support(pm, pf)));
        } else {
            r.per_pair_jsd.push_back(jsd(pm, pf, spec.stereotype_targets));
        }
    }
    if (r.per_pair_jsd.empty()) throw DegenerateError("every attribute pair was skipped");
    double s = 0.0;
    for (double v : r.per_pair_jsd) s += v;
    r.mean_jsd = s / static_cast<double>(r.per_pair_jsd.size());
    return r;
}

/// Orders by descending mean JSD, ties broken by the prompt tokens.
inline bool better(const JsdResult& a, const JsdResult& b) {
    if (a.mean_jsd != b.mean_jsd) return a.mean_jsd > b.mean_jsd;
    return a.prompt < b.prompt;
}

/// Beam search for the prompts of length spec.prompt_length that maximize
/// mean JSD, extending every beam prompt by one token per round.
inline std::vector<JsdResult> search_biased_prompts(const JsdProbeSpec& spec, const Backend& backend, unsigned workers = 0) {
    spec.validate();
    if (spec.prompt_length == 0) return {probe_bias(spec, {}, backend)};
    if (spec.prompt_vocab.empty()) throw InputError("prompt_vocab is empty");

    std::vector<std::vector<std::string>> beam{{}};
    std::vector<JsdResult> scored;
    for (std::size_t round = 0; round < spec.prompt_length; ++round) {
        std::vector<std::vector<std::string>> candidates;
        for (const auto& prefix : beam)
            for (const auto& tok : spec.prompt_vocab) {
                auto c = prefix;
                c.push_back(tok);
                candidates.push_back(std::move(c));
            }
        scored = parallel_map(
            candidates.size(), [&](std::size_t i) { return probe_bias(spec, candidates[i], backend); }, workers);
        std::sort(scored.begin(), scored.end(), better);
        if (scored.size() > spec.beam_width) scored.resize(spec.beam_width);
        beam.clear();
        for (const auto& s : scored) beam.push_back(s.prompt);
    }
    return scored;
}

inline JsdProbeSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open JSD spec " + path.string());
    JsdProbeSpec s;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& p : j.at("attribute_pairs"))
            s.attribute_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        s.prompt_vocab = j.value("prompt_vocab", std::vector<std::string>{});
        s.stereotype_targets = j.value("stereotype_targets", std::vector<std::string>{});
        s.beam_width = j.value("beam_width", s.beam_width);
        s.prompt_length = j.value("prompt_length", s.prompt_length);
        s.full_vocab = j.value("full_vocab", false);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed JSD spec " + path.string() + ": " + e.what());
    }
    s.validate();
    return s;
}

inline nlohmann::json to_json(const JsdResult& r) {
    nlohmann::json j = {{"prompt", r.prompt}, {"per_pair_jsd", r.per_pair_jsd}, {"mean_jsd", r.mean_jsd}};
    if (!r.skipped.empty()) j["skipped"] = r.skipped;
    return j;
}

inline nlohmann::json to_json(const std::vector<JsdResult>& ranked) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : ranked) arr.push_back(to_json(r));
    return arr;
}

} // namespace mlbias::jsd
