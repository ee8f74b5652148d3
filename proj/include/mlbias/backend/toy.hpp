#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mlbias/backend/backend.hpp"
#include "mlbias/backend/toy_vocab.hpp"
#include "mlbias/hash.hpp"
#include "mlbias/unicode.hpp"

namespace mlbias {

namespace toy {

inline constexpr std::size_t dim = 64;
inline constexpr std::size_t vocab_size = 256;

/// Lowercasing tokenizer: NFC, then word runs, with every other non-space
/// code point as its own token. Bracketed special tokens stay atomic.
inline std::vector<std::string> tokenize(std::string_view text) {
    static constexpr std::string_view specials[] = {"[MASK]", "[CLS]", "[SEP]", "[PAD]", "[UNK]"};
    const std::string norm = unicode::nfc(text);
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(unicode::to_lower(word));
            word.clear();
        }
    };
    const auto* p = reinterpret_cast<const uint8_t*>(norm.data());
    const auto n = static_cast<int32_t>(norm.size());
    int32_t i = 0;
    while (i < n) {
        if (norm[static_cast<std::size_t>(i)] == '[') {
            const std::string_view rest(norm.data() + i, norm.size() - static_cast<std::size_t>(i));
            const auto* hit = std::find_if(std::begin(specials), std::end(specials),
                                           [&](std::string_view s) { return rest.starts_with(s); });
            if (hit != std::end(specials)) {
                flush();
                out.emplace_back(*hit);
                i += static_cast<int32_t>(hit->size());
                continue;
            }
        }
        const int32_t start = i;
        UChar32 c;
        U8_NEXT(p, i, n, c);
        if (c < 0) c = 0xFFFD;
        if (unicode::is_word_char(c)) {
            word.append(norm, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
        } else {
            flush();
            if (!unicode::is_space(c)) {
                std::string single;
                unicode::append_utf8(single, c);
                out.push_back(std::move(single));
            }
        }
    }
    flush();
    return out;
}

/// Most frequent tokens of a corpus (ties broken lexicographically).
inline std::vector<std::string> vocab_from_corpus(const std::vector<std::string>& lines,
                                                  std::size_t size = vocab_size) {
    std::map<std::string, std::size_t> counts;
    for (const auto& line : lines)
        for (auto& t : tokenize(line))
            if (!is_special_token(t)) ++counts[t];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < size; ++i) out.push_back(ranked[i].first);
    return out;
}

inline std::vector<std::string> builtin_vocab() {
    return {default_vocab.begin(), default_vocab.end()};
}

struct Options {
    std::vector<std::string> vocab = builtin_vocab();
    /// Scores are mapped to [-score_scale, score_scale]; 0 gives a uniform model.
    double score_scale = 4.0;
};

} // namespace toy

/// Deterministic hash-based stand-in for a masked language model.
class ToyBackend final : public Backend {
public:
    explicit ToyBackend(std::uint64_t seed = 42, Pooling pooling = Pooling::mean, toy::Options options = {})
        : seed_(seed), pooling_(pooling), opts_(std::move(options)) {
        if (opts_.vocab.empty()) throw InputError("toy vocabulary is empty");
        std::vector<std::string> sorted = opts_.vocab;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InputError("toy vocabulary has duplicate tokens");
        if (!(opts_.score_scale >= 0.0)) throw InputError("score_scale must be non-negative");
    }

    std::string name() const override { return "toy:" + std::to_string(seed_); }
    Pooling pooling() const override { return pooling_; }
    const std::vector<std::string>& vocab() const noexcept { return opts_.vocab; }

    /// 64-dimensional pseudo-random vector of one character trigram.
    std::vector<double> trigram_vector(std::string_view trigram) const {
        std::uint64_t state = hash::Fnv1a{}.u64(seed_).bytes(trigram).digest();
        std::vector<double> v(toy::dim);
        for (auto& x : v) x = hash::unit_interval(hash::splitmix64(state)) * 2.0 - 1.0;
        return v;
    }

    /// Context score of `candidate` given the (unordered) context tokens, in [-scale, scale].
    double score(std::string_view candidate, const std::vector<std::string>& sorted_context) const {
        hash::Fnv1a h;
        h.u64(seed_).bytes(candidate).byte(0);
        for (const auto& t : sorted_context) h.bytes(t).byte(0);
        return (hash::unit_interval(h.digest()) * 2.0 - 1.0) * opts_.score_scale;
    }

protected:
    TokenSequence do_tokenize(std::string_view text) const override {
        return TokenSequence{toy::tokenize(text), std::string(text)};
    }

    SentenceEmbedding do_embed(std::string_view text) const override {
        std::vector<std::string> words;
        for (auto& t : toy::tokenize(text))
            if (!is_special_token(t)) words.push_back(std::move(t));
        if (words.empty()) throw InputError("text has no non-special tokens: \"" + std::string(text) + "\"");

        std::vector<double> acc(toy::dim, 0.0);
        if (pooling_ == Pooling::mean) {
            for (const auto& w : words) add_trigrams(acc, w);
            for (auto& x : acc) x /= static_cast<double>(words.size());
        } else {
            std::string joined;
            for (std::size_t i = 0; i < words.size(); ++i) {
                if (i) joined += ' ';
                joined += words[i];
            }
            add_trigrams(acc, joined);
        }
        double norm = 0.0;
        for (double x : acc) norm += x * x;
        norm = std::sqrt(norm);
        if (!(norm > 0.0)) throw BackendError("zero-norm embedding for \"" + std::string(text) + "\"");
        for (auto& x : acc) x /= norm;
        return SentenceEmbedding(std::move(acc));
    }

    VocabDistribution do_mask_logprobs(const MaskedQuery& q) const override {
        std::vector<std::string> context;
        context.reserve(q.tokens.size());
        for (std::size_t i = 0; i < q.tokens.size(); ++i)
            if (i != q.mask_index) context.push_back(q.tokens[i]);
        std::sort(context.begin(), context.end());

        const auto& vocab = opts_.vocab;
        std::vector<double> scores(vocab.size());
        double hi = -INFINITY;
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            scores[i] = score(vocab[i], context);
            hi = std::max(hi, scores[i]);
        }
        double z = 0.0;
        for (double s : scores) z += std::exp(s - hi);
        const double log_z = hi + std::log(z);

        VocabDistribution dist;
        dist.complete = true;
        dist.entries.reserve(vocab.size());
        for (std::size_t i = 0; i < vocab.size(); ++i) dist.entries.emplace_back(vocab[i], scores[i] - log_z);
        dist.normalize_order();
        return select_entries(std::move(dist), q);
    }

    BackendInfo do_info() const override { return {name(), toy::dim, 512}; }

private:
    // Trigrams of the word padded with STX/ETX boundary markers, so that
    // one- and two-letter words still contribute.
    void add_trigrams(std::vector<double>& acc, std::string_view word) const {
        std::vector<UChar32> cps{0x02};
        for (UChar32 c : unicode::code_points(word)) cps.push_back(c);
        cps.push_back(0x03);
        for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
            const std::string tri = unicode::to_utf8({cps[i], cps[i + 1], cps[i + 2]});
            const auto v = trigram_vector(tri);
            for (std::size_t k = 0; k < toy::dim; ++k) acc[k] += v[k];
        }
    }

    std::uint64_t seed_;
    Pooling pooling_;
    toy::Options opts_;
};

} // namespace mlbias
