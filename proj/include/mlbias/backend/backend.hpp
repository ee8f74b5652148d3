#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlbias/backend/types.hpp"
#include "mlbias/unicode.hpp"

namespace mlbias {

/// Uniform model-access boundary.
///
/// Public entry points validate pre- and postconditions and forward to the
/// do_* hooks. Implementations must be safe to call from several threads.
class Backend {
public:
    virtual ~Backend() = default;

    TokenSequence tokenize(std::string_view text) const {
        if (unicode::trim(text).empty()) throw InputError("empty input");
        TokenSequence seq = do_tokenize(text);
        seq.validate();
        return seq;
    }

    SentenceEmbedding embed(std::string_view text) const {
        if (unicode::trim(text).empty()) throw InputError("empty input");
        return do_embed(text);
    }

    std::vector<SentenceEmbedding> embed_batch(std::span<const std::string> texts) const {
        for (const auto& t : texts)
            if (unicode::trim(t).empty()) throw InputError("empty input");
        auto out = do_embed_batch(texts);
        if (out.size() != texts.size()) throw BackendError("embed batch size mismatch");
        return out;
    }

    VocabDistribution mask_logprobs(const MaskedQuery& query) const {
        query.validate();
        VocabDistribution dist = do_mask_logprobs(query);
        dist.validate();
        if (query.target) {
            if (dist.entries.size() != 1 || dist.entries[0].first != *query.target)
                throw BackendError("response does not carry exactly the requested target \"" + *query.target + "\"");
            dist.complete = false;
        }
        if (query.topk && dist.entries.size() > *query.topk) throw BackendError("response exceeds topk");
        if (query.topk) dist.complete = false;
        return dist;
    }

    BackendInfo info() const { return do_info(); }

    virtual Pooling pooling() const { return Pooling::mean; }
    /// Human-readable identity for report headers.
    virtual std::string name() const = 0;

protected:
    virtual TokenSequence do_tokenize(std::string_view text) const = 0;
    virtual SentenceEmbedding do_embed(std::string_view text) const = 0;
    virtual std::vector<SentenceEmbedding> do_embed_batch(std::span<const std::string> texts) const {
        std::vector<SentenceEmbedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(do_embed(t));
        return out;
    }
    virtual VocabDistribution do_mask_logprobs(const MaskedQuery& query) const = 0;
    virtual BackendInfo do_info() const = 0;
};

using BackendPtr = std::shared_ptr<const Backend>;

/// Applies the target / topk contract to a complete, sorted distribution.
inline VocabDistribution select_entries(VocabDistribution full, const MaskedQuery& q) {
    if (q.target) {
        auto lp = full.logprob(*q.target);
        if (!lp) throw UnknownTokenError(*q.target);
        return VocabDistribution{{{*q.target, *lp}}, false};
    }
    if (q.topk && full.entries.size() > *q.topk) {
        full.entries.resize(*q.topk);
        full.complete = false;
    } else if (q.topk) {
        full.complete = false;
    }
    return full;
}

} // namespace mlbias
