#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mlbias/error.hpp"

namespace mlbias {

inline constexpr std::string_view mask_token = "[MASK]";

/// True for the bracketed special tokens a BERT-style tokenizer reserves.
inline bool is_special_token(std::string_view tok) {
    return tok == "[MASK]" || tok == "[CLS]" || tok == "[SEP]" || tok == "[PAD]" || tok == "[UNK]";
}

enum class BackendKind { toy, fixture, http };
enum class Pooling { mean, cls };

inline std::string to_string(BackendKind k) {
    switch (k) {
    case BackendKind::toy: return "toy";
    case BackendKind::fixture: return "fixture";
    case BackendKind::http: return "http";
    }
    return "?";
}

inline std::string to_string(Pooling p) { return p == Pooling::mean ? "mean" : "cls"; }

inline Pooling parse_pooling(std::string_view s) {
    if (s == "mean") return Pooling::mean;
    if (s == "cls") return Pooling::cls;
    throw InputError("unknown pooling \"" + std::string(s) + "\" (expected mean or cls)");
}

/// Which model to talk to and how. Only the fields of `kind` are meaningful.
struct BackendDescriptor {
    BackendKind kind = BackendKind::toy;
    std::string endpoint;     // http
    std::string fixture_dir;  // fixture
    std::uint64_t seed = 42;  // toy
    Pooling pooling = Pooling::mean;
    unsigned max_in_flight = 8;  // http

    void validate() const {
        switch (kind) {
        case BackendKind::toy:
            if (!endpoint.empty() || !fixture_dir.empty())
                throw InputError("toy backend takes neither endpoint nor fixture_dir");
            break;
        case BackendKind::fixture:
            if (fixture_dir.empty()) throw InputError("fixture backend requires fixture_dir");
            if (!endpoint.empty()) throw InputError("fixture backend takes no endpoint");
            break;
        case BackendKind::http:
            if (endpoint.empty()) throw InputError("http backend requires endpoint");
            if (!fixture_dir.empty()) throw InputError("http backend takes no fixture_dir");
            if (max_in_flight == 0) throw InputError("max_in_flight must be positive");
            break;
        }
    }

    static BackendDescriptor toy(std::uint64_t seed = 42, Pooling pooling = Pooling::mean) {
        BackendDescriptor d;
        d.kind = BackendKind::toy;
        d.seed = seed;
        d.pooling = pooling;
        return d;
    }
    static BackendDescriptor fixture(std::string dir, Pooling pooling = Pooling::mean) {
        BackendDescriptor d;
        d.kind = BackendKind::fixture;
        d.fixture_dir = std::move(dir);
        d.pooling = pooling;
        return d;
    }
    static BackendDescriptor http(std::string endpoint, Pooling pooling = Pooling::mean) {
        BackendDescriptor d;
        d.kind = BackendKind::http;
        d.endpoint = std::move(endpoint);
        d.pooling = pooling;
        return d;
    }
};

/// Parses the command-line form of a descriptor:
///   toy | toy:<seed> | fixture:<dir> | http://host:port[/prefix]
inline BackendDescriptor parse_descriptor(std::string_view s, Pooling pooling = Pooling::mean) {
    BackendDescriptor d;
    if (s == "toy") {
        d = BackendDescriptor::toy();
    } else if (s.starts_with("toy:")) {
        const std::string num(s.substr(4));
        std::size_t used = 0;
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (num.empty() || used != num.size()) throw InputError("bad toy seed \"" + num + "\"");
        d = BackendDescriptor::toy(seed);
    } else if (s.starts_with("fixture:")) {
        d = BackendDescriptor::fixture(std::string(s.substr(8)));
    } else if (s.starts_with("http://") || s.starts_with("https://")) {
        d = BackendDescriptor::http(std::string(s));
    } else {
        throw InputError("unrecognised backend descriptor \"" + std::string(s) + "\"");
    }
    d.pooling = pooling;
    d.validate();
    return d;
}

inline std::string describe(const BackendDescriptor& d) {
    switch (d.kind) {
    case BackendKind::toy: return "toy:" + std::to_string(d.seed);
    case BackendKind::fixture: return "fixture:" + d.fixture_dir;
    case BackendKind::http: return d.endpoint;
    }
    return "?";
}

/// Tokenizer output. Never empty, never contains an empty token.
struct TokenSequence {
    std::vector<std::string> tokens;
    std::string source_text;

    void validate() const {
        if (tokens.empty()) throw InputError("empty token sequence for \"" + source_text + "\"");
        for (const auto& t : tokens)
            if (t.empty()) throw InputError("empty token in sequence for \"" + source_text + "\"");
    }
    std::size_t size() const noexcept { return tokens.size(); }
};

struct MaskedQuery {
    std::vector<std::string> tokens;
    std::size_t mask_index = 0;
    std::optional<std::string> target;
    std::optional<std::size_t> topk;

    void validate() const {
        if (mask_index >= tokens.size())
            throw InputError("mask_index " + std::to_string(mask_index) + " out of range for " +
                             std::to_string(tokens.size()) + " tokens");
        if (tokens[mask_index] != mask_token)
            throw InputError("token at mask_index " + std::to_string(mask_index) + " is \"" + tokens[mask_index] +
                             "\", not [MASK]");
        if (topk && *topk == 0) throw InputError("topk must be positive");
        if (target && target->empty()) throw InputError("empty target token");
    }
};

/// Log-probabilities (natural log) for one masked position, sorted descending.
struct VocabDistribution {
    std::vector<std::pair<std::string, double>> entries;
    bool complete = false;

    /// Sorts by descending log-probability (ties by token) and checks invariants.
    void normalize_order() {
        std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
    }

    void validate() const {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& [tok, lp] = entries[i];
            if (!std::isfinite(lp) || lp > 1e-12)
                throw BackendError("invalid log-probability " + std::to_string(lp) + " for \"" + tok + "\"");
            if (!seen.insert(tok).second) throw BackendError("duplicate token \"" + tok + "\" in distribution");
            if (i > 0 && entries[i - 1].second < lp) throw BackendError("distribution entries not sorted");
        }
        if (complete) {
            double s = 0.0;
            for (const auto& e : entries) s += std::exp(e.second);
            if (std::abs(s - 1.0) > 1e-6)
                throw BackendError("complete distribution sums to " + std::to_string(s));
        }
    }

    std::optional<double> logprob(std::string_view tok) const {
        for (const auto& [t, lp] : entries)
            if (t == tok) return lp;
        return std::nullopt;
    }
};

/// Unit-free embedding vector with its cached Euclidean norm.
class SentenceEmbedding {
public:
    SentenceEmbedding() = default;
    explicit SentenceEmbedding(std::vector<double> v) : vector_(std::move(v)) {
        if (vector_.empty()) throw BackendError("embedding has dimension 0");
        double ss = 0.0;
        for (double x : vector_) {
            if (!std::isfinite(x)) throw BackendError("non-finite embedding component");
            ss += x * x;
        }
        norm_ = std::sqrt(ss);
        if (!(norm_ > 0.0)) throw BackendError("zero-norm embedding");
    }

    const std::vector<double>& vector() const noexcept { return vector_; }
    double norm() const noexcept { return norm_; }
    std::size_t dim() const noexcept { return vector_.size(); }

private:
    std::vector<double> vector_;
    double norm_ = 0.0;
};

struct BackendInfo {
    std::string model_id;
    std::size_t dim = 0;
    std::size_t max_len = 0;
};

} // namespace mlbias
