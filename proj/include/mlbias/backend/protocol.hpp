#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mlbias/backend/types.hpp"
#include "mlbias/hash.hpp"

// JSON bodies of the model-server wire protocol (all UTF-8):
//   POST /v1/tokenize       {"text": s}                          -> {"tokens": [...]}
//   POST /v1/embed          {"texts": [...], "pooling": p}       -> {"vectors": [[...]], "dim": d}
//   POST /v1/mask_logprobs  {"tokens", "mask_index", "target"?, "topk"?}
//                                                                -> {"entries": [["tok", lp]], "complete": b}
//   GET  /v1/info                                                -> {"model_id", "dim", "max_len"}
// Non-2xx responses carry {"error": msg}.
namespace mlbias::protocol {

using json = nlohmann::json;

inline constexpr std::string_view tokenize_path = "/v1/tokenize";
inline constexpr std::string_view embed_path = "/v1/embed";
inline constexpr std::string_view mask_path = "/v1/mask_logprobs";
inline constexpr std::string_view info_path = "/v1/info";

inline json tokenize_request(std::string_view text) { return {{"text", std::string(text)}}; }

inline json embed_request(const std::vector<std::string>& texts, Pooling pooling) {
    return {{"texts", texts}, {"pooling", to_string(pooling)}};
}

inline json mask_request(const MaskedQuery& q) {
    json j = {{"tokens", q.tokens}, {"mask_index", q.mask_index}};
    if (q.target) j["target"] = *q.target;
    if (q.topk) j["topk"] = *q.topk;
    return j;
}

inline MaskedQuery parse_mask_request(const json& j) {
    MaskedQuery q;
    q.tokens = j.at("tokens").get<std::vector<std::string>>();
    q.mask_index = j.at("mask_index").get<std::size_t>();
    if (j.contains("target") && !j["target"].is_null()) q.target = j["target"].get<std::string>();
    if (j.contains("topk") && !j["topk"].is_null()) q.topk = j["topk"].get<std::size_t>();
    return q;
}

inline json tokenize_response(const TokenSequence& seq) { return {{"tokens", seq.tokens}}; }

inline TokenSequence parse_tokenize_response(const json& j, std::string_view text) {
    return TokenSequence{j.at("tokens").get<std::vector<std::string>>(), std::string(text)};
}

inline json embed_response(const std::vector<SentenceEmbedding>& vs) {
    json vectors = json::array();
    for (const auto& v : vs) vectors.push_back(v.vector());
    return {{"vectors", vectors}, {"dim", vs.empty() ? 0 : vs.front().dim()}};
}

inline std::vector<SentenceEmbedding> parse_embed_response(const json& j) {
    std::vector<SentenceEmbedding> out;
    const auto dim = j.at("dim").get<std::size_t>();
    for (const auto& v : j.at("vectors")) {
        auto vec = v.get<std::vector<double>>();
        if (vec.size() != dim) throw BackendError("embedding dimension disagrees with declared dim");
        out.emplace_back(std::move(vec));
    }
    return out;
}

inline json mask_response(const VocabDistribution& d) {
    json entries = json::array();
    for (const auto& [tok, lp] : d.entries) entries.push_back(json::array({tok, lp}));
    return {{"entries", entries}, {"complete", d.complete}};
}

inline VocabDistribution parse_mask_response(const json& j) {
    VocabDistribution d;
    for (const auto& e : j.at("entries")) {
        if (!e.is_array() || e.size() != 2) throw BackendError("malformed distribution entry");
        d.entries.emplace_back(e[0].get<std::string>(), e[1].get<double>());
    }
    d.complete = j.at("complete").get<bool>();
    d.normalize_order();
    return d;
}

inline json info_response(const BackendInfo& info) {
    return {{"model_id", info.model_id}, {"dim", info.dim}, {"max_len", info.max_len}};
}

inline BackendInfo parse_info_response(const json& j) {
    return {j.at("model_id").get<std::string>(), j.value("dim", std::size_t{0}), j.value("max_len", std::size_t{0})};
}

/// Canonical request envelope. nlohmann::json objects keep keys sorted, so
/// the serialization (and hence the hash) ignores field order.
inline json envelope(std::string_view path, const json& body) {
    return {{"path", std::string(path)}, {"body", body}};
}

inline std::uint64_t request_hash(std::string_view path, const json& body) {
    return hash::fnv1a(envelope(path, body).dump());
}

} // namespace mlbias::protocol
