#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mlbias/backend/backend.hpp"
#include "mlbias/backend/protocol.hpp"

namespace mlbias {

namespace fixture {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr std::string_view manifest_name = "manifest.json";

inline fs::path entry_path(const fs::path& dir, std::string_view path, const json& body) {
    return dir / (hash::to_hex(protocol::request_hash(path, body)) + ".json");
}

inline json read_json(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw BackendError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw BackendError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

/// Writes via a temporary file and rename, so readers never see partial files.
inline void write_atomic(const fs::path& p, const std::string& content) {
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, p);
}

inline std::string today_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(now)};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

} // namespace fixture

/// Replays responses recorded in a fixture directory: one JSON file per
/// request, named by the hex digest of the canonical request.
class FixtureBackend final : public Backend {
public:
    explicit FixtureBackend(std::filesystem::path dir, Pooling pooling = Pooling::mean)
        : dir_(std::move(dir)), pooling_(pooling) {
        if (!std::filesystem::is_directory(dir_)) throw BackendError("fixture directory not found: " + dir_.string());
        const auto manifest_path = dir_ / fixture::manifest_name;
        if (std::filesystem::exists(manifest_path)) manifest_ = fixture::read_json(manifest_path);
    }

    std::string name() const override { return "fixture:" + manifest_.value("model_id", std::string("unknown")); }
    Pooling pooling() const override { return pooling_; }
    const nlohmann::json& manifest() const noexcept { return manifest_; }

    /// Recorded response body for a request; throws BackendError on a miss.
    nlohmann::json lookup(std::string_view path, const nlohmann::json& body) const {
        const auto p = fixture::entry_path(dir_, path, body);
        if (!std::filesystem::exists(p))
            throw BackendError("fixture miss for " + std::string(path) + " " + body.dump());
        const auto entry = fixture::read_json(p);
        if (entry.at("request") != protocol::envelope(path, body))
            throw BackendError("fixture hash collision in " + p.string());
        const auto& resp = entry.at("response");
        if (entry.value("status", 200) != 200) {
            const auto msg = resp.value("error", std::string("recorded error"));
            if (resp.value("kind", std::string()) == "unknown_token") throw UnknownTokenError(resp.value("token", msg));
            throw BackendError(msg);
        }
        return resp;
    }

protected:
    TokenSequence do_tokenize(std::string_view text) const override {
        return protocol::parse_tokenize_response(lookup(protocol::tokenize_path, protocol::tokenize_request(text)), text);
    }

    SentenceEmbedding do_embed(std::string_view text) const override {
        auto vs = protocol::parse_embed_response(
            lookup(protocol::embed_path, protocol::embed_request({std::string(text)}, pooling_)));
        if (vs.size() != 1) throw BackendError("fixture embed response holds " + std::to_string(vs.size()) + " vectors");
        return std::move(vs.front());
    }

    VocabDistribution do_mask_logprobs(const MaskedQuery& q) const override {
        return protocol::parse_mask_response(lookup(protocol::mask_path, protocol::mask_request(q)));
    }

    BackendInfo do_info() const override {
        BackendInfo info;
        info.model_id = manifest_.value("model_id", std::string("unknown"));
        info.dim = manifest_.value("dim", std::size_t{0});
        info.max_len = manifest_.value("max_len", std::size_t{0});
        return info;
    }

private:
    std::filesystem::path dir_;
    Pooling pooling_;
    nlohmann::json manifest_ = nlohmann::json::object();
};

/// Forwards to another backend and records every request/response pair in
/// fixture format. Unknown-token errors are recorded too, so replay reproduces them.
class RecordingBackend final : public Backend {
public:
    RecordingBackend(BackendPtr inner, std::filesystem::path dir) : inner_(std::move(inner)), dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        const auto info = inner_->info();
        nlohmann::json manifest = {{"model_id", info.model_id},
                                   {"dim", info.dim},
                                   {"max_len", info.max_len},
                                   {"created", fixture::today_utc()},
                                   {"source", inner_->name()},
                                   {"pooling", to_string(inner_->pooling())}};
        fixture::write_atomic(dir_ / fixture::manifest_name, manifest.dump(2) + "\n");
    }

    std::string name() const override { return inner_->name(); }
    Pooling pooling() const override { return inner_->pooling(); }
    std::size_t recorded() const {
        std::lock_guard lock(mu_);
        return count_;
    }

protected:
    TokenSequence do_tokenize(std::string_view text) const override {
        auto seq = inner_->tokenize(text);
        store(protocol::tokenize_path, protocol::tokenize_request(text), protocol::tokenize_response(seq));
        return seq;
    }

    SentenceEmbedding do_embed(std::string_view text) const override {
        auto v = inner_->embed(text);
        store(protocol::embed_path, protocol::embed_request({std::string(text)}, inner_->pooling()),
              protocol::embed_response({v}));
        return v;
    }

    VocabDistribution do_mask_logprobs(const MaskedQuery& q) const override {
        try {
            auto d = inner_->mask_logprobs(q);
            store(protocol::mask_path, protocol::mask_request(q), protocol::mask_response(d));
            return d;
        } catch (const UnknownTokenError& e) {
            store(protocol::mask_path, protocol::mask_request(q),
                  {{"error", e.what()}, {"kind", "unknown_token"}, {"token", e.token()}}, 422);
            throw;
        }
    }

    BackendInfo do_info() const override { return inner_->info(); }

private:
    void store(std::string_view path, const nlohmann::json& body, const nlohmann::json& response,
               int status = 200) const {
        nlohmann::json entry = {{"request", protocol::envelope(path, body)}, {"response", response}};
        if (status != 200) entry["status"] = status;
        const auto p = fixture::entry_path(dir_, path, body);
        std::lock_guard lock(mu_);
        fixture::write_atomic(p, entry.dump(1) + "\n");
        ++count_;
    }

    BackendPtr inner_;
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    mutable std::size_t count_ = 0;
};

} // namespace mlbias
