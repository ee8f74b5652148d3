#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "mlbias/backend/backend.hpp"
#include "mlbias/backend/protocol.hpp"

namespace mlbias {

/// Client for a model server speaking the /v1 JSON protocol.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(const std::string& endpoint, Pooling pooling = Pooling::mean, unsigned max_in_flight = 8)
        : pooling_(pooling), slots_(static_cast<std::ptrdiff_t>(max_in_flight)) {
        if (max_in_flight == 0 || max_in_flight > max_slots) throw InputError("max_in_flight out of range");
        // split "http://host:port/prefix" into the client base and a path prefix
        const auto scheme_end = endpoint.find("://");
        if (scheme_end == std::string::npos) throw InputError("endpoint lacks a scheme: " + endpoint);
        const auto path_start = endpoint.find('/', scheme_end + 3);
        base_ = endpoint.substr(0, path_start);
        if (path_start != std::string::npos) {
            prefix_ = endpoint.substr(path_start);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
    }

    std::string name() const override { return base_ + prefix_; }
    Pooling pooling() const override { return pooling_; }

    void set_timeouts(std::chrono::seconds connect, std::chrono::seconds read) {
        connect_timeout_ = connect;
        read_timeout_ = read;
    }

protected:
    TokenSequence do_tokenize(std::string_view text) const override {
        return protocol::parse_tokenize_response(call(protocol::tokenize_path, protocol::tokenize_request(text)), text);
    }

    SentenceEmbedding do_embed(std::string_view text) const override {
        auto vs = protocol::parse_embed_response(
            call(protocol::embed_path, protocol::embed_request({std::string(text)}, pooling_)));
        if (vs.size() != 1) throw BackendError("server returned " + std::to_string(vs.size()) + " vectors for 1 text");
        return std::move(vs.front());
    }

    std::vector<SentenceEmbedding> do_embed_batch(std::span<const std::string> texts) const override {
        if (texts.empty()) return {};
        return protocol::parse_embed_response(
            call(protocol::embed_path, protocol::embed_request({texts.begin(), texts.end()}, pooling_)));
    }

    VocabDistribution do_mask_logprobs(const MaskedQuery& q) const override {
        try {
            return protocol::parse_mask_response(call(protocol::mask_path, protocol::mask_request(q)));
        } catch (const ServerError& e) {
            if (q.target && (e.kind == "unknown_token" || std::string(e.what()).find("not in vocabulary") != std::string::npos))
                throw UnknownTokenError(*q.target);
            throw;
        }
    }

    BackendInfo do_info() const override { return protocol::parse_info_response(call(protocol::info_path, nullptr)); }

private:
    static constexpr std::ptrdiff_t max_slots = 256;

    struct ServerError : BackendError {
        ServerError(const std::string& msg, std::string k) : BackendError(msg), kind(std::move(k)) {}
        std::string kind;
    };

    nlohmann::json call(std::string_view path, const nlohmann::json& body) const {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<max_slots>& s;
            ~Release() { s.release(); }
        } release{slots_};

        httplib::Client client(base_);
        client.set_connection_timeout(connect_timeout_);
        client.set_read_timeout(read_timeout_);
        const std::string url = prefix_ + std::string(path);
        auto res = body.is_null() ? client.Get(url)
                                  : client.Post(url, body.dump(), "application/json; charset=utf-8");
        if (!res) throw BackendError("backend unreachable: " + name() + " (" + httplib::to_string(res.error()) + ")");
        nlohmann::json payload;
        try {
            payload = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            if (res->status / 100 != 2) throw BackendError("HTTP " + std::to_string(res->status) + " from " + url);
            throw BackendError("malformed JSON response from " + url);
        }
        if (res->status / 100 != 2) {
            throw ServerError("HTTP " + std::to_string(res->status) + " from " + url + ": " +
                                  payload.value("error", std::string("unspecified error")),
                              payload.value("kind", std::string()));
        }
        return payload;
    }

    std::string base_;
    std::string prefix_;
    Pooling pooling_;
    mutable std::counting_semaphore<max_slots> slots_;
    std::chrono::seconds connect_timeout_{5};
    std::chrono::seconds read_timeout_{120};
};

} // namespace mlbias
