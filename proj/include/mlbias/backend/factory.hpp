#pragma once

#include <memory>

#include "mlbias/backend/fixture.hpp"
#include "mlbias/backend/http.hpp"
#include "mlbias/backend/toy.hpp"

namespace mlbias {

inline BackendPtr make_backend(const BackendDescriptor& d, toy::Options toy_options = {}) {
    d.validate();
    switch (d.kind) {
    case BackendKind::toy: return std::make_shared<ToyBackend>(d.seed, d.pooling, std::move(toy_options));
    case BackendKind::fixture: return std::make_shared<FixtureBackend>(d.fixture_dir, d.pooling);
    case BackendKind::http: return std::make_shared<HttpBackend>(d.endpoint, d.pooling, d.max_in_flight);
    }
    throw InputError("unknown backend kind");
}

inline TokenSequence tokenize(std::string_view text, const Backend& backend) { return backend.tokenize(text); }
inline SentenceEmbedding embed(std::string_view text, const Backend& backend) { return backend.embed(text); }
inline VocabDistribution mask_logprobs(const MaskedQuery& q, const Backend& backend) {
    return backend.mask_logprobs(q);
}

} // namespace mlbias
