#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbias/backend/backend.hpp"
#include "mlbias/parallel.hpp"
#include "mlbias/viz/tsne.hpp"

namespace mlbias::viz {

/// Gendered word pairs plus adjectives to project together.
struct WordSet {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::string> adjectives;
};

/// {"pairs": [["tabib", "tabiba"], ...], "adjectives": ["kompetenti", ...]}
inline WordSet load_words(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open word file " + path.string());
    WordSet w;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& p : j.at("pairs")) w.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        w.adjectives = j.at("adjectives").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed word file " + path.string() + ": " + e.what());
    }
    if (w.pairs.empty() || w.adjectives.empty()) throw InputError("word file needs pairs and adjectives");
    return w;
}

/// Embeds each word as a one-word sentence. Row order: male, female of each
/// pair, then the adjectives.
inline EmbeddingMatrix embed_words(const WordSet& words, const Backend& backend, unsigned workers = 0) {
    EmbeddingMatrix m;
    for (const auto& [male, female] : words.pairs) {
        m.labels.push_back(male);
        m.gender_tags.push_back(GenderTag::male_form);
        m.labels.push_back(female);
        m.gender_tags.push_back(GenderTag::female_form);
    }
    for (const auto& a : words.adjectives) {
        m.labels.push_back(a);
        m.gender_tags.push_back(GenderTag::adjective);
    }
    const auto vecs =
        parallel_map(m.labels.size(), [&](std::size_t i) { return backend.embed(m.labels[i]).vector(); }, workers);
    m.rows = Matrix::from_rows(vecs);
    m.validate();
    return m;
}

} // namespace mlbias::viz
