#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbias/viz/tsne.hpp"

namespace mlbias::viz {

enum class Nearer { male, female, tie };

inline std::string to_string(Nearer n) {
    switch (n) {
    case Nearer::male: return "male";
    case Nearer::female: return "female";
    case Nearer::tie: return "tie";
    }
    return "?";
}

struct ProximityRow {
    std::string adjective;
    std::string male_form;
    std::string female_form;
    double male_distance = 0.0;
    double female_distance = 0.0;
    double ratio = 1.0;  // male_distance / female_distance; < 1 means nearer the male form
    Nearer nearer = Nearer::tie;
};

struct ProximityReport {
    std::vector<ProximityRow> rows;
    std::size_t male = 0;
    std::size_t female = 0;
    std::size_t ties = 0;
};

/// For every adjective, the nearest male-form and female-form points in the
/// projection and which of the two is closer.
inline ProximityReport proximity_report(const Matrix& coords, const std::vector<std::string>& labels,
                                        const std::vector<GenderTag>& tags) {
    const std::size_t n = coords.rows();
    if (labels.size() != n || tags.size() != n) throw InputError("labels/tags do not match coordinates");
    auto nearest = [&](std::size_t i, GenderTag want) {
        std::size_t best = n;
        double bd = INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
            if (tags[j] != want) continue;
            const double d = std::sqrt(squared_distance(coords.row(i), coords.row(j)));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        if (best == n) throw InputError("projection has no " + to_string(want) + " rows");
        return std::pair{best, bd};
    };

    ProximityReport rep;
    for (std::size_t i = 0; i < n; ++i) {
        if (tags[i] != GenderTag::adjective) continue;
        const auto [mi, md] = nearest(i, GenderTag::male_form);
        const auto [fi, fd] = nearest(i, GenderTag::female_form);
        ProximityRow row{labels[i], labels[mi], labels[fi], md, fd, 1.0, Nearer::tie};
        if (std::abs(md - fd) <= 1e-12 * std::max({1.0, md, fd})) {
            row.ratio = 1.0;
            ++rep.ties;
        } else {
            row.ratio = md / fd;
            row.nearer = md < fd ? Nearer::male : Nearer::female;
            ++(md < fd ? rep.male : rep.female);
        }
        rep.rows.push_back(std::move(row));
    }
    if (rep.rows.empty()) throw InputError("no adjective-tagged rows");
    return rep;
}

inline nlohmann::json to_json(const ProximityReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"adjective", row.adjective},
                        {"male_form", row.male_form},
                        {"female_form", row.female_form},
                        {"male_distance", row.male_distance},
                        {"female_distance", row.female_distance},
                        {"ratio", row.ratio},
                        {"nearer", to_string(row.nearer)}});
    return {{"rows", rows}, {"summary", {{"male", r.male}, {"female", r.female}, {"tie", r.ties}}}};
}

} // namespace mlbias::viz
