#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbias/backend/backend.hpp"
#include "mlbias/error.hpp"
#include "mlbias/parallel.hpp"
#include "mlbias/random.hpp"

namespace mlbias::seat {

using Vector = std::vector<double>;

/// Exact enumeration is used up to this many equal-size repartitions.
inline constexpr std::uint64_t exact_limit = 20'000;
/// Variances at or below this are treated as zero.
inline constexpr double variance_floor = 1e-24;
/// Two permutation statistics closer than this (relative) count as tied.
inline constexpr double tie_tolerance = 1e-12;

/// Two target sets (X, Y) and two attribute sets (A, B) of sentences.
struct AssociationTest {
    std::string name;
    std::vector<std::string> targets_x;
    std::vector<std::string> targets_y;
    std::vector<std::string> attributes_a;
    std::vector<std::string> attributes_b;

    void validate() const {
        if (targets_x.empty() || targets_y.empty() || attributes_a.empty() || attributes_b.empty())
            throw InputError("association test \"" + name + "\" has an empty sentence set");
        if (targets_x.size() != targets_y.size())
            throw InputError("association test \"" + name + "\" has unequal target sets (" +
                             std::to_string(targets_x.size()) + " vs " + std::to_string(targets_y.size()) + ")");
    }
};

/// The same test after every sentence went through a sentence encoder.
struct EmbeddedTest {
    std::string name;
    std::vector<Vector> x, y, a, b;
};

struct EffectSizeResult {
    std::string test_name;
    double d = 0.0;
    double p_value = 1.0;
    std::uint64_t n_permutations = 0;
    bool exact = false;
};

enum class PermutationMode { automatic, exact, sampled };

struct PermutationResult {
    double p = 1.0;
    bool exact = false;
    std::uint64_t n_permutations = 0;
};

inline double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw InputError("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (!(nu > 0.0) || !(nv > 0.0)) throw InputError("cosine of a zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// s(w, A, B): mean cosine of w to A minus mean cosine of w to B. Lies in [-2, 2].
inline double association(std::span<const double> w, const std::vector<Vector>& A, const std::vector<Vector>& B) {
    if (A.empty() || B.empty()) throw InputError("empty attribute set");
    double sa = 0.0, sb = 0.0;
    for (const auto& a : A) sa += cosine(w, a);
    for (const auto& b : B) sb += cosine(w, b);
    return sa / static_cast<double>(A.size()) - sb / static_cast<double>(B.size());
}

struct Associations {
    std::vector<double> sx, sy;
};

inline Associations associations(const EmbeddedTest& t) {
    if (t.x.empty() || t.y.empty() || t.a.empty() || t.b.empty())
        throw InputError("association test \"" + t.name + "\" has an empty set");
    Associations out;
    for (const auto& w : t.x) out.sx.push_back(association(w, t.a, t.b));
    for (const auto& w : t.y) out.sy.push_back(association(w, t.a, t.b));
    return out;
}

inline double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// d = (mean_X s - mean_Y s) / std_{X u Y} s, sample standard deviation (n - 1).
inline double effect_size(std::span<const double> sx, std::span<const double> sy) {
    if (sx.empty() || sy.empty()) throw InputError("effect size needs non-empty target sets");
    std::vector<double> all(sx.begin(), sx.end());
    all.insert(all.end(), sy.begin(), sy.end());
    if (all.size() < 2) throw DegenerateError("degenerate association variance");
    const double m = mean(all);
    double ss = 0.0;
    for (double s : all) ss += (s - m) * (s - m);
    const double var = ss / static_cast<double>(all.size() - 1);
    if (var <= variance_floor) throw DegenerateError("degenerate association variance");
    return (mean(sx) - mean(sy)) / std::sqrt(var);
}

inline double effect_size(const EmbeddedTest& t) {
    const auto s = associations(t);
    return effect_size(s.sx, s.sy);
}

/// Binomial coefficient, saturating at UINT64_MAX.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const std::uint64_t num = n - k + i;
        // r * num / i is exact at every step; guard the multiplication
        if (r > UINT64_MAX / num) return UINT64_MAX;
        r = r * num / i;
    }
    return r;
}

namespace detail {

// mean over the chosen indices minus mean over the rest, summed in index order
inline double partition_statistic(std::span<const double> pooled, std::span<const char> in_x, std::size_t nx) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < pooled.size(); ++i) (in_x[i] ? sx : sy) += pooled[i];
    return sx / static_cast<double>(nx) - sy / static_cast<double>(pooled.size() - nx);
}

inline bool at_least(double stat, double observed) {
    return stat >= observed - tie_tolerance * std::max(1.0, std::abs(observed));
}

} // namespace detail

/// One-sided permutation p-value of the mean difference of associations.
///
/// Counts equal-size repartitions of X u Y whose statistic is at least the
/// observed one. The observed partition is part of the count, so p > 0.
inline PermutationResult permutation_pvalue(std::span<const double> sx, std::span<const double> sy,
                                            std::uint64_t n_samples, std::uint64_t seed,
                                            PermutationMode mode = PermutationMode::automatic) {
    if (sx.size() != sy.size()) throw InputError("permutation test requires |X| == |Y|");
    if (sx.empty()) throw InputError("permutation test requires non-empty target sets");
    if (n_samples < 100) throw InputError("n_samples must be at least 100");
    (void)effect_size(sx, sy);  // rejects zero variance

    std::vector<double> pooled(sx.begin(), sx.end());
    pooled.insert(pooled.end(), sy.begin(), sy.end());
    const std::size_t n = pooled.size(), nx = sx.size();

    std::vector<char> in_x(n, 0);
    std::fill(in_x.begin(), in_x.begin() + static_cast<std::ptrdiff_t>(nx), 1);
    const double observed = detail::partition_statistic(pooled, in_x, nx);

    const std::uint64_t total = binomial(n, nx);
    const bool exact = mode == PermutationMode::exact || (mode == PermutationMode::automatic && total <= exact_limit);

    PermutationResult r;
    r.exact = exact;
    if (exact) {
        if (total > 50'000'000) throw InputError("exact enumeration too large");
        // in_x starts as the lexicographically largest mask; walk all masks downwards
        std::uint64_t count = 0;
        do {
            count += detail::at_least(detail::partition_statistic(pooled, in_x, nx), observed);
        } while (std::prev_permutation(in_x.begin(), in_x.end()));
        r.n_permutations = total;
        r.p = static_cast<double>(count) / static_cast<double>(total);
    } else {
        Rng rng(seed);
        std::vector<std::size_t> idx(n);
        std::vector<char> mask(n);
        std::uint64_t count = 0;
        for (std::uint64_t s = 0; s < n_samples; ++s) {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            rng.shuffle(std::span<std::size_t>(idx));
            std::fill(mask.begin(), mask.end(), 0);
            for (std::size_t i = 0; i < nx; ++i) mask[idx[i]] = 1;
            count += detail::at_least(detail::partition_statistic(pooled, mask, nx), observed);
        }
        r.n_permutations = n_samples;
        r.p = static_cast<double>(count + 1) / static_cast<double>(n_samples + 1);
    }
    return r;
}

inline EffectSizeResult evaluate(const EmbeddedTest& t, std::uint64_t n_samples, std::uint64_t seed,
                                 PermutationMode mode = PermutationMode::automatic) {
    if (t.x.size() != t.y.size()) throw InputError("association test \"" + t.name + "\" has unequal target sets");
    const auto s = associations(t);
    EffectSizeResult r;
    r.test_name = t.name;
    r.d = effect_size(s.sx, s.sy);
    const auto p = permutation_pvalue(s.sx, s.sy, n_samples, seed, mode);
    r.p_value = p.p;
    r.exact = p.exact;
    r.n_permutations = p.n_permutations;
    return r;
}

/// Encodes every distinct sentence of the test once (concurrently).
inline EmbeddedTest embed_test(const AssociationTest& test, const Backend& backend, unsigned workers = 0) {
    test.validate();
    std::map<std::string, std::size_t> index;
    std::vector<std::string> unique;
    for (const auto* set : {&test.targets_x, &test.targets_y, &test.attributes_a, &test.attributes_b})
        for (const auto& s : *set)
            if (index.emplace(s, unique.size()).second) unique.push_back(s);

    const auto vecs = parallel_map(unique.size(), [&](std::size_t i) { return backend.embed(unique[i]).vector(); }, workers);
    const std::size_t dim = vecs.front().size();
    for (const auto& v : vecs)
        if (v.size() != dim) throw BackendError("backend returned embeddings of varying dimension");

    EmbeddedTest out;
    out.name = test.name;
    auto fill = [&](const std::vector<std::string>& src, std::vector<Vector>& dst) {
        for (const auto& s : src) dst.push_back(vecs[index.at(s)]);
    };
    fill(test.targets_x, out.x);
    fill(test.targets_y, out.y);
    fill(test.attributes_a, out.a);
    fill(test.attributes_b, out.b);
    return out;
}

inline EffectSizeResult effect_size(const AssociationTest& test, const Backend& backend, std::uint64_t n_samples = 10'000,
                                    std::uint64_t seed = 42, unsigned workers = 0) {
    return evaluate(embed_test(test, backend, workers), n_samples, seed);
}

/// Mean absolute effect size over tests ("Avg. SEAT").
inline double avg_seat(std::span<const EffectSizeResult> results) {
    if (results.empty()) throw InputError("avg_seat needs at least one result");
    double s = 0.0;
    for (const auto& r : results) s += std::abs(r.d);
    return s / static_cast<double>(results.size());
}

/// Reads a SEAT JSON file with groups targ1/targ2/attr1/attr2, each {"examples": [...]}.
inline AssociationTest load_test(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open SEAT file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed SEAT file " + path.string() + ": " + e.what());
    }
    auto group = [&](const char* key) {
        if (!j.contains(key) || !j[key].contains("examples"))
            throw InputError("SEAT file " + path.string() + " lacks " + key + ".examples");
        return j[key]["examples"].get<std::vector<std::string>>();
    };
    AssociationTest t{path.stem().string(), group("targ1"), group("targ2"), group("attr1"), group("attr2")};
    t.validate();
    return t;
}

/// Loads `names` (file stems) from `dir`, or every *.json file when names is empty.
inline std::vector<AssociationTest> load_dir(const std::filesystem::path& dir, const std::vector<std::string>& names = {}) {
    if (!std::filesystem::is_directory(dir)) throw InputError("SEAT directory not found: " + dir.string());
    std::vector<AssociationTest> out;
    if (names.empty()) {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out.push_back(load_test(f));
        if (out.empty()) throw InputError("no SEAT files in " + dir.string());
    } else {
        for (const auto& n : names) {
            const auto p = dir / (n + ".json");
            if (!std::filesystem::exists(p)) throw InputError("SEAT test \"" + n + "\" not found in " + dir.string());
            out.push_back(load_test(p));
        }
    }
    return out;
}

inline nlohmann::json to_json(const EffectSizeResult& r) {
    return {{"test", r.test_name}, {"d", r.d}, {"p_value", r.p_value}, {"n_permutations", r.n_permutations}, {"exact", r.exact}};
}

inline nlohmann::json to_json(std::span<const EffectSizeResult> results) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& r : results) tests.push_back(to_json(r));
    return {{"tests", tests}, {"avg_abs_d", avg_seat(results)}, {"std_convention", "sample (n-1)"}};
}

} // namespace mlbias::seat
