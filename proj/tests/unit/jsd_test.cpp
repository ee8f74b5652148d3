#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mlbias/backend/toy.hpp"
#include "mlbias/jsd.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mlbias;

namespace {

// Mask distribution fixed per first token; the rest of the context is ignored.
class ScriptedBackend final : public Backend {
public:
    std::map<std::string, VocabDistribution> by_first;
    VocabDistribution fallback;

    std::string name() const override { return "scripted"; }

protected:
    TokenSequence do_tokenize(std::string_view text) const override { return {toy::tokenize(text), std::string(text)}; }
    SentenceEmbedding do_embed(std::string_view) const override { return SentenceEmbedding({1.0}); }
    VocabDistribution do_mask_logprobs(const MaskedQuery& q) const override {
        const auto it = by_first.find(q.tokens.front());
        return select_entries(it == by_first.end() ? fallback : it->second, q);
    }
    BackendInfo do_info() const override { return {"scripted", 1, 16}; }
};

VocabDistribution dist(std::vector<std::pair<std::string, double>> probs) {
    VocabDistribution d;
    for (auto& [t, p] : probs) d.entries.emplace_back(t, std::log(p));
    d.complete = true;
    d.normalize_order();
    return d;
}

jsd::JsdProbeSpec toy_spec(std::size_t vocab, std::size_t length, std::size_t beam) {
    jsd::JsdProbeSpec s;
    s.attribute_pairs = {{"he", "she"}, {"man", "woman"}, {"raġel", "mara"}};
    const std::vector<std::string> words = {"never", "always", "the", "kien", "qatt", "ħafna", "dejjem", "imma"};
    s.prompt_vocab.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(vocab));
    s.stereotype_targets = {"doctor", "nurse", "teacher", "engineer", "tabib", "infermiera"};
    s.prompt_length = length;
    s.beam_width = beam;
    return s;
}

// Mean JSD of a prompt computed from raw backend distributions with the oracle formula.
double oracle_mean_jsd(const jsd::JsdProbeSpec& spec, const std::vector<std::string>& prompt, const Backend& backend) {
    double total = 0.0;
    for (const auto& [m, f] : spec.attribute_pairs) {
        auto probs = [&](const std::string& attr) {
            MaskedQuery q;
            q.tokens = {attr};
            q.tokens.insert(q.tokens.end(), prompt.begin(), prompt.end());
            q.tokens.push_back("[MASK]");
            q.mask_index = q.tokens.size() - 1;
            const auto d = backend.mask_logprobs(q);
            std::vector<double> out;
            for (const auto& t : spec.stereotype_targets) out.push_back(std::exp(*d.logprob(t)));
            return out;
        };
        total += oracle::jsd(probs(m), probs(f));
    }
    return total / static_cast<double>(spec.attribute_pairs.size());
}

} // namespace

TEST(Jsd, KnownValues) {
    const std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75};
    EXPECT_NEAR(jsd::jsd(p, q), 0.03382, 1e-4);
    EXPECT_NEAR(jsd::jsd(p, q), oracle::jsd(p, q), 1e-12);
    EXPECT_EQ(jsd::jsd(p, p), 0.0);
    const std::vector<double> a = {1.0, 0.0}, b = {0.0, 1.0};
    EXPECT_NEAR(jsd::jsd(a, b), std::numbers::ln2, 1e-12);
}

TEST(Jsd, SymmetricAndBoundedOnRandomPairs) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 2 + gen() % 20;
        std::vector<double> p(n), q(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = gen() % 5 == 0 ? 0.0 : u(gen);
            q[i] = gen() % 5 == 0 ? 0.0 : u(gen);
        }
        p[0] += 0.1;
        q[n - 1] += 0.1;
        const double pq = jsd::jsd(p, q), qp = jsd::jsd(q, p);
        EXPECT_EQ(pq, qp);
        EXPECT_GE(pq, 0.0);
        EXPECT_LE(pq, std::numbers::ln2);
        EXPECT_NEAR(pq, oracle::jsd(p, q), 1e-12);
    }
}

TEST(Jsd, Errors) {
    const std::vector<double> empty, zero = {0.0, 0.0}, one = {1.0, 0.0}, neg = {-1.0, 2.0};
    EXPECT_THROW(jsd::jsd(empty, empty), InputError);
    EXPECT_THROW(jsd::jsd(zero, one), DegenerateError);
    EXPECT_THROW(jsd::jsd(neg, one), InputError);
    const auto d = dist({{"a", 0.5}, {"b", 0.5}});
    EXPECT_THROW(jsd::jsd(d, d, std::vector<std::string>{}), InputError);
    // support entirely outside both distributions
    EXPECT_THROW(jsd::jsd(d, d, std::vector<std::string>{"zzz"}), DegenerateError);
}

TEST(Jsd, RestrictionRenormalizes) {
    const auto p = dist({{"a", 0.1}, {"b", 0.1}, {"c", 0.8}});
    const auto q = dist({{"a", 0.05}, {"b", 0.15}, {"c", 0.8}});
    const std::vector<std::string> support = {"a", "b"};
    const std::vector<double> rp = {0.5, 0.5}, rq = {0.25, 0.75};
    EXPECT_NEAR(jsd::jsd(p, q, support), oracle::jsd(rp, rq), 1e-12);
}

TEST(Jsd, AttributeIndependentBackendGivesZero) {
    ScriptedBackend b;
    b.fallback = dist({{"doctor", 0.3}, {"nurse", 0.2}, {"x", 0.5}});
    jsd::JsdProbeSpec s;
    s.attribute_pairs = {{"he", "she"}, {"man", "woman"}};
    s.stereotype_targets = {"doctor", "nurse"};
    const auto r = jsd::probe_bias(s, std::vector<std::string>{"the"}, b);
    EXPECT_EQ(r.per_pair_jsd, (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(r.mean_jsd, 0.0);
}

TEST(Jsd, DisjointForcedDistributionsReachLn2) {
    ScriptedBackend b;
    b.by_first["he"] = dist({{"doctor", 0.9}, {"x", 0.1}});
    b.by_first["she"] = dist({{"nurse", 0.9}, {"x", 0.1}});
    jsd::JsdProbeSpec s;
    s.attribute_pairs = {{"he", "she"}};
    s.stereotype_targets = {"doctor", "nurse"};
    EXPECT_NEAR(jsd::probe_bias(s, {}, b).mean_jsd, std::numbers::ln2, 1e-12);
}

TEST(Jsd, MultiTokenAttributesAreSkippedWithDiagnostic) {
    const ToyBackend backend(42, Pooling::mean);
    jsd::JsdProbeSpec s;
    s.attribute_pairs = {{"he", "she"}, {"il-missier", "l-omm"}};
    s.stereotype_targets = {"doctor", "nurse"};
    const auto r = jsd::probe_bias(s, {}, backend);
    EXPECT_EQ(r.per_pair_jsd.size(), 1u);
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_NE(r.skipped[0].find("il-missier"), std::string::npos);
    s.attribute_pairs = {{"il-missier", "l-omm"}};
    EXPECT_THROW(jsd::probe_bias(s, {}, backend), DegenerateError);
}

TEST(Jsd, ProbeMatchesOracleOnToyBackend) {
    const ToyBackend backend(42, Pooling::mean);
    const auto spec = toy_spec(5, 2, 5);
    const std::vector<std::string> prompt = {"never", "the"};
    EXPECT_NEAR(jsd::probe_bias(spec, prompt, backend).mean_jsd, oracle_mean_jsd(spec, prompt, backend), 1e-12);
}

TEST(Jsd, BeamSearchEqualsExhaustiveSearch) {
    const ToyBackend backend(42, Pooling::mean);
    for (std::size_t beam : {5u, 25u}) {
        const auto spec = toy_spec(5, 2, beam);
        std::vector<std::pair<double, std::vector<std::string>>> all;
        for (const auto& a : spec.prompt_vocab)
            for (const auto& b : spec.prompt_vocab) all.push_back({oracle_mean_jsd(spec, {a, b}, backend), {a, b}});
        std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });
        const auto found = jsd::search_biased_prompts(spec, backend);
        ASSERT_EQ(found.size(), std::min<std::size_t>(beam, 25));
        for (std::size_t i = 0; i < found.size(); ++i) {
            EXPECT_EQ(found[i].prompt, all[i].second) << "rank " << i;
            EXPECT_NEAR(found[i].mean_jsd, all[i].first, 1e-12);
        }
    }
}

TEST(Jsd, GreedySearchMatchesGreedyOracle) {
    const ToyBackend backend(42, Pooling::mean);
    const auto spec = toy_spec(8, 3, 1);
    std::vector<std::string> prompt;
    for (std::size_t round = 0; round < 3; ++round) {
        double best = -1.0;
        std::string pick;
        for (const auto& w : spec.prompt_vocab) {
            auto c = prompt;
            c.push_back(w);
            const double v = oracle_mean_jsd(spec, c, backend);
            if (v > best || (v == best && w < pick)) {
                best = v;
                pick = w;
            }
        }
        prompt.push_back(pick);
    }
    const auto found = jsd::search_biased_prompts(spec, backend);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_EQ(found[0].prompt, prompt);
}

TEST(Jsd, SearchIsDeterministicAndRanked) {
    const ToyBackend backend(42, Pooling::mean);
    const auto spec = toy_spec(8, 2, 3);
    const auto a = jsd::search_biased_prompts(spec, backend, 4);
    const auto b = jsd::search_biased_prompts(spec, backend, 1);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].prompt, b[i].prompt);
        EXPECT_EQ(a[i].mean_jsd, b[i].mean_jsd);
        EXPECT_EQ(a[i].prompt.size(), 2u);
        if (i) EXPECT_GE(a[i - 1].mean_jsd, a[i].mean_jsd);
    }
}

TEST(Jsd, ZeroLengthPromptAndEmptyVocab) {
    const ToyBackend backend(42, Pooling::mean);
    auto spec = toy_spec(5, 0, 5);
    const auto r = jsd::search_biased_prompts(spec, backend);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(r[0].prompt.empty());
    spec.prompt_length = 1;
    spec.prompt_vocab.clear();
    EXPECT_THROW(jsd::search_biased_prompts(spec, backend), InputError);
    spec = toy_spec(5, 1, 0);
    EXPECT_THROW(jsd::search_biased_prompts(spec, backend), InputError);
}

TEST(Jsd, FullVocabularyMode) {
    const ToyBackend backend(42, Pooling::mean);
    auto spec = toy_spec(5, 1, 2);
    spec.full_vocab = true;
    const auto r = jsd::probe_bias(spec, std::vector<std::string>{"never"}, backend);
    for (double v : r.per_pair_jsd) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, std::numbers::ln2);
    }
}
