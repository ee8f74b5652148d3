#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstring>

#include "mlbias/backend/toy.hpp"
#include "mlbias/viz/proximity.hpp"
#include "mlbias/viz/svg.hpp"
#include "mlbias/viz/tsne.hpp"
#include "mlbias/viz/words.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mlbias;
using namespace mlbias::viz;

namespace {

EmbeddingMatrix blobs_matrix(std::vector<int>* labels = nullptr) {
    auto [pts, lab] = testing_support::three_blobs();
    EmbeddingMatrix m;
    m.rows = Matrix::from_rows(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m.labels.push_back("p" + std::to_string(i));
        m.gender_tags.push_back(GenderTag::adjective);
    }
    if (labels) *labels = lab;
    return m;
}

} // namespace

TEST(Tsne, AffinityInvariants) {
    const auto m = blobs_matrix();
    const auto a = pairwise_affinities(m, 5.0);
    const std::size_t n = m.rows.rows();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(a.p(i, i), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            EXPECT_EQ(a.p(i, j), a.p(j, i));
            EXPECT_GE(a.p(i, j), 0.0);
            total += a.p(i, j);
        }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Tsne, RowEntropiesHitLogPerplexity) {
    const auto m = blobs_matrix();
    std::vector<std::vector<double>> x;
    for (std::size_t i = 0; i < m.rows.rows(); ++i) x.emplace_back(m.rows.row(i).begin(), m.rows.row(i).end());
    for (double perp : {2.0, 5.0, 10.0, 25.0}) {
        const auto a = pairwise_affinities(m, perp);
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_NEAR(oracle::row_entropy(x, i, a.beta[i]), std::log(perp), 1e-5) << "perp " << perp << " row " << i;
            EXPECT_NEAR(a.row_entropy[i], std::log(perp), 1e-5);
        }
    }
}

TEST(Tsne, EquidistantTriangleHasUniformAffinities) {
    EmbeddingMatrix m;
    m.rows = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    m.labels = {"a", "b", "c"};
    m.gender_tags = {GenderTag::male_form, GenderTag::female_form, GenderTag::adjective};
    const auto a = pairwise_affinities(m, 2.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.p(i, j), i == j ? 0.0 : 1.0 / 6.0, 1e-12);
}

TEST(Tsne, ThreeBlobsStaySeparated) {
    std::vector<int> labels;
    const auto m = blobs_matrix(&labels);
    TsneConfig cfg;
    const auto r = tsne(m, cfg);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < m.rows.rows(); ++i) pts.emplace_back(r.coords(i, 0), r.coords(i, 1));
    EXPECT_GE(oracle::knn_purity(pts, labels, 5), 0.9);
    EXPECT_NEAR(r.kl, kl_divergence(pairwise_affinities(m, cfg.perplexity).p, r.coords), 1e-12);
    ASSERT_TRUE(r.kl_after_exaggeration);
    EXPECT_LE(r.kl, *r.kl_after_exaggeration + 1e-9);
}

TEST(Tsne, SameSeedIsByteIdentical) {
    const auto m = blobs_matrix();
    TsneConfig cfg;
    cfg.iterations = 300;
    const auto a = tsne(m, cfg), b = tsne(m, cfg);
    ASSERT_EQ(a.coords.data().size(), b.coords.data().size());
    EXPECT_EQ(std::memcmp(a.coords.data().data(), b.coords.data().data(), a.coords.data().size() * sizeof(double)), 0);
    cfg.seed = 43;
    EXPECT_FALSE(tsne(m, cfg).coords == a.coords);
}

TEST(Tsne, ThirtyPointsRunQuickly) {
    const auto m = blobs_matrix();
    const auto start = std::chrono::steady_clock::now();
    tsne(m, TsneConfig{});
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 30.0);
}

TEST(Tsne, ConfigAndInputValidation) {
    const auto m = blobs_matrix();
    TsneConfig cfg;
    cfg.perplexity = 1.0;
    EXPECT_THROW(tsne(m, cfg), InputError);
    cfg.perplexity = 30.0;  // n - 1 = 29
    EXPECT_THROW(tsne(m, cfg), InputError);
    cfg = {};
    cfg.early_exaggeration_iters = 2000;
    EXPECT_THROW(tsne(m, cfg), InputError);

    EmbeddingMatrix dup;
    dup.rows = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
    dup.labels = {"a", "b", "c"};
    dup.gender_tags.assign(3, GenderTag::adjective);
    EXPECT_THROW(dup.validate(), InputError);
    EmbeddingMatrix two;
    two.rows = Matrix::from_rows({{1, 0}, {0, 1}});
    two.labels = {"a", "b"};
    two.gender_tags.assign(2, GenderTag::adjective);
    EXPECT_THROW(two.validate(), InputError);
    EmbeddingMatrix nan;
    nan.rows = Matrix::from_rows({{1, 0}, {0, NAN}, {2, 2}});
    nan.labels = {"a", "b", "c"};
    nan.gender_tags.assign(3, GenderTag::adjective);
    EXPECT_THROW(nan.validate(), InputError);
}

TEST(Tsne, ProximityReportPicksNearestForms) {
    const auto coords = Matrix::from_rows({{0, 0}, {10, 0}, {1, 0}, {9, 0}, {5, 0}});
    const std::vector<std::string> labels = {"tabib", "tabiba", "kompetenti", "sensittiva", "ugwali"};
    const std::vector<GenderTag> tags = {GenderTag::male_form, GenderTag::female_form, GenderTag::adjective,
                                         GenderTag::adjective, GenderTag::adjective};
    const auto rep = proximity_report(coords, labels, tags);
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_EQ(rep.rows[0].nearer, Nearer::male);
    EXPECT_DOUBLE_EQ(rep.rows[0].ratio, 1.0 / 9.0);
    EXPECT_EQ(rep.rows[1].nearer, Nearer::female);
    EXPECT_EQ(rep.rows[2].nearer, Nearer::tie);
    EXPECT_EQ(rep.male, 1u);
    EXPECT_EQ(rep.female, 1u);
    EXPECT_EQ(rep.ties, 1u);
    const auto j = to_json(rep);
    EXPECT_EQ(j["rows"][0]["male_form"], "tabib");
}

TEST(Tsne, SvgEscapesLabels) {
    const auto coords = Matrix::from_rows({{0, 0}, {1, 1}, {2, 0}});
    const auto svg = render_svg(coords, {"a<b", "ħ&", "x"}, {GenderTag::male_form, GenderTag::female_form, GenderTag::adjective});
    EXPECT_NE(svg.find("viewBox=\"0 0 800 600\""), std::string::npos);
    EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
    EXPECT_NE(svg.find("ħ&amp;"), std::string::npos);
    EXPECT_EQ(svg.find("a<b"), std::string::npos);
}

TEST(Tsne, WordsEmbedInDeclaredOrder) {
    const ToyBackend backend(42, Pooling::mean);
    const auto words = load_words(testing_support::repo_data("words.json"));
    const auto m = embed_words(words, backend);
    ASSERT_EQ(m.labels.size(), 2 * words.pairs.size() + words.adjectives.size());
    EXPECT_EQ(m.labels[0], "tabib");
    EXPECT_EQ(m.gender_tags[1], GenderTag::female_form);
    EXPECT_EQ(m.gender_tags.back(), GenderTag::adjective);
    TsneConfig cfg;
    cfg.iterations = 200;
    const auto r = tsne(m, cfg);
    EXPECT_EQ(proximity_report(r.coords, m.labels, m.gender_tags).rows.size(), words.adjectives.size());
}
