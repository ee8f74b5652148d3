#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "mlbias/backend/toy.hpp"
#include "mlbias/seat.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mlbias;
using testing_support::TempDir;

namespace {

seat::EmbeddedTest random_test(std::mt19937_64& gen, std::size_t n, std::size_t n_attr, std::size_t dim) {
    std::normal_distribution<double> nd(0.0, 1.0);
    auto vec = [&] {
        seat::Vector v(dim);
        for (auto& x : v) x = nd(gen);
        return v;
    };
    seat::EmbeddedTest t;
    t.name = "random";
    for (std::size_t i = 0; i < n; ++i) t.x.push_back(vec());
    for (std::size_t i = 0; i < n; ++i) t.y.push_back(vec());
    for (std::size_t i = 0; i < n_attr; ++i) t.a.push_back(vec());
    for (std::size_t i = 0; i < n_attr; ++i) t.b.push_back(vec());
    return t;
}

} // namespace

TEST(Seat, EffectSizeMatchesBruteForceOracle) {
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + gen() % 3, dim = 2 + gen() % 7;
        const auto t = random_test(gen, n, 1 + gen() % 4, dim);
        EXPECT_NEAR(seat::effect_size(t), oracle::effect_size(t.x, t.y, t.a, t.b), 1e-10);
    }
}

TEST(Seat, ExactPValueMatchesEnumeration) {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 200; ++rep) {
        const auto t = random_test(gen, 2 + gen() % 3, 3, 5);
        const auto s = seat::associations(t);
        const auto p = seat::permutation_pvalue(s.sx, s.sy, 1000, 1, seat::PermutationMode::exact);
        const auto [count, total] = oracle::enumerate_permutations(s.sx, s.sy);
        EXPECT_TRUE(p.exact);
        EXPECT_EQ(p.n_permutations, total);
        EXPECT_EQ(p.p, static_cast<double>(count) / static_cast<double>(total));
    }
}

TEST(Seat, SwappingTargetsOrAttributesNegatesD) {
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 50; ++rep) {
        auto t = random_test(gen, 4, 3, 8);
        const double d = seat::effect_size(t);
        auto swapped_xy = t;
        std::swap(swapped_xy.x, swapped_xy.y);
        auto swapped_ab = t;
        std::swap(swapped_ab.a, swapped_ab.b);
        EXPECT_NEAR(seat::effect_size(swapped_xy), -d, 1e-12);
        EXPECT_NEAR(seat::effect_size(swapped_ab), -d, 1e-12);
    }
}

TEST(Seat, ScalingEmbeddingsLeavesDUnchanged) {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 50; ++rep) {
        auto t = random_test(gen, 4, 3, 8);
        const double d = seat::effect_size(t);
        for (auto* set : {&t.x, &t.y, &t.a, &t.b})
            for (auto& v : *set)
                for (auto& x : v) x *= 3.7;
        EXPECT_NEAR(seat::effect_size(t), d, 1e-12);
    }
}

TEST(Seat, SampledPValueApproximatesExact) {
    std::mt19937_64 gen(21);
    for (int rep = 0; rep < 20; ++rep) {
        const auto t = random_test(gen, 4, 3, 6);
        const auto s = seat::associations(t);
        const auto exact = seat::permutation_pvalue(s.sx, s.sy, 10'000, 42, seat::PermutationMode::exact);
        const auto sampled = seat::permutation_pvalue(s.sx, s.sy, 10'000, 42, seat::PermutationMode::sampled);
        EXPECT_FALSE(sampled.exact);
        EXPECT_LE(std::abs(sampled.p - exact.p), 0.02);
    }
}

TEST(Seat, SampledPValueIsSeedDeterministic) {
    std::mt19937_64 gen(2);
    const auto t = random_test(gen, 4, 3, 6);
    const auto s = seat::associations(t);
    const auto a = seat::permutation_pvalue(s.sx, s.sy, 5000, 9, seat::PermutationMode::sampled);
    const auto b = seat::permutation_pvalue(s.sx, s.sy, 5000, 9, seat::PermutationMode::sampled);
    EXPECT_EQ(a.p, b.p);
    EXPECT_GT(a.p, 0.0);
}

TEST(Seat, AutomaticModeSwitchesToSamplingAboveLimit) {
    std::mt19937_64 gen(4);
    const auto small = random_test(gen, 8, 2, 4);  // C(16, 8) = 12870
    const auto big = random_test(gen, 9, 2, 4);    // C(18, 9) = 48620
    const auto ss = seat::associations(small);
    const auto sb = seat::associations(big);
    EXPECT_TRUE(seat::permutation_pvalue(ss.sx, ss.sy, 1000, 1).exact);
    const auto pb = seat::permutation_pvalue(sb.sx, sb.sy, 1000, 1);
    EXPECT_FALSE(pb.exact);
    EXPECT_EQ(pb.n_permutations, 1000u);
}

TEST(Seat, PerfectSeparationGivesMinimalExactP) {
    // sx all above sy: only the observed partition reaches the statistic
    const std::vector<double> sx = {0.9, 0.8, 0.85}, sy = {0.1, 0.2, 0.15};
    const auto p = seat::permutation_pvalue(sx, sy, 1000, 1);
    EXPECT_TRUE(p.exact);
    EXPECT_DOUBLE_EQ(p.p, 1.0 / 20.0);
}

TEST(Seat, DegenerateVarianceIsRejected) {
    const std::vector<double> same = {0.5, 0.5};
    EXPECT_THROW(seat::effect_size(same, same), DegenerateError);
    seat::EmbeddedTest t;
    t.x = {{1, 0}, {1, 0}};
    t.y = {{1, 0}, {1, 0}};
    t.a = {{0, 1}};
    t.b = {{1, 1}};
    EXPECT_THROW(seat::effect_size(t), DegenerateError);
}

TEST(Seat, InputValidation) {
    seat::AssociationTest t{"t", {"a"}, {"b", "c"}, {"d"}, {"e"}};
    EXPECT_THROW(t.validate(), InputError);
    const std::vector<double> a = {1.0, 2.0}, b = {1.0};
    EXPECT_THROW(seat::permutation_pvalue(a, b, 1000, 1), InputError);
    EXPECT_THROW(seat::permutation_pvalue(a, a, 10, 1), InputError);
    EXPECT_THROW(seat::cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}), InputError);
}

TEST(Seat, AvgSeatIsMeanAbsoluteD) {
    std::vector<seat::EffectSizeResult> rs(3);
    rs[0].d = 0.5;
    rs[1].d = -0.3;
    rs[2].d = 0.1;
    EXPECT_NEAR(seat::avg_seat(rs), 0.3, 1e-15);
    EXPECT_THROW(seat::avg_seat(std::span<const seat::EffectSizeResult>{}), InputError);
}

TEST(Seat, ToyBackendEndToEndIsDeterministic) {
    const ToyBackend backend(42, Pooling::mean);
    const auto tests = seat::load_dir(testing_support::repo_data("seat"));
    ASSERT_EQ(tests.size(), 3u);
    for (const auto& t : tests) {
        const auto a = seat::effect_size(t, backend, 1000, 42, 4);
        const auto b = seat::effect_size(t, backend, 1000, 42, 1);
        EXPECT_EQ(a.d, b.d);
        EXPECT_EQ(a.p_value, b.p_value);
        EXPECT_GE(a.p_value, 0.0);
        EXPECT_LE(a.p_value, 1.0);
    }
}

TEST(Seat, LoadRejectsMissingGroupsAndUnknownNames) {
    TempDir dir;
    testing_support::write_file(dir / "broken.json", R"({"targ1": {"examples": ["a"]}})");
    EXPECT_THROW(seat::load_test(dir / "broken.json"), InputError);
    EXPECT_THROW(seat::load_dir(testing_support::repo_data("seat"), {"no-such-test"}), InputError);
    const auto one = seat::load_dir(testing_support::repo_data("seat"), {"sent-weat7"});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].name, "sent-weat7");
}

TEST(Seat, JsonStatesStdConvention) {
    std::vector<seat::EffectSizeResult> rs(1);
    rs[0].test_name = "x";
    rs[0].d = -0.25;
    const auto j = seat::to_json(rs);
    EXPECT_EQ(j["std_convention"], "sample (n-1)");
    EXPECT_DOUBLE_EQ(j["avg_abs_d"].get<double>(), 0.25);
}
