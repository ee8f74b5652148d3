#include <gtest/gtest.h>

#include <map>
#include <random>

#include "mlbias/cda.hpp"
#include "mlbias/unicode.hpp"
#include "support.hpp"

using namespace mlbias;
using testing_support::read_file;
using testing_support::read_lines;
using testing_support::TempDir;
using testing_support::test_data;

namespace {

cda::GenderWordlist small_list() {
    return cda::GenderWordlist::from_pairs({{"hu", "hi"}, {"tabib", "tabiba"}, {"raġel", "mara"}, {"he", "she"}});
}

// Letters-only word for an index: a, b, ..., z, ba, bb, ...
std::string word_for(std::size_t i, const std::string& prefix) {
    std::string s;
    do {
        s.insert(s.begin(), static_cast<char>('a' + i % 26));
        i /= 26;
    } while (i);
    return prefix + s;
}

} // namespace

TEST(Cda, SwapsWholeWordsWithCase) {
    const auto wl = small_list();
    auto r = cda::swap_sentence("Hu tabib.", wl);
    EXPECT_EQ(r.swapped, "Hi tabiba.");
    EXPECT_TRUE(r.changed);
    EXPECT_EQ(cda::swap_sentence("HU TABIB!", wl).swapped, "HI TABIBA!");
    EXPECT_EQ(cda::swap_sentence("Ir-Raġel", wl).swapped, "Ir-Mara");
    // agreement is not repaired
    EXPECT_EQ(cda::swap_sentence("Il-karozza hi ħamra.", wl).swapped, "Il-karozza hu ħamra.");
    // substrings do not match
    r = cda::swap_sentence("huma theme shed", wl);
    EXPECT_EQ(r.swapped, "huma theme shed");
    EXPECT_FALSE(r.changed);
    // apostrophe is a boundary
    EXPECT_EQ(cda::swap_sentence("he's", wl).swapped, "she's");
    EXPECT_EQ(cda::swap_sentence("Hu tabib.", wl, false).swapped, "hi tabiba.");
}

TEST(Cda, MixedCaseTransfersFirstLetterOnly) {
    const auto wl = small_list();
    EXPECT_EQ(cda::swap_sentence("TaBiB", wl).swapped, "Tabiba");
    EXPECT_EQ(cda::swap_sentence("tABIB", wl).swapped, "tabiba");
}

TEST(Cda, InvolutionOnGeneratedSentences) {
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"hu", "hi"}, {"tabib", "tabiba"}, {"raġel", "mara"}, {"missier", "omm"}, {"iben", "bint"},
        {"ħu", "oħt"}, {"żiju", "żija"}, {"he", "she"}, {"him", "her"}, {"king", "queen"}};
    const auto wl = cda::GenderWordlist::from_pairs(pairs);
    const std::vector<std::string> fillers = {"il-", "kien", "ta'", "ħafna", "dar", "the", "is", "a", "Ġunju", "2024"};
    const std::vector<std::string> punct = {" ", " ", " ", ", ", "; ", " - "};
    std::mt19937_64 gen(99);
    int changed = 0;
    for (int s = 0; s < 1000; ++s) {
        std::string sentence;
        const std::size_t n = 1 + gen() % 10;
        for (std::size_t k = 0; k < n; ++k) {
            std::string w;
            if (gen() % 2) {
                const auto& p = pairs[gen() % pairs.size()];
                w = gen() % 2 ? p.first : p.second;
                switch (gen() % 3) {
                case 0: break;
                case 1: w = unicode::capitalize_first(w); break;
                case 2: w = unicode::to_upper(w); break;
                }
            } else {
                w = fillers[gen() % fillers.size()];
            }
            if (k) sentence += punct[gen() % punct.size()];
            sentence += w;
        }
        sentence += ".";
        const auto once = cda::swap_sentence(sentence, wl);
        const auto twice = cda::swap_sentence(once.swapped, wl);
        ASSERT_EQ(twice.swapped, sentence) << "via \"" << once.swapped << "\"";
        EXPECT_EQ(once.changed, twice.changed);
        changed += once.changed;
    }
    EXPECT_GT(changed, 500);
}

TEST(Cda, TenLineCorpusCounts) {
    TempDir dir;
    const auto wl = cda::load_wordlist(test_data("cda_wordlist.tsv"));
    cda::CdaConfig two;
    const auto s2 = cda::augment_corpus(test_data("cda_corpus10.txt"), wl, two, dir / "two.txt");
    EXPECT_EQ(s2.n_input, 10u);
    EXPECT_EQ(s2.n_swapped, 4u);
    EXPECT_DOUBLE_EQ(s2.swap_fraction, 0.4);
    EXPECT_EQ(s2.n_output, 14u);
    const auto lines = read_lines(dir / "two.txt");
    ASSERT_EQ(lines.size(), 14u);
    const auto originals = read_lines(test_data("cda_corpus10.txt"));
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(lines[i], originals[i]);  // unshuffled: originals first
    EXPECT_EQ(lines[10], "Hi tabiba fl-isptar.");
    EXPECT_EQ(lines[11], "IL-RAĠEL KIENET AVUKAT.");
    EXPECT_EQ(read_lines(cda::swaps_path(dir / "two.txt")).size(), 4u);

    cda::CdaConfig one;
    one.mode = cda::Mode::one_sided;
    const auto s1 = cda::augment_corpus(test_data("cda_corpus10.txt"), wl, one, dir / "one.txt");
    EXPECT_EQ(s1.n_output, 10u);
    const auto l1 = read_lines(dir / "one.txt");
    EXPECT_EQ(l1[0], "Hi tabiba fl-isptar.");
    EXPECT_EQ(l1[1], originals[1]);
    const auto side = read_lines(cda::swaps_path(dir / "one.txt"));
    ASSERT_EQ(side.size(), 4u);
    const auto first = nlohmann::json::parse(side[0]);
    EXPECT_EQ(first["original"], originals[0]);
    EXPECT_EQ(first["swapped"], "Hi tabiba fl-isptar.");
    EXPECT_EQ(first["line"], 1);
}

TEST(Cda, SameSeedShuffleIsByteIdentical) {
    TempDir dir;
    const auto wl = cda::load_wordlist(test_data("cda_wordlist.tsv"));
    cda::CdaConfig cfg;
    cfg.shuffle_seed = 13;
    cda::augment_corpus(test_data("cda_corpus10.txt"), wl, cfg, dir / "a.txt");
    cda::augment_corpus(test_data("cda_corpus10.txt"), wl, cfg, dir / "b.txt");
    EXPECT_EQ(read_file(dir / "a.txt"), read_file(dir / "b.txt"));
    EXPECT_EQ(read_file(cda::swaps_path(dir / "a.txt")), read_file(cda::swaps_path(dir / "b.txt")));
    cfg.shuffle_seed = 14;
    cda::augment_corpus(test_data("cda_corpus10.txt"), wl, cfg, dir / "c.txt");
    EXPECT_NE(read_file(dir / "a.txt"), read_file(dir / "c.txt"));
    // shuffling permutes, never drops lines
    auto a = read_lines(dir / "a.txt"), c = read_lines(dir / "c.txt");
    std::sort(a.begin(), a.end());
    std::sort(c.begin(), c.end());
    EXPECT_EQ(a, c);
}

TEST(Cda, SidecarLinesPointAtSwappedOutput) {
    TempDir dir;
    const auto wl = cda::load_wordlist(test_data("cda_wordlist.tsv"));
    cda::CdaConfig cfg;
    cfg.shuffle_seed = 5;
    cda::augment_corpus(test_data("cda_corpus10.txt"), wl, cfg, dir / "out.txt");
    const auto out = read_lines(dir / "out.txt");
    for (const auto& line : read_lines(cda::swaps_path(dir / "out.txt"))) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(out.at(j["line"].get<std::size_t>() - 1), j["swapped"].get<std::string>());
        EXPECT_EQ(cda::swap_sentence(j["original"].get<std::string>(), wl).swapped, j["swapped"].get<std::string>());
    }
}

TEST(Cda, TwoSidedOutputIsGenderBalanced) {
    TempDir dir;
    const auto wl = cda::load_wordlist(test_data("cda_wordlist.tsv"));
    cda::augment_corpus(test_data("cda_corpus10.txt"), wl, {}, dir / "out.txt");
    std::map<std::string, int> count;
    for (const auto& line : read_lines(dir / "out.txt")) {
        std::string word;
        for (UChar32 c : unicode::code_points(line + " ")) {
            if (unicode::is_word_char(c)) {
                unicode::append_utf8(word, c);
            } else if (!word.empty()) {
                if (wl.counterpart(word)) ++count[cda::GenderWordlist::key(word)];
                word.clear();
            }
        }
    }
    for (const auto& [m, f] : wl.pairs()) EXPECT_EQ(count[m], count[f]) << m << "/" << f;
}

TEST(Cda, WordlistOf193Rows) {
    TempDir dir;
    std::string tsv = "# generated\n";
    for (std::size_t i = 0; i < 193; ++i) tsv += word_for(i, "ma") + "\t" + word_for(i, "fe") + "\n";
    testing_support::write_file(dir / "wl.tsv", tsv);
    EXPECT_EQ(cda::load_wordlist(dir / "wl.tsv").size(), 193u);
}

TEST(Cda, DuplicateSideFailsWithLineNumber) {
    try {
        cda::load_wordlist(test_data("tfajla_wordlist.tsv"));
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("duplicate female-side entry \"tfajla\""), std::string::npos) << msg;
    }
}

TEST(Cda, WordlistRejectsBadEntries) {
    using P = std::vector<std::pair<std::string, std::string>>;
    EXPECT_THROW(cda::GenderWordlist::from_pairs(P{{"il-raġel", "il-mara"}}), InputError);
    EXPECT_THROW(cda::GenderWordlist::from_pairs(P{{"same", "Same"}}), InputError);
    EXPECT_THROW(cda::GenderWordlist::from_pairs(P{{"a", "b"}, {"a", "c"}}), InputError);
    EXPECT_THROW(cda::GenderWordlist::from_pairs(P{{"a", "b"}, {"b", "c"}}), InputError);
    EXPECT_THROW(cda::GenderWordlist::from_pairs(P{}), InputError);
    TempDir dir;
    testing_support::write_file(dir / "empty.tsv", "# nothing\n\n");
    EXPECT_THROW(cda::load_wordlist(dir / "empty.tsv"), InputError);
    testing_support::write_file(dir / "cols.tsv", "a\tb\tc\n");
    EXPECT_THROW(cda::load_wordlist(dir / "cols.tsv"), InputError);
}

TEST(Cda, AuditSampleIsSeededAndBounded) {
    TempDir dir;
    const auto wl = cda::load_wordlist(test_data("cda_wordlist.tsv"));
    cda::augment_corpus(test_data("cda_corpus10.txt"), wl, {}, dir / "out.txt");
    EXPECT_EQ(cda::audit_sample(dir / "out.txt", 3, 7, dir / "a.tsv"), 3u);
    cda::audit_sample(dir / "out.txt", 3, 7, dir / "b.tsv");
    EXPECT_EQ(read_file(dir / "a.tsv"), read_file(dir / "b.tsv"));
    const auto rows = read_lines(dir / "a.tsv");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], "id\tline\toriginal\tswapped\tverdict");
    EXPECT_EQ(rows[1].back(), '\t');  // blank verdict column
    EXPECT_THROW(cda::audit_sample(dir / "out.txt", 0, 7, dir / "c.tsv"), InputError);
    EXPECT_THROW(cda::audit_sample(dir / "out.txt", 5, 7, dir / "c.tsv"), InputError);
    EXPECT_EQ(cda::audit_sample(dir / "out.txt", 4, 1, dir / "all.tsv"), 4u);
}

TEST(Cda, UnreadableCorpus) {
    TempDir dir;
    EXPECT_THROW(cda::augment_corpus(dir / "missing.txt", small_list(), {}, dir / "out.txt"), InputError);
}
