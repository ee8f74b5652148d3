#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mlbias/error.hpp"
#include "mlbias/random.hpp"
#include "mlbias/unicode.hpp"

namespace mlbias::cda {

namespace fs = std::filesystem;

/// Bidirectional male <-> female word mapping. Keys are NFC lowercase.
class GenderWordlist {
public:
    GenderWordlist() = default;

    /// Builds the list, rejecting repeated words, self-pairs and multi-word entries.
    /// `lines` gives the source line of each pair for error messages (optional).
    static GenderWordlist from_pairs(std::vector<std::pair<std::string, std::string>> pairs, std::string language = {},
                                     const std::vector<std::size_t>& lines = {}) {
        GenderWordlist wl;
        wl.language_ = std::move(language);
        std::unordered_map<std::string, std::size_t> male_seen, female_seen;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const std::string where = lines.empty() ? "pair " + std::to_string(i + 1) : "line " + std::to_string(lines[i]);
            const std::string m = key(pairs[i].first), f = key(pairs[i].second);
            if (m.empty() || f.empty()) throw InputError(where + ": empty word");
            if (!single_word(m) || !single_word(f))
                throw InputError(where + ": multi-word entry \"" + pairs[i].first + "\" / \"" + pairs[i].second + "\"");
            if (m == f) throw InputError(where + ": male and female forms are identical (\"" + m + "\")");
            if (male_seen.count(m)) throw InputError(where + ": duplicate male-side entry \"" + m + "\"");
            if (female_seen.count(f)) throw InputError(where + ": duplicate female-side entry \"" + f + "\"");
            if (female_seen.count(m) || male_seen.count(f))
                throw InputError(where + ": word appears on both sides (\"" + (female_seen.count(m) ? m : f) + "\")");
            male_seen.emplace(m, i);
            female_seen.emplace(f, i);
            wl.lookup_.emplace(m, f);
            wl.lookup_.emplace(f, m);
            wl.pairs_.emplace_back(m, f);
        }
        if (wl.pairs_.empty()) throw InputError("wordlist is empty");
        return wl;
    }

    const std::vector<std::pair<std::string, std::string>>& pairs() const noexcept { return pairs_; }
    const std::string& language() const noexcept { return language_; }
    std::size_t size() const noexcept { return pairs_.size(); }

    /// Counterpart of a word in either direction (case-insensitive).
    std::optional<std::string> counterpart(std::string_view word) const {
        const auto it = lookup_.find(key(word));
        if (it == lookup_.end()) return std::nullopt;
        return it->second;
    }

    static std::string key(std::string_view w) { return unicode::to_lower(unicode::nfc(w)); }

private:
    static bool single_word(std::string_view w) {
        for (UChar32 c : unicode::code_points(w))
            if (!unicode::is_word_char(c)) return false;
        return true;
    }

    std::vector<std::pair<std::string, std::string>> pairs_;
    std::unordered_map<std::string, std::string> lookup_;
    std::string language_;
};

/// Reads a two-column (male <TAB> female) UTF-8 file. Blank lines and lines
/// starting with '#' are ignored.
inline GenderWordlist load_wordlist(const fs::path& path, std::string language = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open wordlist " + path.string());
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::size_t> lines;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (unicode::trim(line).empty() || line.starts_with("#")) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(no) + ": expected two tab-separated columns");
        pairs.emplace_back(unicode::trim(line.substr(0, tab)), unicode::trim(line.substr(tab + 1)));
        lines.push_back(no);
    }
    if (pairs.empty()) throw InputError("wordlist " + path.string() + " is empty");
    try {
        return GenderWordlist::from_pairs(std::move(pairs), std::move(language), lines);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

struct SwapResult {
    std::string swapped;
    bool changed = false;
};

/// Replaces every whole-word wordlist match by its counterpart. Words are
/// maximal runs of letters, marks and digits, so hyphens and apostrophes
/// separate words. Grammatical agreement is not repaired.
inline SwapResult swap_sentence(std::string_view sentence, const GenderWordlist& wl, bool preserve_case = true) {
    SwapResult r;
    r.swapped.reserve(sentence.size());
    const auto* p = reinterpret_cast<const uint8_t*>(sentence.data());
    const auto n = static_cast<int32_t>(sentence.size());
    int32_t i = 0;
    int32_t word_start = -1;
    auto flush = [&](int32_t end) {
        if (word_start < 0) return;
        const std::string_view word = sentence.substr(static_cast<std::size_t>(word_start),
                                                      static_cast<std::size_t>(end - word_start));
        if (auto other = wl.counterpart(word)) {
            r.swapped += preserve_case ? unicode::transfer_case(word, *other) : *other;
            r.changed = true;
        } else {
            r.swapped += word;
        }
        word_start = -1;
    };
    while (i < n) {
        const int32_t start = i;
        UChar32 c;
        U8_NEXT(p, i, n, c);
        if (c >= 0 && unicode::is_word_char(c)) {
            if (word_start < 0) word_start = start;
        } else {
            flush(start);
            r.swapped.append(sentence.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
        }
    }
    flush(n);
    return r;
}

enum class Mode { one_sided, two_sided };

inline Mode parse_mode(std::string_view s) {
    if (s == "one-sided" || s == "one_sided") return Mode::one_sided;
    if (s == "two-sided" || s == "two_sided") return Mode::two_sided;
    throw InputError("unknown CDA mode \"" + std::string(s) + "\"");
}

struct CdaConfig {
    Mode mode = Mode::two_sided;
    /// Output is shuffled iff a seed is given.
    std::optional<std::uint64_t> shuffle_seed;
    bool preserve_case = true;
};

struct CdaStats {
    std::uint64_t n_input = 0;
    std::uint64_t n_swapped = 0;
    double swap_fraction = 0.0;
    std::uint64_t n_output = 0;
};

inline nlohmann::json to_json(const CdaStats& s) {
    return {{"n_input", s.n_input}, {"n_swapped", s.n_swapped}, {"swap_fraction", s.swap_fraction}, {"n_output", s.n_output}};
}

/// Sidecar listing each swapped sentence with its position in the output.
inline fs::path swaps_path(const fs::path& output) {
    fs::path p = output;
    p += ".swaps.jsonl";
    return p;
}

/// Builds the augmented corpus.
///
/// two_sided: all originals followed by the swapped copies of changed lines;
/// one_sided: changed lines replaced in place. When a seed is set the output
/// order is a seeded permutation of that sequence. Line text is streamed
/// through a staging file; only line offsets are held in memory.
inline CdaStats augment_corpus(const fs::path& corpus, const GenderWordlist& wl, const CdaConfig& config,
                               const fs::path& output) {
    std::ifstream in(corpus, std::ios::binary);
    if (!in) throw InputError("cannot read corpus " + corpus.string());

    fs::path staging = output, tail = output;
    staging += ".staging";
    tail += ".tail";
    std::vector<std::uint64_t> offsets;   // start of each staged line
    std::vector<std::uint64_t> swap_ids;  // staged index of each swapped line
    std::vector<std::uint64_t> swap_src;  // staged index of its original (two-sided)
    CdaStats stats;
    {
        std::ofstream st(staging, std::ios::binary | std::ios::trunc);
        std::ofstream tl(tail, std::ios::binary | std::ios::trunc);
        if (!st || !tl) throw Error("cannot write next to " + output.string());
        std::uint64_t pos = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (unicode::trim(line).empty()) continue;
            ++stats.n_input;
            auto sw = swap_sentence(line, wl, config.preserve_case);
            if (sw.changed) ++stats.n_swapped;
            const std::string& staged = (config.mode == Mode::one_sided && sw.changed) ? sw.swapped : line;
            if (config.mode == Mode::one_sided && sw.changed) swap_ids.push_back(offsets.size());
            offsets.push_back(pos);
            st << staged << '\n';
            pos += staged.size() + 1;
            // two-sided: tail holds the swapped copies; one-sided: the replaced originals
            if (sw.changed) {
                tl << (config.mode == Mode::two_sided ? sw.swapped : line) << '\n';
                swap_src.push_back(offsets.size() - 1);
            }
        }
        if (in.bad()) throw InputError("error reading corpus " + corpus.string());
        tl.close();
        if (config.mode == Mode::two_sided) {
            std::ifstream tin(tail, std::ios::binary);
            std::string tline;
            while (std::getline(tin, tline)) {
                swap_ids.push_back(offsets.size());
                offsets.push_back(pos);
                st << tline << '\n';
                pos += tline.size() + 1;
            }
        }
        if (!st) throw Error("write failed for " + staging.string());
    }

    const std::uint64_t total = offsets.size();
    std::vector<std::uint64_t> perm(total);
    std::iota(perm.begin(), perm.end(), std::uint64_t{0});
    if (config.shuffle_seed) {
        Rng rng(*config.shuffle_seed);
        rng.shuffle(std::span<std::uint64_t>(perm));
    }

    {
        std::ifstream st(staging, std::ios::binary);
        std::ofstream out(output, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + output.string());
        std::string line;
        for (std::uint64_t k = 0; k < total; ++k) {
            st.clear();
            st.seekg(static_cast<std::streamoff>(offsets[perm[k]]));
            std::getline(st, line);
            out << line << '\n';
        }
        if (!out) throw Error("write failed for " + output.string());

        // output position of every staged line, for the audit sidecar
        std::vector<std::uint64_t> where(total);
        for (std::uint64_t k = 0; k < total; ++k) where[perm[k]] = k;
        std::ofstream sw(swaps_path(output), std::ios::binary | std::ios::trunc);
        std::ifstream tin(tail, std::ios::binary);
        std::string original, swapped;
        for (std::size_t s = 0; s < swap_ids.size(); ++s) {
            st.clear();
            st.seekg(static_cast<std::streamoff>(offsets[swap_ids[s]]));
            std::getline(st, swapped);
            if (config.mode == Mode::two_sided) {
                st.clear();
                st.seekg(static_cast<std::streamoff>(offsets[swap_src[s]]));
                std::getline(st, original);
            } else {
                std::getline(tin, original);
            }
            sw << nlohmann::json{{"line", where[swap_ids[s]] + 1}, {"original", original}, {"swapped", swapped}}.dump()
               << '\n';
        }
    }
    fs::remove(staging);
    fs::remove(tail);

    stats.n_output = total;
    stats.swap_fraction = stats.n_input ? static_cast<double>(stats.n_swapped) / static_cast<double>(stats.n_input) : 0.0;
    return stats;
}

/// Draws n swapped sentences uniformly without replacement and writes a TSV
/// annotation sheet (id, output line, original, swapped, blank verdict).
inline std::uint64_t audit_sample(const fs::path& augmented, std::uint64_t n, std::uint64_t seed, const fs::path& sheet) {
    if (n == 0) throw InputError("audit sample size must be positive");
    const auto side = swaps_path(augmented);
    std::ifstream in(side, std::ios::binary);
    if (!in) throw InputError("no swap sidecar next to " + augmented.string() + " (expected " + side.string() + ")");
    std::uint64_t total = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++total;
    if (n > total)
        throw InputError("audit sample of " + std::to_string(n) + " exceeds the " + std::to_string(total) +
                         " swapped sentences");

    std::vector<std::uint64_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::uint64_t{0});
    Rng rng(seed);
    for (std::uint64_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(total - i)]);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());

    in.clear();
    in.seekg(0);
    std::ofstream out(sheet, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + sheet.string());
    auto clean = [](std::string s) {
        std::replace(s.begin(), s.end(), '\t', ' ');
        return s;
    };
    out << "id\tline\toriginal\tswapped\tverdict\n";
    std::uint64_t row = 0, next = 0, id = 0;
    while (next < idx.size() && std::getline(in, line)) {
        if (line.empty()) continue;
        if (row++ != idx[next]) continue;
        ++next;
        const auto j = nlohmann::json::parse(line);
        out << ++id << '\t' << j.at("line").get<std::uint64_t>() << '\t' << clean(j.value("original", std::string()))
            << '\t' << clean(j.at("swapped").get<std::string>()) << "\t\n";
    }
    return id;
}

} // namespace mlbias::cda
