#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "mlbias/error.hpp"

namespace mlbias::unicode {

/// Decodes UTF-8 into code points; ill-formed sequences become U+FFFD.
inline std::vector<UChar32> code_points(std::string_view s) {
    std::vector<UChar32> out;
    out.reserve(s.size());
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const auto n = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < n) {
        UChar32 c;
        U8_NEXT(p, i, n, c);
        out.push_back(c < 0 ? 0xFFFD : c);
    }
    return out;
}

inline void append_utf8(std::string& out, UChar32 c) {
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool error = false;
    U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, c, error);
    if (!error) out.append(buf, static_cast<std::size_t>(len));
}

inline std::string to_utf8(const std::vector<UChar32>& cps) {
    std::string out;
    for (UChar32 c : cps) append_utf8(out, c);
    return out;
}

inline std::string nfc(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString out = norm->normalize(in, status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    std::string result;
    out.toUTF8String(result);
    return result;
}

inline std::string to_lower(std::string_view s) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u.toLower(icu::Locale::getRoot());
    std::string out;
    u.toUTF8String(out);
    return out;
}

inline std::string to_upper(std::string_view s) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u.toUpper(icu::Locale::getRoot());
    std::string out;
    u.toUTF8String(out);
    return out;
}

/// Uppercases (titlecases) the first code point, leaves the rest untouched.
inline std::string capitalize_first(std::string_view s) {
    auto cps = code_points(s);
    if (!cps.empty()) cps[0] = u_totitle(cps[0]);
    return to_utf8(cps);
}

/// Letters (including ħ, ġ, ż, accented vowels), combining marks and digits.
inline bool is_word_char(UChar32 c) {
    return u_hasBinaryProperty(c, UCHAR_ALPHABETIC) || (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0 || u_isdigit(c);
}

inline bool is_space(UChar32 c) { return u_isUWhiteSpace(c); }

inline std::string trim(std::string_view s) {
    auto cps = code_points(s);
    std::size_t b = 0, e = cps.size();
    while (b < e && is_space(cps[b])) ++b;
    while (e > b && is_space(cps[e - 1])) --e;
    return to_utf8(std::vector<UChar32>(cps.begin() + static_cast<std::ptrdiff_t>(b),
                                        cps.begin() + static_cast<std::ptrdiff_t>(e)));
}

/// Casing pattern of a word, as used by case transfer.
enum class CasePattern { lower, capitalized, upper, mixed, uncased };

inline CasePattern case_pattern(std::string_view word) {
    const auto cps = code_points(word);
    int upper = 0, lower = 0;
    bool first_upper = false, first_seen = false;
    bool rest_lower = true;
    for (UChar32 c : cps) {
        const bool up = u_isupper(c) || u_istitle(c);
        const bool lo = u_islower(c);
        if (!up && !lo) continue;
        if (!first_seen) {
            first_seen = true;
            first_upper = up;
        } else if (up) {
            rest_lower = false;
        }
        upper += up;
        lower += lo;
    }
    if (upper == 0 && lower == 0) return CasePattern::uncased;
    if (upper == 0) return CasePattern::lower;
    if (first_upper && rest_lower) return CasePattern::capitalized;
    if (lower == 0) return CasePattern::upper;
    return CasePattern::mixed;
}

/// Applies the casing pattern of `model` to the lowercase word `word`.
/// Mixed-case models transfer only the case of their first letter.
inline std::string transfer_case(std::string_view model, std::string_view word) {
    switch (case_pattern(model)) {
    case CasePattern::lower:
    case CasePattern::uncased:
        return std::string(word);
    case CasePattern::capitalized:
        return capitalize_first(word);
    case CasePattern::upper:
        return to_upper(word);
    case CasePattern::mixed: {
        const auto cps = code_points(model);
        for (UChar32 c : cps) {
            if (u_isupper(c) || u_istitle(c)) return capitalize_first(word);
            if (u_islower(c)) break;
        }
        return std::string(word);
    }
    }
    return std::string(word);
}

} // namespace mlbias::unicode
