#pragma once

#include <array>
#include <string_view>

namespace mlbias::toy {

// Default mask vocabulary of the toy model: punctuation, Maltese and English
// function words, gendered nouns, occupations and adjectives.
inline constexpr std::array<std::string_view, 256> default_vocab = {
    // punctuation
    ".", ",", "!", "?", "-", "'", ":", ";",
    // Maltese function words
    "hu", "hi", "huwa", "hija", "huma", "jien", "int", "aħna", "intom", "il",
    "l", "is", "it", "ta", "tal", "tat", "fil", "fl", "mal", "għal",
    "għall", "minn", "ma", "mhux", "u", "jew", "imma", "li", "dan", "din",
    "dawn", "kien", "kienet", "kienu", "qatt", "dejjem", "ħafna", "wisq", "bħala", "biex",
    "meta", "fejn", "kif", "għaliex", "x", "ukoll", "biss", "anke", "se", "qed",
    // Maltese verbs
    "jaħdem", "taħdem", "jħobb", "tħobb", "jgħix", "tgħix", "jmur", "tmur", "jagħmel", "tagħmel",
    "jista", "tista", "irid", "trid", "jaf", "taf", "kellu", "kellha", "sar", "saret",
    // pronominal suffixes and subword continuations
    "ha", "hom", "ni", "k", "##ha", "##hom", "##ni", "##k",
    // Maltese occupations
    "tabib", "tabiba", "għalliem", "għalliema", "avukat", "avukata", "infermier", "infermiera", "maxtrudaxxa", "sagristan",
    "sajjied", "kok", "pijunier", "pijuniera", "segretarju", "segretarja", "missjunarju", "missjunarja", "attur", "attriċi",
    "skrivan", "messaġġier", "inġinier", "inġiniera", "xjenzjat", "xjenzjata", "kittieb", "kittieba", "bennej", "ħaddiem",
    "ħaddiema", "kaxxier", "kaxxiera", "spiżjar", "spiżjara", "pulizija", "surmast", "ħajjata", "indannatur", "barbier",
    // Maltese gendered nouns
    "raġel", "mara", "irġiel", "nisa", "tifel", "tifla", "subien", "bniet", "missier", "omm",
    "ħu", "oħt", "iben", "bint", "nannu", "nanna", "ziju", "zija", "żewġ", "mart",
    "re", "reġina", "sinjur", "sinjura",
    // names
    "ġanni", "ġovanna", "john", "jane", "pawlu", "marija", "ġorġ", "rita",
    // Maltese adjectives
    "kompetenti", "inkompetenti", "professjonali", "intelliġenti", "soċjali", "sensittiv", "sensittiva", "ikrah", "kerha", "kattiv",
    "kattiva", "sabiħ", "sabiħa", "qawwi", "qawwija", "dgħajjef", "dgħajfa", "ħanin", "ħanina", "bravu",
    // Maltese career / family nouns
    "karriera", "negozju", "salarju", "uffiċċju", "professjoni", "kumpanija", "familja", "tfal", "żwieġ", "dar",
    "qraba", "xogħol", "flus", "maniġment", "kċina", "ġenituri",
    // English
    "the", "a", "an", "he", "she", "him", "her", "his", "hers", "they",
    "were", "was", "are", "works", "as", "never", "liked", "likes", "this", "that",
    "man", "woman", "men", "women", "boy", "girl", "father", "mother", "son", "daughter",
    "brother", "sister", "doctor", "nurse", "teacher", "lawyer", "engineer", "secretary", "carpenter", "pilot",
    "scientist", "actor", "actress", "career", "family", "salary", "office", "business", "home", "children",
    "marriage", "wedding", "math", "art", "science", "poetry", "competent", "incompetent", "kind", "strong",
    "good", "poor",
};

} // namespace mlbias::toy
