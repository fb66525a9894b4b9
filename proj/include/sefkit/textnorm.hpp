#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sefkit::textnorm {

// Byte offsets [begin, end) into the original document.
struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const SentenceSpan&) const = default;
};

struct NormalizedSentence {
    std::vector<std::string> tokens;  // non-empty, lowercase, lemma-normalized
    SentenceSpan span;
};

// Rule-based sentence splitting, tokenization, and normalization. All
// member functions are const and the class holds no mutable state, so one
// instance can be shared across any number of workers.
//
// The rule set is deliberately small:
//   - sentences end at . ! ? followed by whitespace and an uppercase letter
//     or digit, unless the preceding token is a known abbreviation;
//   - tokens are runs of word characters; '-', '.' and apostrophes survive
//     only between two word characters; other punctuation is dropped;
//   - normalization lowercases, composes combining accents (NFC for the
//     Latin repertoire), then applies a lemma exception table and three
//     plural suffix rules. Tokens containing digits are left as is after
//     case folding.
class Normalizer {
public:
    // Bundled data tables (see data/abbreviations.txt, data/lemma_exceptions.txt).
    Normalizer();
    // Override tables, same plain-text formats as the bundled files.
    Normalizer(const std::string& abbreviations_path, const std::string& lemma_path);

    std::vector<SentenceSpan> split_sentences(std::string_view document) const;

    static std::vector<std::string> tokenize(std::string_view sentence);

    std::string normalize(std::string_view token) const;

    // tokenize + normalize; never yields empty tokens.
    std::vector<std::string> normalize_tokens(std::string_view sentence) const;

    // Full pipeline: split, tokenize, normalize. Sentences that normalize
    // to zero tokens are kept with empty token lists so spans still cover
    // the document.
    std::vector<NormalizedSentence> process(std::string_view document) const;

    // "fnv1a64:<hex>" over both data tables; recorded in run manifests.
    const std::string& data_hash() const { return data_hash_; }

private:
    void load_tables(std::string_view abbreviations, std::string_view lemmas);

    std::unordered_set<std::string> abbreviations_;           // lowercase, no trailing '.'
    std::unordered_map<std::string, std::string> lemma_map_;  // lowercase form -> lemma
    std::string data_hash_;
};

// Contents of the bundled data files (embedded at build time).
std::string_view bundled_abbreviations();
std::string_view bundled_lemma_exceptions();

}  // namespace sefkit::textnorm
