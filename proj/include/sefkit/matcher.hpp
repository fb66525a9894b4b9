#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sefkit/core.hpp"
#include "sefkit/textnorm.hpp"

namespace sefkit::matcher {

enum class Role : std::uint8_t { subject = 0, object = 1 };

// Multi-pattern matcher over normalized token sequences (Aho-Corasick with
// token ids as the alphabet). Patterns are the distinct normalized alias
// sequences of the catalog; each carries the (fact, role) postings of every
// alias that normalizes to it. Immutable after build; share freely across
// workers, each worker bringing its own MatchScratch.
class AliasAutomaton {
public:
    struct Posting {
        std::uint32_t fact = 0;
        Role role = Role::subject;
    };

    static AliasAutomaton build(const std::vector<FactEntry>& catalog,
                                const textnorm::Normalizer& norm);

    std::size_t pattern_count() const { return pattern_postings_.size(); }
    std::size_t fact_count() const { return fact_ids_.size(); }
    const std::string& fact_id(std::uint32_t index) const { return fact_ids_[index]; }
    const std::vector<std::string>& fact_ids() const { return fact_ids_; }

    // Facts whose subject and object both occur in `tokens` as contiguous
    // subsequences; ascending fact indices, each fact at most once.
    void match(const std::vector<std::string>& tokens, struct MatchScratch& scratch,
               std::vector<std::uint32_t>& out) const;

private:
    struct Node {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // token id -> node, sorted
        std::uint32_t fail = 0;
        std::uint32_t report = 0;       // nearest output node on the fail chain (0 = none)
        std::int32_t pattern = -1;      // pattern ending here, -1 = none
    };

    struct TokenHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::uint32_t lookup_token(std::string_view token) const;
    std::uint32_t child(std::uint32_t node, std::uint32_t token) const;

    std::unordered_map<std::string, std::uint32_t, TokenHash, std::equal_to<>> token_ids_;
    std::vector<Node> nodes_;
    std::vector<std::vector<Posting>> pattern_postings_;
    std::vector<std::string> fact_ids_;
};

// Per-worker reusable buffers for AliasAutomaton::match.
struct MatchScratch {
    std::vector<std::uint32_t> seen_generation;  // per fact, 2 role bits live elsewhere
    std::vector<std::uint8_t> role_bits;
    std::uint32_t generation = 0;
    std::vector<std::uint32_t> hits;
};

// ---------------------------------------------------------------------------
// Corpus input
// ---------------------------------------------------------------------------

// An ordered list of documents. Directory corpora hold one plain-text file
// per document; jsonl corpora hold one {"text": ...} record per line.
// Documents are re-read on demand so workers can stream independently.
class Corpus {
public:
    static Corpus from_directory(const std::string& dir);  // *.txt, sorted by name
    static Corpus from_jsonl(const std::string& path);
    static Corpus from_memory(std::vector<std::pair<std::string, std::string>> docs);
    // Dispatches on the path: directory -> from_directory, file -> from_jsonl.
    static Corpus open(const std::string& path);

    std::size_t size() const { return docs_.size(); }
    const std::string& doc_id(std::size_t i) const { return docs_[i].id; }
    std::vector<std::string> doc_ids() const;

    // Throws ValidationError when the document cannot be read.
    std::string read_document(std::size_t i) const;

private:
    struct DocRef {
        std::string id;
        std::string path;          // empty for in-memory docs
        std::size_t offset = 0;    // jsonl byte offset
        std::size_t length = 0;    // jsonl record length; 0 = whole file
        std::size_t memory_index = static_cast<std::size_t>(-1);
        bool jsonl = false;
    };

    std::vector<DocRef> docs_;
    std::vector<std::string> memory_;
};

// Contiguous partition of the corpus documents into training slices.
// slice_of(i) is non-decreasing in i and covers every document.
struct SliceManifest {
    std::vector<std::size_t> begin_doc;  // begin_doc[s] = first doc of slice s
    std::size_t doc_count = 0;

    std::size_t slice_count() const { return begin_doc.size(); }
    std::size_t slice_of(std::size_t doc) const;

    // Evenly sized contiguous slices; slice s gets [floor(s*n/k), floor((s+1)*n/k)).
    static SliceManifest even(std::size_t doc_count, std::size_t slice_count);

    void validate(std::size_t corpus_docs) const;
};

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

struct SkipEntry {
    std::string doc_id;
    std::string reason;
};

struct CountResult {
    FrequencyTable table;
    std::vector<SkipEntry> skipped;
    std::size_t documents = 0;
    std::size_t sentences = 0;
};

// Counts, per fact, the sentences containing at least one subject alias and
// at least one object alias. A sentence contributes at most 1 per fact.
// Unreadable documents are skipped and reported; when more than 1% of the
// corpus is skipped the run fails with ValidationError. `workers` <= 0
// selects the OpenMP default. Counts are integers merged by summation, so
// the result is identical for every worker count.
CountResult count_corpus(const AliasAutomaton& automaton, const Corpus& corpus,
                         const textnorm::Normalizer& norm,
                         const SliceManifest* manifest = nullptr, int workers = 0);

// Single-threaded reference implementation kept for tests and benchmarks;
// must produce results identical to count_corpus.
CountResult count_corpus_serial(const AliasAutomaton& automaton, const Corpus& corpus,
                                const textnorm::Normalizer& norm,
                                const SliceManifest* manifest = nullptr);

// Per-fact sums of slices 0..=upto. Requires slice data.
FrequencyTable cumulative_counts(const FrequencyTable& table, std::size_t upto);

}  // namespace sefkit::matcher
