#include "sefkit/matcher.hpp"

#include <omp.h>

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>

#include "sefkit/error.hpp"
#include "sefkit/io.hpp"

namespace sefkit::matcher {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// AliasAutomaton
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kUnknownToken = 0xFFFFFFFFu;
constexpr std::uint32_t kRoot = 0;

}  // namespace

AliasAutomaton AliasAutomaton::build(const std::vector<FactEntry>& catalog,
                                     const textnorm::Normalizer& norm) {
    AliasAutomaton a;
    a.nodes_.push_back(Node{});
    a.fact_ids_.reserve(catalog.size());

    // Trie insertion; identical normalized alias sequences share one
    // pattern node and accumulate postings.
    std::map<std::vector<std::string>, std::vector<Posting>> patterns;
    for (std::uint32_t fact_index = 0; fact_index < catalog.size(); ++fact_index) {
        const FactEntry& fact = catalog[fact_index];
        a.fact_ids_.push_back(fact.fact_id);
        for (const Role role : {Role::subject, Role::object}) {
            const EntityRef& entity = role == Role::subject ? fact.subject : fact.object;
            bool any = false;
            for (const std::string& alias : entity.aliases) {
                std::vector<std::string> tokens = norm.normalize_tokens(alias);
                if (tokens.empty()) {
                    throw ValidationError("alias '" + alias + "' of entity '" + entity.label +
                                          "' (fact '" + fact.fact_id +
                                          "') normalizes to an empty token sequence");
                }
                any = true;
                auto& postings = patterns[std::move(tokens)];
                const Posting p{fact_index, role};
                const bool dup = std::any_of(
                    postings.begin(), postings.end(),
                    [&](const Posting& q) { return q.fact == p.fact && q.role == p.role; });
                if (!dup) postings.push_back(p);
            }
            if (!any) {
                throw ValidationError("entity '" + entity.label + "' of fact '" + fact.fact_id +
                                      "' has no usable alias");
            }
        }
    }

    // Edges are unsorted during insertion; binary search starts after the
    // sort below, so the build phase walks them linearly.
    const auto find_child = [&a](std::uint32_t node, std::uint32_t token) {
        for (const auto& [t, next] : a.nodes_[node].edges) {
            if (t == token) return next;
        }
        return kUnknownToken;
    };
    for (auto& [tokens, postings] : patterns) {
        std::uint32_t node = kRoot;
        for (const std::string& token : tokens) {
            auto [it, inserted] =
                a.token_ids_.try_emplace(token, static_cast<std::uint32_t>(a.token_ids_.size()));
            const std::uint32_t token_id = it->second;
            std::uint32_t next = find_child(node, token_id);
            if (next == kUnknownToken) {
                next = static_cast<std::uint32_t>(a.nodes_.size());
                a.nodes_[node].edges.emplace_back(token_id, next);
                a.nodes_.push_back(Node{});
            }
            node = next;
        }
        a.nodes_[node].pattern = static_cast<std::int32_t>(a.pattern_postings_.size());
        a.pattern_postings_.push_back(std::move(postings));
    }
    for (Node& node : a.nodes_) {
        std::sort(node.edges.begin(), node.edges.end());
    }

    // Failure links, breadth first; report links skip straight to the
    // nearest suffix node that ends a pattern.
    std::deque<std::uint32_t> queue;
    for (const auto& [token, next] : a.nodes_[kRoot].edges) {
        (void)token;
        a.nodes_[next].fail = kRoot;
        queue.push_back(next);
    }
    while (!queue.empty()) {
        const std::uint32_t u = queue.front();
        queue.pop_front();
        const Node& un = a.nodes_[u];
        a.nodes_[u].report =
            a.nodes_[un.fail].pattern >= 0 ? un.fail : a.nodes_[un.fail].report;
        for (const auto& [token, v] : a.nodes_[u].edges) {
            std::uint32_t f = un.fail;
            std::uint32_t next = a.child(f, token);
            while (next == kUnknownToken && f != kRoot) {
                f = a.nodes_[f].fail;
                next = a.child(f, token);
            }
            a.nodes_[v].fail = next == kUnknownToken || next == v ? kRoot : next;
            queue.push_back(v);
        }
    }
    return a;
}

std::uint32_t AliasAutomaton::lookup_token(std::string_view token) const {
    const auto it = token_ids_.find(token);
    return it == token_ids_.end() ? kUnknownToken : it->second;
}

std::uint32_t AliasAutomaton::child(std::uint32_t node, std::uint32_t token) const {
    const auto& edges = nodes_[node].edges;
    const auto it = std::lower_bound(edges.begin(), edges.end(),
                                     std::make_pair(token, std::uint32_t{0}));
    return it != edges.end() && it->first == token ? it->second : kUnknownToken;
}

void AliasAutomaton::match(const std::vector<std::string>& tokens, MatchScratch& scratch,
                           std::vector<std::uint32_t>& out) const {
    out.clear();
    const std::size_t n_facts = fact_ids_.size();
    if (scratch.seen_generation.size() != n_facts) {
        scratch.seen_generation.assign(n_facts, 0);
        scratch.role_bits.assign(n_facts, 0);
        scratch.generation = 0;
    }
    ++scratch.generation;
    if (scratch.generation == 0) {  // wrapped
        std::fill(scratch.seen_generation.begin(), scratch.seen_generation.end(), 0);
        scratch.generation = 1;
    }

    std::uint32_t state = kRoot;
    for (const std::string& token : tokens) {
        const std::uint32_t token_id = lookup_token(token);
        if (token_id == kUnknownToken) {
            state = kRoot;
            continue;
        }
        std::uint32_t next = child(state, token_id);
        while (next == kUnknownToken && state != kRoot) {
            state = nodes_[state].fail;
            next = child(state, token_id);
        }
        state = next == kUnknownToken ? kRoot : next;

        // Emit every pattern ending at this position via the report chain.
        for (std::uint32_t s = nodes_[state].pattern >= 0 ? state : nodes_[state].report;
             s != kRoot; s = nodes_[s].report) {
            for (const Posting& p : pattern_postings_[static_cast<std::size_t>(
                     nodes_[s].pattern)]) {
                if (scratch.seen_generation[p.fact] != scratch.generation) {
                    scratch.seen_generation[p.fact] = scratch.generation;
                    scratch.role_bits[p.fact] = 0;
                }
                const std::uint8_t bit = p.role == Role::subject ? 1 : 2;
                const std::uint8_t before = scratch.role_bits[p.fact];
                scratch.role_bits[p.fact] = static_cast<std::uint8_t>(before | bit);
                if (before != 3 && scratch.role_bits[p.fact] == 3) {
                    out.push_back(p.fact);
                }
            }
        }
    }
    std::sort(out.begin(), out.end());
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

Corpus Corpus::from_directory(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw ValidationError("not a directory: " + dir);
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    Corpus c;
    for (std::string& path : files) {
        DocRef ref;
        ref.id = fs::path(path).filename().string();
        ref.path = std::move(path);
        c.docs_.push_back(std::move(ref));
    }
    return c;
}

Corpus Corpus::from_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open corpus file: " + path);
    }
    Corpus c;
    std::string line;
    std::size_t offset = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t raw_len = line.size();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) {
            DocRef ref;
            ref.id = path + ":" + std::to_string(line_no);
            ref.path = path;
            ref.offset = offset;
            ref.length = line.size();
            ref.jsonl = true;
            c.docs_.push_back(std::move(ref));
        }
        offset += raw_len + 1;
    }
    return c;
}

Corpus Corpus::from_memory(std::vector<std::pair<std::string, std::string>> docs) {
    Corpus c;
    c.memory_.reserve(docs.size());
    for (auto& [id, text] : docs) {
        DocRef ref;
        ref.id = std::move(id);
        ref.memory_index = c.memory_.size();
        c.memory_.push_back(std::move(text));
        c.docs_.push_back(std::move(ref));
    }
    return c;
}

Corpus Corpus::open(const std::string& path) {
    if (fs::is_directory(path)) return from_directory(path);
    return from_jsonl(path);
}

std::vector<std::string> Corpus::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(docs_.size());
    for (const DocRef& d : docs_) ids.push_back(d.id);
    return ids;
}

std::string Corpus::read_document(std::size_t i) const {
    const DocRef& ref = docs_.at(i);
    if (ref.memory_index != static_cast<std::size_t>(-1)) {
        return memory_[ref.memory_index];
    }
    if (!ref.jsonl) {
        return read_file(ref.path);
    }
    std::ifstream in(ref.path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open corpus file: " + ref.path);
    }
    in.seekg(static_cast<std::streamoff>(ref.offset));
    std::string line(ref.length, '\0');
    in.read(line.data(), static_cast<std::streamsize>(ref.length));
    if (in.gcount() != static_cast<std::streamsize>(ref.length)) {
        throw ValidationError("short read in corpus file: " + ref.path);
    }
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        throw ValidationError("corpus record is not a {\"text\": ...} object: " + ref.id);
    }
    return j["text"].get<std::string>();
}

// ---------------------------------------------------------------------------
// SliceManifest
// ---------------------------------------------------------------------------

std::size_t SliceManifest::slice_of(std::size_t doc) const {
    const auto it = std::upper_bound(begin_doc.begin(), begin_doc.end(), doc);
    return static_cast<std::size_t>(it - begin_doc.begin()) - 1;
}

SliceManifest SliceManifest::even(std::size_t doc_count, std::size_t slice_count) {
    if (slice_count == 0 || slice_count > doc_count) {
        throw ValidationError("slice count must be in [1, document count]");
    }
    SliceManifest m;
    m.doc_count = doc_count;
    m.begin_doc.reserve(slice_count);
    for (std::size_t s = 0; s < slice_count; ++s) {
        m.begin_doc.push_back(s * doc_count / slice_count);
    }
    return m;
}

void SliceManifest::validate(std::size_t corpus_docs) const {
    if (begin_doc.empty() || begin_doc.front() != 0) {
        throw ValidationError("slice manifest must start at document 0");
    }
    if (!std::is_sorted(begin_doc.begin(), begin_doc.end())) {
        throw ValidationError("slice manifest boundaries must be non-decreasing");
    }
    if (doc_count != corpus_docs || begin_doc.back() >= corpus_docs) {
        throw ValidationError("slice manifest does not cover the corpus documents");
    }
}

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

namespace {

// Per-worker accumulator: dense totals plus sparse per-slice counts.
struct Partial {
    std::vector<Count> totals;
    std::vector<std::unordered_map<std::uint32_t, Count>> slice_counts;
    std::vector<SkipEntry> skipped;
    std::size_t sentences = 0;

    void init(std::size_t n_facts, std::size_t n_slices) {
        totals.assign(n_facts, 0);
        slice_counts.assign(n_slices, {});
    }
};

void process_document(const AliasAutomaton& automaton, const textnorm::Normalizer& norm,
                      const std::string& text, std::size_t slice, MatchScratch& scratch,
                      std::vector<std::uint32_t>& hits, Partial& partial) {
    for (const textnorm::NormalizedSentence& sentence : norm.process(text)) {
        ++partial.sentences;
        if (sentence.tokens.empty()) continue;
        automaton.match(sentence.tokens, scratch, hits);
        for (const std::uint32_t fact : hits) {
            ++partial.totals[fact];
            if (!partial.slice_counts.empty()) {
                ++partial.slice_counts[slice][fact];
            }
        }
    }
}

CountResult finalize(const AliasAutomaton& automaton, std::vector<Partial>& partials,
                     std::size_t n_docs, std::size_t n_slices) {
    CountResult result;
    result.documents = n_docs;

    std::vector<Count> totals(automaton.fact_count(), 0);
    std::vector<std::vector<Count>> slices(n_slices,
                                           std::vector<Count>(automaton.fact_count(), 0));
    for (Partial& p : partials) {
        result.sentences += p.sentences;
        for (std::size_t f = 0; f < totals.size(); ++f) {
            totals[f] += p.totals[f];
        }
        for (std::size_t s = 0; s < p.slice_counts.size(); ++s) {
            for (const auto& [fact, c] : p.slice_counts[s]) {
                slices[s][fact] += c;
            }
        }
        for (SkipEntry& e : p.skipped) {
            result.skipped.push_back(std::move(e));
        }
    }
    std::sort(result.skipped.begin(), result.skipped.end(),
              [](const SkipEntry& a, const SkipEntry& b) { return a.doc_id < b.doc_id; });

    for (std::size_t f = 0; f < totals.size(); ++f) {
        result.table.counts.emplace(automaton.fact_id(static_cast<std::uint32_t>(f)), totals[f]);
    }
    for (const auto& slice : slices) {
        auto& out = result.table.slices.emplace_back();
        for (std::size_t f = 0; f < slice.size(); ++f) {
            out.emplace(automaton.fact_id(static_cast<std::uint32_t>(f)), slice[f]);
        }
    }

    if (n_docs > 0 && result.skipped.size() * 100 > n_docs) {
        throw ValidationError("more than 1% of corpus documents were skipped (" +
                              std::to_string(result.skipped.size()) + " of " +
                              std::to_string(n_docs) + ")");
    }
    result.table.validate();
    return result;
}

}  // namespace

CountResult count_corpus(const AliasAutomaton& automaton, const Corpus& corpus,
                         const textnorm::Normalizer& norm, const SliceManifest* manifest,
                         int workers) {
    if (manifest != nullptr) {
        manifest->validate(corpus.size());
    }
    const std::size_t n_docs = corpus.size();
    const std::size_t n_slices = manifest != nullptr ? manifest->slice_count() : 0;
    const int n_threads = workers > 0 ? workers : omp_get_max_threads();

    std::vector<Partial> partials(static_cast<std::size_t>(n_threads));
    for (Partial& p : partials) {
        p.init(automaton.fact_count(), n_slices);
    }

#pragma omp parallel num_threads(n_threads)
    {
        Partial& partial = partials[static_cast<std::size_t>(omp_get_thread_num())];
        MatchScratch scratch;
        std::vector<std::uint32_t> hits;
#pragma omp for schedule(dynamic, 4)
        for (std::size_t i = 0; i < n_docs; ++i) {
            const std::size_t slice = manifest != nullptr ? manifest->slice_of(i) : 0;
            try {
                const std::string text = corpus.read_document(i);
                process_document(automaton, norm, text, slice, scratch, hits, partial);
            } catch (const std::exception& e) {
                partial.skipped.push_back({corpus.doc_id(i), e.what()});
            }
        }
    }
    return finalize(automaton, partials, n_docs, n_slices);
}

CountResult count_corpus_serial(const AliasAutomaton& automaton, const Corpus& corpus,
                                const textnorm::Normalizer& norm,
                                const SliceManifest* manifest) {
    if (manifest != nullptr) {
        manifest->validate(corpus.size());
    }
    const std::size_t n_slices = manifest != nullptr ? manifest->slice_count() : 0;
    std::vector<Partial> partials(1);
    partials[0].init(automaton.fact_count(), n_slices);
    MatchScratch scratch;
    std::vector<std::uint32_t> hits;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const std::size_t slice = manifest != nullptr ? manifest->slice_of(i) : 0;
        try {
            const std::string text = corpus.read_document(i);
            process_document(automaton, norm, text, slice, scratch, hits, partials[0]);
        } catch (const std::exception& e) {
            partials[0].skipped.push_back({corpus.doc_id(i), e.what()});
        }
    }
    return finalize(automaton, partials, corpus.size(), n_slices);
}

FrequencyTable cumulative_counts(const FrequencyTable& table, std::size_t upto) {
    if (!table.has_slices()) {
        throw ValidationError("cumulative_counts requires per-slice data");
    }
    if (upto >= table.slice_count()) {
        throw ValidationError("slice index " + std::to_string(upto) + " out of range (" +
                              std::to_string(table.slice_count()) + " slices)");
    }
    FrequencyTable out;
    for (const auto& [id, total] : table.counts) {
        (void)total;
        out.counts.emplace(id, 0);
    }
    for (std::size_t s = 0; s <= upto; ++s) {
        for (const auto& [id, c] : table.slices[s]) {
            out.counts[id] += c;
        }
    }
    return out;
}

}  // namespace sefkit::matcher
