#include "sefkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "sefkit/alphafit.hpp"
#include "sefkit/error.hpp"
#include "sefkit/hash.hpp"
#include "sefkit/rng.hpp"

namespace sefkit::synth {

namespace {

using TokenSeq = std::vector<std::string>;

// Contiguous-subsequence test, the same co-occurrence semantics the matcher
// implements (kept independent of the matcher on purpose).
bool contains_subsequence(const TokenSeq& haystack, const TokenSeq& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (haystack[i + k] != needle[k]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

struct FactPatterns {
    std::vector<TokenSeq> subject;  // normalized alias token sequences
    std::vector<TokenSeq> object;
};

}  // namespace

SyntheticCorpus gen_corpus(const std::vector<FactEntry>& catalog, const CorpusSpec& spec,
                           const textnorm::Normalizer& norm) {
    // Normalized alias patterns per fact, plus the token -> facts index used
    // to keep the collision scan near-linear.
    std::vector<FactPatterns> patterns(catalog.size());
    std::unordered_map<std::string, std::size_t> fact_index;
    std::unordered_set<std::string> alias_tokens;
    std::unordered_map<std::string, std::vector<std::size_t>> facts_by_token;
    for (std::size_t f = 0; f < catalog.size(); ++f) {
        fact_index.emplace(catalog[f].fact_id, f);
        for (const bool subject : {true, false}) {
            const EntityRef& entity = subject ? catalog[f].subject : catalog[f].object;
            auto& out = subject ? patterns[f].subject : patterns[f].object;
            if (entity.aliases.empty()) {
                throw ValidationError("entity '" + entity.label + "' of fact '" +
                                      catalog[f].fact_id + "' has no aliases");
            }
            for (const std::string& alias : entity.aliases) {
                TokenSeq tokens = norm.normalize_tokens(alias);
                if (tokens.empty()) {
                    throw ValidationError("alias '" + alias + "' of fact '" +
                                          catalog[f].fact_id + "' normalizes to nothing");
                }
                for (const std::string& t : tokens) {
                    alias_tokens.insert(t);
                    auto& facts = facts_by_token[t];
                    if (facts.empty() || facts.back() != f) facts.push_back(f);
                }
                out.push_back(std::move(tokens));
            }
        }
    }
    for (const auto& [id, count] : spec.targets) {
        (void)count;
        if (fact_index.find(id) == fact_index.end()) {
            throw ValidationError("target count for unknown fact '" + id + "'");
        }
    }

    // Filler vocabulary disjoint from every alias token (post-normalization;
    // the digit keeps the lemma rules away).
    Rng rng(spec.seed);
    std::vector<std::string> filler;
    filler.reserve(spec.filler_vocab);
    for (std::size_t k = 0; filler.size() < std::max<std::size_t>(spec.filler_vocab, 8); ++k) {
        std::string token = "w" + std::to_string(k) + "q";
        if (alias_tokens.find(norm.normalize(token)) == alias_tokens.end()) {
            filler.push_back(std::move(token));
        }
    }
    const auto filler_token = [&]() -> const std::string& {
        return filler[rng.below(filler.size())];
    };

    // One planted sentence: subject alias and object alias in random order,
    // joined and padded with filler so alias adjacencies cannot fabricate a
    // foreign pattern by accident (the scan below still verifies).
    struct Sentence {
        std::string text;
        std::size_t fact = static_cast<std::size_t>(-1);  // npos = filler
    };
    std::vector<Sentence> sentences;

    std::set<std::pair<std::string, std::string>> collisions;
    const auto plant = [&](std::size_t f) {
        const FactPatterns& p = patterns[f];
        const EntityRef& subj = catalog[f].subject;
        const EntityRef& obj = catalog[f].object;
        const std::string& subj_alias = subj.aliases[rng.below(subj.aliases.size())];
        const std::string& obj_alias = obj.aliases[rng.below(obj.aliases.size())];
        (void)p;

        std::vector<std::string> parts;
        const std::size_t lead = rng.below(3);
        for (std::size_t i = 0; i < lead; ++i) parts.push_back(filler_token());
        const bool subject_first = rng.below(2) == 0;
        parts.push_back(subject_first ? subj_alias : obj_alias);
        const std::size_t mid = 1 + rng.below(3);
        for (std::size_t i = 0; i < mid; ++i) parts.push_back(filler_token());
        parts.push_back(subject_first ? obj_alias : subj_alias);
        const std::size_t tail = rng.below(3);
        for (std::size_t i = 0; i < tail; ++i) parts.push_back(filler_token());

        std::string text;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i > 0) text.push_back(' ');
            text += parts[i];
        }
        text.push_back('.');

        // Exactness scan: no other fact may co-occur in this sentence.
        const TokenSeq tokens = norm.normalize_tokens(text);
        std::set<std::size_t> candidates;
        for (const std::string& t : tokens) {
            const auto it = facts_by_token.find(t);
            if (it == facts_by_token.end()) continue;
            for (const std::size_t g : it->second) {
                if (g != f) candidates.insert(g);
            }
        }
        for (const std::size_t g : candidates) {
            const auto any_in = [&](const std::vector<TokenSeq>& seqs) {
                return std::any_of(seqs.begin(), seqs.end(), [&](const TokenSeq& s) {
                    return contains_subsequence(tokens, s);
                });
            };
            if (any_in(patterns[g].subject) && any_in(patterns[g].object)) {
                collisions.emplace(catalog[f].fact_id, catalog[g].fact_id);
            }
        }
        sentences.push_back({std::move(text), f});
    };

    for (const auto& [id, count] : spec.targets) {
        const std::size_t f = fact_index.at(id);
        for (Count c = 0; c < count; ++c) plant(f);
    }
    if (!collisions.empty()) {
        std::string msg = "alias collisions make exact counts impossible:";
        for (const auto& [a, b] : collisions) {
            msg += " (" + a + " <-> " + b + ")";
        }
        throw ValidationError(msg);
    }

    for (std::size_t i = 0; i < spec.filler_sentences; ++i) {
        std::string text;
        const std::size_t len = 5 + rng.below(11);
        for (std::size_t k = 0; k < len; ++k) {
            if (k > 0) text.push_back(' ');
            text += filler_token();
        }
        text.push_back('.');
        sentences.push_back({std::move(text), static_cast<std::size_t>(-1)});
    }

    rng.shuffle(sentences);

    const std::size_t n_docs = std::max<std::size_t>(spec.documents, 1);
    SyntheticCorpus corpus;
    corpus.per_document.resize(n_docs);
    std::vector<std::string> doc_text(n_docs);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const std::size_t d = i * n_docs / std::max<std::size_t>(sentences.size(), 1);
        std::string& text = doc_text[d];
        std::string sentence = std::move(sentences[i].text);
        // Capitalize the first letter so the sentence splitter sees a
        // boundary after the previous period.
        if (!sentence.empty() && sentence.front() >= 'a' && sentence.front() <= 'z') {
            sentence.front() = static_cast<char>(sentence.front() - 'a' + 'A');
        }
        if (!text.empty()) text.push_back(' ');
        text += sentence;
        if (sentences[i].fact != static_cast<std::size_t>(-1)) {
            ++corpus.per_document[d][catalog[sentences[i].fact].fact_id];
        }
    }

    const int width = n_docs > 1 ? static_cast<int>(std::to_string(n_docs - 1).size()) : 1;
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::string id = std::to_string(d);
        while (static_cast<int>(id.size()) < width) id.insert(id.begin(), '0');
        corpus.documents.emplace_back("doc_" + id + ".txt", std::move(doc_text[d]));
    }

    for (const auto& fact : catalog) {
        const auto it = spec.targets.find(fact.fact_id);
        corpus.truth.counts.emplace(fact.fact_id, it == spec.targets.end() ? 0 : it->second);
    }
    return corpus;
}

AnswerLog gen_respondent(const FrequencyTable& table, double l0, double x0, double alpha,
                         std::uint64_t seed, const std::string& model_id,
                         const std::string& checkpoint_id) {
    AnswerLog log;
    log.model_id = model_id;
    log.checkpoint_id = checkpoint_id;
    for (const auto& [fact, x] : table.counts) {
        const double f = alphafit::prob_correct(static_cast<double>(x), l0, x0, alpha);
        // Draw keyed on (seed, fact): independent of iteration order.
        Rng draw(seed ^ fnv1a64(fact));
        log.records.emplace(fact, draw.uniform() < f);
    }
    return log;
}

std::vector<Count> zipf_counts(std::size_t n, double exponent, Count max_count,
                               std::uint64_t seed) {
    if (!(exponent > 0.0)) {
        throw ValidationError("zipf exponent must be positive");
    }
    // Inverse-CDF over z in {1 .. max_count+1}, x = z - 1.
    const std::size_t support = static_cast<std::size_t>(max_count) + 1;
    std::vector<double> cdf(support);
    double total = 0.0;
    for (std::size_t z = 1; z <= support; ++z) {
        total += std::pow(static_cast<double>(z), -exponent);
        cdf[z - 1] = total;
    }
    Rng rng(seed);
    std::vector<Count> counts;
    counts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        counts.push_back(static_cast<Count>(it - cdf.begin()));
    }
    return counts;
}

std::vector<FactEntry> gen_catalog(std::size_t n_facts, std::size_t aliases_per_entity,
                                   std::size_t tokens_per_alias, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FactEntry> catalog;
    catalog.reserve(n_facts);
    for (std::size_t f = 0; f < n_facts; ++f) {
        const auto entity = [&](const char* role) {
            EntityRef e;
            e.id = "e" + std::to_string(f) + role;
            const std::size_t n_aliases = 1 + rng.below(std::max<std::size_t>(aliases_per_entity, 1));
            for (std::size_t a = 0; a < n_aliases; ++a) {
                const std::size_t n_tokens = 1 + rng.below(std::max<std::size_t>(tokens_per_alias, 1));
                std::string alias;
                for (std::size_t t = 0; t < n_tokens; ++t) {
                    if (t > 0) alias.push_back(' ');
                    alias += std::string(role) + std::to_string(f) + "a" + std::to_string(a) +
                             "t" + std::to_string(t);
                }
                if (a == 0) {
                    e.label = alias;
                }
                e.aliases.push_back(std::move(alias));
            }
            return e;
        };
        FactEntry fact;
        fact.fact_id = "F" + std::to_string(f);
        fact.relation_id = "R" + std::to_string(f % 7);
        fact.subject = entity("s");
        fact.object = entity("o");
        catalog.push_back(std::move(fact));
    }
    return catalog;
}

}  // namespace sefkit::synth
