#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sefkit/core.hpp"
#include "sefkit/textnorm.hpp"

namespace sefkit::synth {

// Ground-truth corpus generator. Every fact receives exactly its target
// number of sentences containing one subject alias and one object alias;
// filler tokens come from a vocabulary disjoint from all alias tokens, so
// the targets are the exact sentence-occurrence counts by construction.
struct CorpusSpec {
    std::map<std::string, Count> targets;  // fact_id -> planted sentence count
    std::size_t filler_sentences = 0;
    std::size_t filler_vocab = 500;
    std::size_t documents = 1;
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    std::vector<std::pair<std::string, std::string>> documents;  // (doc_id, text)
    FrequencyTable truth;                                        // totals == targets
    std::vector<std::map<std::string, Count>> per_document;      // ground truth per doc
};

// Throws ValidationError listing the colliding facts when one fact's
// planted sentence would also satisfy another fact (exactness impossible).
SyntheticCorpus gen_corpus(const std::vector<FactEntry>& catalog, const CorpusSpec& spec,
                           const textnorm::Normalizer& norm);

// Synthetic respondent: answers each fact correctly with independent
// probability F(x) under the given parameters. Draws are keyed on
// (seed, fact_id), so the result is independent of table iteration order.
AnswerLog gen_respondent(const FrequencyTable& table, double l0, double x0, double alpha,
                         std::uint64_t seed, const std::string& model_id = "synthetic",
                         const std::string& checkpoint_id = "final");

// Long-tailed counts: x = z - 1 where z is Zipf(exponent) on {1..max+1},
// so x ranges over [0, max_count] with mass concentrated near zero.
std::vector<Count> zipf_counts(std::size_t n, double exponent, Count max_count,
                               std::uint64_t seed);

// Catalog of synthetic facts with digit-bearing alias tokens (immune to
// lemma rules) and per-entity unique vocabularies. `aliases_per_entity` and
// `tokens_per_alias` bound the randomized shapes. Used by tests and the
// closed-loop CLI pipeline.
std::vector<FactEntry> gen_catalog(std::size_t n_facts, std::size_t aliases_per_entity,
                                   std::size_t tokens_per_alias, std::uint64_t seed);

}  // namespace sefkit::synth
