#pragma once

// Randomized catalog/corpus fixtures shared by the matcher tests and the
// acceptance suite. Aliases overlap and nest across facts on purpose.

#include <string>
#include <vector>

#include "sefkit/core.hpp"
#include "sefkit/rng.hpp"

namespace fixtures {

struct RandomFixture {
    std::vector<sefkit::FactEntry> catalog;
    std::vector<std::pair<std::string, std::string>> documents;  // (id, text)
};

// Catalog aliases and sentences draw from one small shared vocabulary, so
// co-occurrences, shared aliases, and nested alias sequences ("w1" inside
// "w1 w2") all arise naturally.
inline RandomFixture random_fixture(std::uint64_t seed, std::size_t max_facts = 100,
                                    std::size_t max_sentences = 1000) {
    sefkit::Rng rng(seed);
    const std::size_t vocab_size = 12 + rng.below(30);
    std::vector<std::string> vocab;
    vocab.reserve(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) {
        vocab.push_back("w" + std::to_string(i));
    }

    const auto alias = [&] {
        const std::size_t len = 1 + rng.below(3);
        std::string out;
        for (std::size_t i = 0; i < len; ++i) {
            if (i > 0) out.push_back(' ');
            out += vocab[rng.below(vocab.size())];
        }
        return out;
    };
    const auto entity = [&](const std::string& id) {
        sefkit::EntityRef e;
        e.id = id;
        e.label = alias();
        e.aliases.push_back(e.label);
        const std::size_t extra = rng.below(3);
        for (std::size_t i = 0; i < extra; ++i) {
            const std::string a = alias();
            if (a != e.label) e.aliases.push_back(a);
        }
        return e;
    };

    RandomFixture fx;
    const std::size_t n_facts = 1 + rng.below(max_facts);
    for (std::size_t f = 0; f < n_facts; ++f) {
        sefkit::FactEntry fact;
        fact.fact_id = "F" + std::to_string(f);
        fact.relation_id = "R" + std::to_string(f % 5);
        fact.subject = entity(fact.fact_id + "s");
        fact.object = entity(fact.fact_id + "o");
        fx.catalog.push_back(std::move(fact));
    }

    const std::size_t n_sentences = 1 + rng.below(max_sentences);
    const std::size_t n_docs = 1 + rng.below(8);
    std::vector<std::string> docs(n_docs);
    for (std::size_t s = 0; s < n_sentences; ++s) {
        std::string sentence;
        const std::size_t len = 3 + rng.below(10);
        for (std::size_t t = 0; t < len; ++t) {
            std::string word = vocab[rng.below(vocab.size())];
            if (t == 0) word.front() = static_cast<char>(word.front() - 'a' + 'A');
            if (t > 0) sentence.push_back(' ');
            sentence += word;
        }
        sentence.push_back('.');
        std::string& doc = docs[rng.below(n_docs)];
        if (!doc.empty()) doc.push_back(' ');
        doc += sentence;
    }
    for (std::size_t d = 0; d < n_docs; ++d) {
        fx.documents.emplace_back("doc" + std::to_string(d), std::move(docs[d]));
    }
    return fx;
}

}  // namespace fixtures
