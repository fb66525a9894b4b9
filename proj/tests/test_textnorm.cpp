#include <doctest.h>

#include <set>
#include <sstream>

#include "sefkit/rng.hpp"
#include "sefkit/textnorm.hpp"

using namespace sefkit;
using namespace sefkit::textnorm;

TEST_SUITE_BEGIN("textnorm");

namespace {

const Normalizer& norm() {
    static Normalizer n;
    return n;
}

std::vector<std::string> sentence_texts(std::string_view doc) {
    std::vector<std::string> out;
    for (const SentenceSpan& span : norm().split_sentences(doc)) {
        out.emplace_back(doc.substr(span.begin, span.end - span.begin));
    }
    return out;
}

}  // namespace

TEST_CASE("sentence splitting basics") {
    CHECK(sentence_texts("A b. C d.") == std::vector<std::string>{"A b.", "C d."});
    CHECK(sentence_texts("").empty());
    CHECK(sentence_texts("   \n\t ").empty());
    CHECK(sentence_texts("no terminator here") ==
          std::vector<std::string>{"no terminator here"});
    CHECK(sentence_texts("Stop! Now. go on") ==
          std::vector<std::string>{"Stop!", "Now. go on"});
    CHECK(sentence_texts("Really? 42 is the answer.") ==
          std::vector<std::string>{"Really?", "42 is the answer."});
}

TEST_CASE("abbreviations do not split") {
    CHECK(sentence_texts("Dr. Smith arrived. He left.") ==
          std::vector<std::string>{"Dr. Smith arrived.", "He left."});
    CHECK(sentence_texts("See e.g. Smith et al.") ==
          std::vector<std::string>{"See e.g. Smith et al."});
    CHECK(sentence_texts("Mr. A met Mrs. B. They left.") ==
          std::vector<std::string>{"Mr. A met Mrs. B.", "They left."});
}

TEST_CASE("sentence spans index the original bytes and stay ordered") {
    const std::string doc = "  One two.   Three four!  Five.  ";
    const auto spans = norm().split_sentences(doc);
    REQUIRE(spans.size() == 3);
    CHECK(doc.substr(spans[0].begin, spans[0].end - spans[0].begin) == "One two.");
    for (std::size_t i = 1; i < spans.size(); ++i) {
        CHECK(spans[i - 1].end <= spans[i].begin);
    }
}

TEST_CASE("coverage: every non-space character lands in exactly one span") {
    Rng rng(20240817);
    const std::string pool = "abcdefgHIJKL .!?,;()0123  ";
    for (int round = 0; round < 200; ++round) {
        std::string doc;
        const std::size_t len = rng.below(160);
        for (std::size_t i = 0; i < len; ++i) doc.push_back(pool[rng.below(pool.size())]);
        std::vector<int> covered(doc.size(), 0);
        for (const SentenceSpan& span : norm().split_sentences(doc)) {
            REQUIRE(span.begin <= span.end);
            REQUIRE(span.end <= doc.size());
            for (std::size_t i = span.begin; i < span.end; ++i) ++covered[i];
        }
        for (std::size_t i = 0; i < doc.size(); ++i) {
            if (doc[i] != ' ') {
                CHECK(covered[i] == 1);
            }
        }
    }
}

TEST_CASE("tokenize") {
    CHECK(Normalizer::tokenize("Boeing 747 is large.") ==
          std::vector<std::string>{"Boeing", "747", "is", "large"});
    CHECK(Normalizer::tokenize("long-range airliner") ==
          std::vector<std::string>{"long-range", "airliner"});
    CHECK(Normalizer::tokenize("U.S.A.") == std::vector<std::string>{"U.S.A"});
    CHECK(Normalizer::tokenize("don't stop, won't stop") ==
          std::vector<std::string>{"don't", "stop", "won't", "stop"});
    CHECK(Normalizer::tokenize("(see: [brackets]!)") ==
          std::vector<std::string>{"see", "brackets"});
    CHECK(Normalizer::tokenize("--") == std::vector<std::string>{});
    CHECK(Normalizer::tokenize("a--b") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("normalize folds case and lemmatizes") {
    CHECK(norm().normalize("Airplanes") == "airplane");
    CHECK(norm().normalize("Berlin") == "berlin");
    CHECK(norm().normalize("cities") == "city");
    CHECK(norm().normalize("boxes") == "box");
    CHECK(norm().normalize("churches") == "church");
    CHECK(norm().normalize("houses") == "house");
    CHECK(norm().normalize("glasses") == "glass");
    CHECK(norm().normalize("was") == "be");
    CHECK(norm().normalize("men") == "man");
    CHECK(norm().normalize("Boeing's") == "boeing");
    CHECK(norm().normalize("gas") == "gas");
    CHECK(norm().normalize("buses") == "bus");
}

TEST_CASE("digits pass through after case folding") {
    CHECK(norm().normalize("747") == "747");
    CHECK(norm().normalize("A380") == "a380");
    CHECK(norm().normalize("1990s") == "1990s");
}

TEST_CASE("decomposed accents compose to the precomposed form") {
    CHECK(norm().normalize("Caf\x65\xcc\x81") == norm().normalize("Caf\xc3\xa9"));  // e+U+0301 vs é
    CHECK(norm().normalize("Caf\xc3\xa9s") == norm().normalize("caf\x65\xcc\x81"));
    CHECK(norm().normalize("Z\x75\xcc\x88rich") == norm().normalize("Z\xc3\xbcrich"));  // u+U+0308 vs ü
}

TEST_CASE("invalid UTF-8 is replaced, not fatal") {
    const std::string junk = "abc\xff\xfe def. Next one.";
    CHECK(norm().split_sentences(junk).size() == 2);
    CHECK_FALSE(norm().normalize("\xff").empty());
}

TEST_CASE("normalize is idempotent") {
    Rng rng(99);
    const std::string letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIS";
    for (int i = 0; i < 3000; ++i) {
        std::string token;
        const std::size_t len = 1 + rng.below(11);
        for (std::size_t k = 0; k < len; ++k) token.push_back(letters[rng.below(letters.size())]);
        const std::string once = norm().normalize(token);
        CHECK(norm().normalize(once) == once);
    }
}

TEST_CASE("every lemma table value is a fixed point of normalize") {
    // Independent parse of the bundled table.
    std::istringstream in{std::string(bundled_lemma_exceptions())};
    std::string line;
    std::size_t entries = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto sep = line.find(' ');
        REQUIRE(sep != std::string::npos);
        const std::string form = line.substr(0, sep);
        const std::string lemma = line.substr(sep + 1);
        CHECK_MESSAGE(norm().normalize(lemma) == lemma, "lemma '", lemma, "' is not stable");
        CHECK(norm().normalize(form) == lemma);
        ++entries;
    }
    CHECK(entries >= 150);
}

TEST_CASE("identical input produces identical output across instances") {
    const std::string doc = "Dr. Frankenstein's Monsters arrived. They left quickly.";
    Normalizer a;
    Normalizer b;
    const auto pa = a.process(doc);
    const auto pb = b.process(doc);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].tokens == pb[i].tokens);
        CHECK(pa[i].span == pb[i].span);
    }
    CHECK(a.data_hash() == b.data_hash());
    CHECK(a.data_hash().rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("process yields lowercase lemma tokens with spans") {
    const auto sentences = norm().process("The Boeing 747 is a long-range airliner. It flies.");
    REQUIRE(sentences.size() == 2);
    CHECK(sentences[0].tokens == std::vector<std::string>{"the", "boeing", "747", "be", "a",
                                                          "long-range", "airliner"});
    CHECK(sentences[1].tokens == std::vector<std::string>{"it", "fly"});
}

TEST_SUITE_END();
