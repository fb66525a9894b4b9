#include "sefkit/textnorm.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "sefkit/error.hpp"
#include "sefkit/hash.hpp"
#include "sefkit/io.hpp"

namespace sefkit::textnorm {

namespace {

// ---------------------------------------------------------------------------
// UTF-8 and codepoint classification
// ---------------------------------------------------------------------------

struct Decoded {
    char32_t cp;
    std::size_t len;
};

// Invalid sequences decode to U+FFFD, consuming one byte.
Decoded decode_utf8(std::string_view s, std::size_t i) {
    const auto b = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]); };
    const unsigned char b0 = b(0);
    if (b0 < 0x80) return {b0, 1};
    const auto cont = [&](std::size_t k) {
        return i + k < s.size() && (b(k) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        const char32_t cp = ((b0 & 0x1Fu) << 6) | (b(1) & 0x3Fu);
        if (cp >= 0x80) return {cp, 2};
    } else if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        const char32_t cp = ((b0 & 0x0Fu) << 12) | ((b(1) & 0x3Fu) << 6) | (b(2) & 0x3Fu);
        if (cp >= 0x800 && (cp < 0xD800 || cp > 0xDFFF)) return {cp, 3};
    } else if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        const char32_t cp = ((b0 & 0x07u) << 18) | ((b(1) & 0x3Fu) << 12) |
                            ((b(2) & 0x3Fu) << 6) | (b(3) & 0x3Fu);
        if (cp >= 0x10000 && cp <= 0x10FFFF) return {cp, 4};
    }
    return {0xFFFD, 1};
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Case folding for the Latin repertoire (ASCII, Latin-1, Latin Extended-A).
// Other scripts pass through. U+2019 folds to the ASCII apostrophe so
// curly and straight possessives compare equal.
char32_t to_lower_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp == 0x130) return U'i';  // dotted capital I
    if (cp == 0x178) return 0xFF;  // Y with diaeresis
    if (cp >= 0x100 && cp <= 0x137 && (cp & 1) == 0) return cp + 1;
    if (cp >= 0x139 && cp <= 0x148 && (cp & 1) == 1) return cp + 1;
    if (cp >= 0x14A && cp <= 0x177 && (cp & 1) == 0) return cp + 1;
    if (cp == 0x179 || cp == 0x17B || cp == 0x17D) return cp + 1;
    if (cp == 0x2019) return U'\'';
    return cp;
}

bool is_upper_cp(char32_t cp) { return to_lower_cp(cp) != cp; }
bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

bool is_combining_mark(char32_t cp) { return cp >= 0x300 && cp <= 0x36F; }

// Non-ASCII punctuation treated as a token boundary. Everything else at or
// above U+0080 counts as a word character, so unlisted scripts match as
// opaque letter runs.
bool is_nonword_nonascii(char32_t cp) {
    if (cp == 0xFFFD) return true;
    if (cp == 0xA1 || cp == 0xAB || cp == 0xB7 || cp == 0xBB || cp == 0xBF) return true;
    if (cp >= 0x2010 && cp <= 0x2027 && cp != 0x2019) return true;  // dashes, quotes
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    return false;
}

bool is_word_cp(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'0' && cp <= U'9') || (cp >= U'A' && cp <= U'Z') ||
               (cp >= U'a' && cp <= U'z');
    }
    return !is_space_cp(cp) && !is_nonword_nonascii(cp);
}

bool is_connector_cp(char32_t cp) {
    return cp == U'-' || cp == U'.' || cp == U'\'' || cp == 0x2019;
}

// ---------------------------------------------------------------------------
// Canonical composition, lowercase Latin bases only (applied after folding)
// ---------------------------------------------------------------------------

constexpr std::uint32_t compose_key(char32_t base, char32_t mark) {
    return (static_cast<std::uint32_t>(base) << 16) | static_cast<std::uint32_t>(mark);
}

struct Composition {
    std::uint32_t key;
    char32_t composed;
};

constexpr std::array<Composition, 80> kCompositions = {{
    {compose_key(U'a', 0x300), 0xE0},  {compose_key(U'a', 0x301), 0xE1},
    {compose_key(U'a', 0x302), 0xE2},  {compose_key(U'a', 0x303), 0xE3},
    {compose_key(U'a', 0x304), 0x101}, {compose_key(U'a', 0x306), 0x103},
    {compose_key(U'a', 0x308), 0xE4},  {compose_key(U'a', 0x30A), 0xE5},
    {compose_key(U'a', 0x328), 0x105},
    {compose_key(U'c', 0x301), 0x107}, {compose_key(U'c', 0x302), 0x109},
    {compose_key(U'c', 0x307), 0x10B}, {compose_key(U'c', 0x30C), 0x10D},
    {compose_key(U'c', 0x327), 0xE7},
    {compose_key(U'd', 0x30C), 0x10F},
    {compose_key(U'e', 0x300), 0xE8},  {compose_key(U'e', 0x301), 0xE9},
    {compose_key(U'e', 0x302), 0xEA},  {compose_key(U'e', 0x304), 0x113},
    {compose_key(U'e', 0x306), 0x115}, {compose_key(U'e', 0x307), 0x117},
    {compose_key(U'e', 0x308), 0xEB},  {compose_key(U'e', 0x30C), 0x11B},
    {compose_key(U'e', 0x328), 0x119},
    {compose_key(U'g', 0x302), 0x11D}, {compose_key(U'g', 0x306), 0x11F},
    {compose_key(U'g', 0x307), 0x121}, {compose_key(U'g', 0x327), 0x123},
    {compose_key(U'h', 0x302), 0x125},
    {compose_key(U'i', 0x300), 0xEC},  {compose_key(U'i', 0x301), 0xED},
    {compose_key(U'i', 0x302), 0xEE},  {compose_key(U'i', 0x303), 0x129},
    {compose_key(U'i', 0x304), 0x12B}, {compose_key(U'i', 0x306), 0x12D},
    {compose_key(U'i', 0x308), 0xEF},  {compose_key(U'i', 0x328), 0x12F},
    {compose_key(U'j', 0x302), 0x135},
    {compose_key(U'k', 0x327), 0x137},
    {compose_key(U'l', 0x301), 0x13A}, {compose_key(U'l', 0x30C), 0x13E},
    {compose_key(U'l', 0x327), 0x13C},
    {compose_key(U'n', 0x301), 0x144}, {compose_key(U'n', 0x303), 0xF1},
    {compose_key(U'n', 0x30C), 0x148}, {compose_key(U'n', 0x327), 0x146},
    {compose_key(U'o', 0x300), 0xF2},  {compose_key(U'o', 0x301), 0xF3},
    {compose_key(U'o', 0x302), 0xF4},  {compose_key(U'o', 0x303), 0xF5},
    {compose_key(U'o', 0x304), 0x14D}, {compose_key(U'o', 0x306), 0x14F},
    {compose_key(U'o', 0x308), 0xF6},  {compose_key(U'o', 0x30B), 0x151},
    {compose_key(U'r', 0x301), 0x155}, {compose_key(U'r', 0x30C), 0x159},
    {compose_key(U'r', 0x327), 0x157},
    {compose_key(U's', 0x301), 0x15B}, {compose_key(U's', 0x302), 0x15D},
    {compose_key(U's', 0x30C), 0x161}, {compose_key(U's', 0x327), 0x15F},
    {compose_key(U't', 0x30C), 0x165}, {compose_key(U't', 0x327), 0x163},
    {compose_key(U'u', 0x300), 0xF9},  {compose_key(U'u', 0x301), 0xFA},
    {compose_key(U'u', 0x302), 0xFB},  {compose_key(U'u', 0x303), 0x169},
    {compose_key(U'u', 0x304), 0x16B}, {compose_key(U'u', 0x306), 0x16D},
    {compose_key(U'u', 0x308), 0xFC},  {compose_key(U'u', 0x30A), 0x16F},
    {compose_key(U'u', 0x30B), 0x171}, {compose_key(U'u', 0x328), 0x173},
    {compose_key(U'w', 0x302), 0x175},
    {compose_key(U'y', 0x301), 0xFD},  {compose_key(U'y', 0x302), 0x177},
    {compose_key(U'y', 0x308), 0xFF},
    {compose_key(U'z', 0x301), 0x17A}, {compose_key(U'z', 0x307), 0x17C},
    {compose_key(U'z', 0x30C), 0x17E},
}};

static_assert([] {
    for (std::size_t i = 1; i < kCompositions.size(); ++i) {
        if (kCompositions[i - 1].key >= kCompositions[i].key) return false;
    }
    return true;
}());

char32_t compose_pair(char32_t base, char32_t mark) {
    const std::uint32_t key = compose_key(base, mark);
    auto it = std::lower_bound(kCompositions.begin(), kCompositions.end(), key,
                               [](const Composition& c, std::uint32_t k) { return c.key < k; });
    return (it != kCompositions.end() && it->key == key) ? it->composed : 0;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Normalizer
// ---------------------------------------------------------------------------

Normalizer::Normalizer() {
    load_tables(bundled_abbreviations(), bundled_lemma_exceptions());
}

Normalizer::Normalizer(const std::string& abbreviations_path, const std::string& lemma_path) {
    load_tables(read_file(abbreviations_path), read_file(lemma_path));
}

void Normalizer::load_tables(std::string_view abbreviations, std::string_view lemmas) {
    std::size_t pos = 0;
    auto next_line = [](std::string_view text, std::size_t& p) -> std::string_view {
        const std::size_t nl = text.find('\n', p);
        const std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
        std::string_view line = text.substr(p, end - p);
        p = (nl == std::string_view::npos) ? text.size() : nl + 1;
        return trim(line);
    };

    while (pos < abbreviations.size()) {
        std::string_view line = next_line(abbreviations, pos);
        if (line.empty() || line.front() == '#') continue;
        std::string entry;
        for (char c : line) {
            entry.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        if (!entry.empty() && entry.back() == '.') entry.pop_back();
        if (!entry.empty()) abbreviations_.insert(std::move(entry));
    }

    pos = 0;
    std::size_t line_no = 0;
    while (pos < lemmas.size()) {
        std::string_view line = next_line(lemmas, pos);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const std::size_t sep = line.find(' ');
        if (sep == std::string_view::npos || sep == 0 || sep + 1 >= line.size()) {
            throw ParseError("lemma table entry needs two fields", line_no);
        }
        lemma_map_.emplace(std::string(line.substr(0, sep)),
                           std::string(trim(line.substr(sep + 1))));
    }

    Fnv1a64 h;
    h.update(abbreviations);
    h.update("\x1f");
    h.update(lemmas);
    data_hash_ = "fnv1a64:" + h.hex();
}

std::vector<SentenceSpan> Normalizer::split_sentences(std::string_view document) const {
    std::vector<SentenceSpan> spans;
    const std::size_t n = document.size();

    // True when the token ending just before `dot_pos` is a known
    // abbreviation (ASCII letters and internal periods, e.g. "Dr", "e.g").
    auto abbreviation_before = [&](std::size_t dot_pos) {
        std::size_t start = dot_pos;
        while (start > 0) {
            const char c = document[start - 1];
            const bool token_char = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                                    (c == '.' && start - 1 > 0);
            if (!token_char) break;
            --start;
        }
        if (start == dot_pos) return false;
        std::string token;
        token.reserve(dot_pos - start);
        for (std::size_t k = start; k < dot_pos; ++k) {
            token.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(document[k]))));
        }
        while (!token.empty() && token.front() == '.') token.erase(token.begin());
        return !token.empty() && abbreviations_.count(token) > 0;
    };

    std::size_t i = 0;
    std::size_t sentence_start = std::string_view::npos;
    std::size_t last_nonspace_end = 0;
    while (i < n) {
        const Decoded d = decode_utf8(document, i);
        if (is_space_cp(d.cp)) {
            i += d.len;
            continue;
        }
        if (sentence_start == std::string_view::npos) {
            sentence_start = i;
        }
        last_nonspace_end = i + d.len;

        if (d.cp == U'.' || d.cp == U'!' || d.cp == U'?') {
            // Split when whitespace and then an uppercase letter or digit
            // follow, unless this period closes an abbreviation.
            std::size_t j = i + d.len;
            bool saw_space = false;
            char32_t next_cp = 0;
            while (j < n) {
                const Decoded nd = decode_utf8(document, j);
                if (!is_space_cp(nd.cp)) {
                    next_cp = nd.cp;
                    break;
                }
                saw_space = true;
                j += nd.len;
            }
            const bool boundary = saw_space && next_cp != 0 &&
                                  (is_upper_cp(next_cp) || is_ascii_digit(next_cp)) &&
                                  !(d.cp == U'.' && abbreviation_before(i));
            if (boundary) {
                spans.push_back({sentence_start, i + d.len});
                sentence_start = std::string_view::npos;
            }
        }
        i += d.len;
    }
    if (sentence_start != std::string_view::npos) {
        spans.push_back({sentence_start, last_nonspace_end});
    }
    return spans;
}

std::vector<std::string> Normalizer::tokenize(std::string_view sentence) {
    std::vector<std::string> tokens;
    std::string current;
    const std::size_t n = sentence.size();
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    std::size_t i = 0;
    while (i < n) {
        const Decoded d = decode_utf8(sentence, i);
        if (is_word_cp(d.cp)) {
            current.append(sentence.substr(i, d.len));
        } else if (is_connector_cp(d.cp) && !current.empty()) {
            // Keep '-', '.' and apostrophes only between word characters.
            const std::size_t next = i + d.len;
            if (next < n && is_word_cp(decode_utf8(sentence, next).cp)) {
                current.append(sentence.substr(i, d.len));
            } else {
                flush();
            }
        } else {
            flush();
        }
        i += d.len;
    }
    flush();
    return tokens;
}

std::string Normalizer::normalize(std::string_view token) const {
    // Fold case, then compose combining accents onto their base letters so
    // precomposed and decomposed spellings agree byte for byte.
    std::string folded;
    folded.reserve(token.size());
    bool has_digit = false;
    std::u32string cps;
    for (std::size_t i = 0; i < token.size();) {
        const Decoded d = decode_utf8(token, i);
        const char32_t low = to_lower_cp(d.cp);
        if (is_ascii_digit(low)) has_digit = true;
        if (is_combining_mark(low) && !cps.empty()) {
            if (const char32_t composed = compose_pair(cps.back(), low)) {
                cps.back() = composed;
                i += d.len;
                continue;
            }
        }
        cps.push_back(low);
        i += d.len;
    }
    for (const char32_t cp : cps) encode_utf8(cp, folded);

    if (has_digit) return folded;  // numbers and mixed alphanumerics pass through

    if (folded.size() > 2 && ends_with(folded, "'s")) {
        folded.resize(folded.size() - 2);
    }

    if (auto it = lemma_map_.find(folded); it != lemma_map_.end()) {
        return it->second;
    }

    // Plural suffix rules.
    if (folded.size() >= 5 && ends_with(folded, "ies")) {
        folded.resize(folded.size() - 3);
        folded.push_back('y');
    } else if (folded.size() >= 4 && ends_with(folded, "es") &&
               (ends_with(std::string_view(folded).substr(0, folded.size() - 2), "ss") ||
                folded[folded.size() - 3] == 'x' || folded[folded.size() - 3] == 'z' ||
                ends_with(std::string_view(folded).substr(0, folded.size() - 2), "ch") ||
                ends_with(std::string_view(folded).substr(0, folded.size() - 2), "sh"))) {
        folded.resize(folded.size() - 2);
    } else if (folded.size() >= 3 && folded.back() == 's' && !ends_with(folded, "ss") &&
               !ends_with(folded, "us") && !ends_with(folded, "is")) {
        folded.pop_back();
    }
    return folded;
}

std::vector<std::string> Normalizer::normalize_tokens(std::string_view sentence) const {
    std::vector<std::string> out;
    for (const std::string& raw : tokenize(sentence)) {
        std::string norm = normalize(raw);
        if (!norm.empty()) out.push_back(std::move(norm));
    }
    return out;
}

std::vector<NormalizedSentence> Normalizer::process(std::string_view document) const {
    std::vector<NormalizedSentence> sentences;
    for (const SentenceSpan& span : split_sentences(document)) {
        NormalizedSentence s;
        s.span = span;
        s.tokens = normalize_tokens(document.substr(span.begin, span.end - span.begin));
        sentences.push_back(std::move(s));
    }
    return sentences;
}

}  // namespace sefkit::textnorm
