#pragma once

// Independent reference implementations the tests check the library
// against. These deliberately avoid the production code paths: the counter
// scans alias sequences naively, Pearson uses the one-pass raw-moment
// formula, and the bucket lookup is a linear scan.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sefkit/core.hpp"
#include "sefkit/textnorm.hpp"

namespace oracles {

using sefkit::Count;
using sefkit::FactEntry;
using sefkit::FrequencyTable;

inline bool contains_tokens(const std::vector<std::string>& haystack,
                            const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (haystack[i + k] != needle[k]) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

// O(sentences x facts x aliases^2) scan; binary per-sentence counting.
inline FrequencyTable brute_force_count(
    const std::vector<FactEntry>& catalog,
    const std::vector<std::pair<std::string, std::string>>& documents,
    const sefkit::textnorm::Normalizer& norm,
    const std::vector<std::size_t>* doc_slices = nullptr, std::size_t n_slices = 0) {
    struct Patterns {
        std::vector<std::vector<std::string>> subject;
        std::vector<std::vector<std::string>> object;
    };
    std::vector<Patterns> patterns(catalog.size());
    for (std::size_t f = 0; f < catalog.size(); ++f) {
        for (const auto& alias : catalog[f].subject.aliases) {
            patterns[f].subject.push_back(norm.normalize_tokens(alias));
        }
        for (const auto& alias : catalog[f].object.aliases) {
            patterns[f].object.push_back(norm.normalize_tokens(alias));
        }
    }

    FrequencyTable table;
    for (const auto& fact : catalog) table.counts[fact.fact_id] = 0;
    if (doc_slices != nullptr) {
        table.slices.resize(n_slices);
        for (auto& slice : table.slices) {
            for (const auto& fact : catalog) slice[fact.fact_id] = 0;
        }
    }

    for (std::size_t d = 0; d < documents.size(); ++d) {
        for (const auto& sentence : norm.process(documents[d].second)) {
            for (std::size_t f = 0; f < catalog.size(); ++f) {
                const auto any = [&](const std::vector<std::vector<std::string>>& seqs) {
                    for (const auto& seq : seqs) {
                        if (contains_tokens(sentence.tokens, seq)) return true;
                    }
                    return false;
                };
                if (any(patterns[f].subject) && any(patterns[f].object)) {
                    ++table.counts[catalog[f].fact_id];
                    if (doc_slices != nullptr) {
                        ++table.slices[(*doc_slices)[d]][catalog[f].fact_id];
                    }
                }
            }
        }
    }
    return table;
}

inline std::size_t linear_scan_bucket(const sefkit::BucketSpec& spec, Count x) {
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto upper = spec.upper(i);
        if (x >= spec.lower(i) && (!upper || x < *upper)) return i;
    }
    return spec.size();  // unreachable for a valid spec
}

// Textbook raw-moment Pearson (different algebra from the library's
// centered two-pass form).
inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const double num = n * sxy - sx * sy;
    const double den = std::sqrt(n * sxx - sx * sx) * std::sqrt(n * syy - sy * sy);
    if (den == 0.0 || !std::isfinite(den)) return std::numeric_limits<double>::quiet_NaN();
    return num / den;
}

}  // namespace oracles
