// Benchmark: serial reference kernels vs their OpenMP counterparts.
//
// Covers the two hot paths. Corpus counting compares the naive brute-force
// scanner (tests' oracle), the serial Aho-Corasick pass, and the OpenMP
// pass at several worker counts. Likelihood evaluation compares the
// ungrouped reference, the grouped serial kernel, and the grouped parallel
// kernel.

#include <omp.h>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "sefkit/alphafit.hpp"
#include "sefkit/matcher.hpp"
#include "sefkit/synth.hpp"
#include "sefkit/textnorm.hpp"

using namespace sefkit;
using Clock = std::chrono::steady_clock;

namespace {

double seconds(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <typename Fn>
double time_once(Fn&& fn) {
    const auto start = Clock::now();
    fn();
    return seconds(start, Clock::now());
}

// Naive scanner from the test oracle, duplicated here so the benchmark
// binary has no test-code dependency.
std::uint64_t brute_force_pass(const std::vector<FactEntry>& catalog,
                               const std::vector<std::pair<std::string, std::string>>& docs,
                               const textnorm::Normalizer& norm) {
    struct Patterns {
        std::vector<std::vector<std::string>> subject, object;
    };
    std::vector<Patterns> patterns(catalog.size());
    for (std::size_t f = 0; f < catalog.size(); ++f) {
        for (const auto& a : catalog[f].subject.aliases)
            patterns[f].subject.push_back(norm.normalize_tokens(a));
        for (const auto& a : catalog[f].object.aliases)
            patterns[f].object.push_back(norm.normalize_tokens(a));
    }
    const auto contains = [](const std::vector<std::string>& hay,
                             const std::vector<std::string>& needle) {
        if (needle.empty() || needle.size() > hay.size()) return false;
        for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
            bool ok = true;
            for (std::size_t k = 0; k < needle.size(); ++k) {
                if (hay[i + k] != needle[k]) {
                    ok = false;
                    break;
                }
            }
            if (ok) return true;
        }
        return false;
    };
    std::uint64_t total = 0;
    for (const auto& [id, text] : docs) {
        (void)id;
        for (const auto& sentence : norm.process(text)) {
            for (const auto& p : patterns) {
                const auto any = [&](const std::vector<std::vector<std::string>>& seqs) {
                    for (const auto& s : seqs) {
                        if (contains(sentence.tokens, s)) return true;
                    }
                    return false;
                };
                if (any(p.subject) && any(p.object)) ++total;
            }
        }
    }
    return total;
}

void bench_counting(std::size_t n_facts, std::size_t filler_sentences, Count zipf_max) {
    const textnorm::Normalizer norm;
    const auto catalog = synth::gen_catalog(n_facts, 2, 2, 1);

    synth::CorpusSpec spec;
    const auto targets = synth::zipf_counts(n_facts, 1.1, zipf_max, 7);
    std::uint64_t planted = 0;
    for (std::size_t i = 0; i < n_facts; ++i) {
        spec.targets[catalog[i].fact_id] = targets[i];
        planted += targets[i];
    }
    spec.filler_sentences = filler_sentences;
    spec.documents = 64;
    spec.seed = 3;
    const auto corpus_data = synth::gen_corpus(catalog, spec, norm);
    const auto corpus = matcher::Corpus::from_memory(corpus_data.documents);
    const std::size_t n_sentences = planted + filler_sentences;

    std::printf("counting: %zu facts, %zu sentences (%llu planted)\n", n_facts, n_sentences,
                static_cast<unsigned long long>(planted));

    const auto automaton = matcher::AliasAutomaton::build(catalog, norm);

    // Brute force on a slice of the corpus, extrapolated.
    const std::size_t brute_docs = 4;
    std::vector<std::pair<std::string, std::string>> brute_subset(
        corpus_data.documents.begin(),
        corpus_data.documents.begin() + static_cast<std::ptrdiff_t>(brute_docs));
    const double brute_time = time_once([&] { brute_force_pass(catalog, brute_subset, norm); });
    const double brute_rate =
        static_cast<double>(n_sentences) * (static_cast<double>(brute_docs) / 64.0) / brute_time;

    double serial_time = 0.0;
    matcher::CountResult serial_result;
    serial_time = time_once(
        [&] { serial_result = matcher::count_corpus_serial(automaton, corpus, norm); });
    const double serial_rate = static_cast<double>(n_sentences) / serial_time;

    std::printf("  %-28s %10.0f sentences/s\n", "brute-force oracle", brute_rate);
    std::printf("  %-28s %10.0f sentences/s  (baseline)\n", "aho-corasick serial", serial_rate);

    std::vector<int> worker_counts = {1, 2, 4};
    if (omp_get_max_threads() > 4) worker_counts.push_back(omp_get_max_threads());
    for (const int workers : worker_counts) {
        matcher::CountResult result;
        const double t = time_once(
            [&] { result = matcher::count_corpus(automaton, corpus, norm, nullptr, workers); });
        const bool identical = result.table == serial_result.table;
        std::printf("  aho-corasick omp x%-9d %10.0f sentences/s  (%.2fx)%s\n", workers,
                    static_cast<double>(n_sentences) / t, serial_time / t,
                    identical ? "" : "  MISMATCH");
    }
    std::printf("\n");
}

void bench_likelihood(std::size_t n_models, std::size_t n_facts) {
    std::printf("likelihood: %zu models x %zu facts\n", n_models, n_facts);
    std::vector<alphafit::ModelObservations> models;
    alphafit::Params params;
    params.l0 = 0.05;
    params.x0 = 0.9;
    for (std::size_t m = 0; m < n_models; ++m) {
        FrequencyTable table;
        const auto counts = synth::zipf_counts(n_facts, 1.1, 8192, 11 * (m + 1));
        for (std::size_t i = 0; i < n_facts; ++i) {
            table.counts["F" + std::to_string(i)] = counts[i];
        }
        const AnswerLog log =
            synth::gen_respondent(table, 0.05, 0.9, 0.1, m + 1, "m" + std::to_string(m));
        models.push_back(alphafit::ModelObservations::join(table, log));
        params.alphas.push_back(0.1);
    }

    const int repeats = 200;
    const double reference_time = time_once([&] {
        for (int r = 0; r < repeats / 10; ++r) {
            alphafit::nll_reference(models, params, 1e-9);
        }
    });
    std::printf("  %-28s %10.1f evals/s\n", "ungrouped reference",
                (repeats / 10) / reference_time);

    const double serial_time = time_once([&] {
        for (int r = 0; r < repeats; ++r) {
            alphafit::nll(models, params, 1e-9, 1);
            alphafit::nll_gradient(models, params, 1e-9, 1);
        }
    });
    std::printf("  %-28s %10.1f evals/s  (baseline, value+gradient)\n", "grouped serial",
                repeats / serial_time);

    std::vector<int> worker_counts = {2, 4};
    if (omp_get_max_threads() > 4) worker_counts.push_back(omp_get_max_threads());
    for (const int workers : worker_counts) {
        const double t = time_once([&] {
            for (int r = 0; r < repeats; ++r) {
                alphafit::nll(models, params, 1e-9, workers);
                alphafit::nll_gradient(models, params, 1e-9, workers);
            }
        });
        std::printf("  grouped omp x%-15d %10.1f evals/s  (%.2fx)\n", workers, repeats / t,
                    serial_time / t);
    }
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sefkit benchmarks: serial reference vs OpenMP kernels"};
    std::size_t facts = 500;
    std::size_t filler = 100000;
    std::size_t models = 8;
    std::size_t fit_facts = 40000;
    Count zipf_max = 256;
    app.add_option("--facts", facts, "catalog size for the counting benchmark");
    app.add_option("--filler", filler, "filler sentences in the synthetic corpus");
    app.add_option("--zipf-max", zipf_max, "max planted count per fact");
    app.add_option("--models", models, "models in the likelihood benchmark");
    app.add_option("--fit-facts", fit_facts, "facts per model in the likelihood benchmark");
    CLI11_PARSE(app, argc, argv);

    std::printf("threads available: %d\n\n", omp_get_max_threads());
    bench_counting(facts, filler, zipf_max);
    bench_likelihood(models, fit_facts);
    return 0;
}
