// sefkit: corpus fact-frequency statistics and sample-efficiency metrics.
//
// Subcommands cover the full pipeline: count fact frequencies in a corpus,
// bucket accuracies and WASB, the power-law likelihood fit, per-slice
// trajectories and metric correlations, frequency-biased splits, and
// synthetic ground-truth generation. Every output embeds a manifest with
// input hashes and seeds; reruns with identical inputs are byte-identical.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sefkit/alphafit.hpp"
#include "sefkit/core.hpp"
#include "sefkit/dynamics.hpp"
#include "sefkit/error.hpp"
#include "sefkit/hash.hpp"
#include "sefkit/io.hpp"
#include "sefkit/matcher.hpp"
#include "sefkit/metrics.hpp"
#include "sefkit/splitgen.hpp"
#include "sefkit/synth.hpp"
#include "sefkit/textnorm.hpp"
#include "sefkit/version.hpp"

namespace fs = std::filesystem;
using namespace sefkit;

namespace {

// ---------------------------------------------------------------------------
// Shared option state
// ---------------------------------------------------------------------------

struct CommonArgs {
    std::string facts_path;
    std::string counts_path;
    std::vector<std::string> answers_paths;
    std::string out_path;
    double lambda = metrics::kDefaultLambda;
    std::string buckets_path;
    std::uint64_t seed = 0;
    int workers = 0;
};

Json make_manifest(const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& inputs) {
    Json m = Json::object();
    m["tool"] = kToolName;
    m["version"] = kToolVersion;
    m["command"] = command;
    Json in = Json::object();
    for (const auto& [path, hash] : inputs) {
        in[path] = hash;
    }
    m["inputs"] = std::move(in);
    return m;
}

void emit_json(const std::string& out_path, const Json& j) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, text);
    }
}

BucketSpec load_bucket_spec(const std::string& path) {
    if (path.empty()) {
        return metrics::default_buckets();
    }
    const Json j = Json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        throw ValidationError("bucket spec must be a JSON array of lower bounds: " + path);
    }
    BucketSpec spec;
    for (const auto& v : j) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ValidationError("bucket lower bounds must be non-negative integers");
        }
        spec.lower_bounds.push_back(v.get<Count>());
    }
    spec.validate();
    return spec;
}

std::vector<AnswerLog> load_all_answer_logs(const std::vector<std::string>& paths) {
    std::vector<AnswerLog> logs;
    for (const std::string& path : paths) {
        if (fs::is_directory(path)) {
            std::vector<std::string> files;
            for (const auto& entry : fs::directory_iterator(path)) {
                if (entry.is_regular_file()) files.push_back(entry.path().string());
            }
            std::sort(files.begin(), files.end());
            for (const std::string& file : files) {
                for (AnswerLog& log : load_answer_logs(file)) {
                    logs.push_back(std::move(log));
                }
            }
        } else {
            for (AnswerLog& log : load_answer_logs(path)) {
                logs.push_back(std::move(log));
            }
        }
    }
    if (logs.empty()) {
        throw ValidationError("no answer records found");
    }
    return logs;
}

Json bucket_report_json(const metrics::BucketAccuracyReport& report) {
    Json rows = Json::array();
    for (const auto& row : report.rows) {
        Json r = Json::object();
        r["lower"] = row.lower;
        if (row.upper) {
            r["upper"] = *row.upper;
        } else {
            r["upper"] = nullptr;
        }
        r["n_facts"] = row.n_facts;
        r["n_correct"] = row.n_correct;
        if (row.defined()) {
            r["accuracy"] = row.accuracy;
        } else {
            r["accuracy"] = nullptr;
        }
        r["weight"] = row.weight;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string bucket_report_csv(const metrics::BucketAccuracyReport& report, const Json& manifest) {
    std::string out = "# manifest: " + manifest.dump() + "\n";
    out += "lower,upper,n_facts,n_correct,accuracy,weight\n";
    char buf[128];
    for (const auto& row : report.rows) {
        out += std::to_string(row.lower);
        out += ',';
        out += row.upper ? std::to_string(*row.upper) : "inf";
        std::snprintf(buf, sizeof(buf), ",%zu,%zu,", row.n_facts, row.n_correct);
        out += buf;
        if (row.defined()) {
            std::snprintf(buf, sizeof(buf), "%.17g", row.accuracy);
            out += buf;
        } else {
            out += "nan";
        }
        std::snprintf(buf, sizeof(buf), ",%.17g", row.weight);
        out += buf;
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// count
// ---------------------------------------------------------------------------

struct CountArgs {
    std::string facts_path;
    std::string corpus_path;
    std::string out_path;
    std::size_t slices = 0;
    int workers = 0;
    std::string abbrev_path;
    std::string lemma_path;
};

int run_count(const CountArgs& args) {
    const auto catalog = load_fact_catalog(args.facts_path);
    const textnorm::Normalizer norm =
        args.abbrev_path.empty() ? textnorm::Normalizer()
                                 : textnorm::Normalizer(args.abbrev_path, args.lemma_path);
    const auto automaton = matcher::AliasAutomaton::build(catalog, norm);
    const matcher::Corpus corpus = matcher::Corpus::open(args.corpus_path);

    std::optional<matcher::SliceManifest> manifest;
    if (args.slices > 0) {
        manifest = matcher::SliceManifest::even(corpus.size(), args.slices);
    }
    const matcher::CountResult result = matcher::count_corpus(
        automaton, corpus, norm, manifest ? &*manifest : nullptr, args.workers);

    Json m = make_manifest("count", {{args.facts_path, file_hash(args.facts_path)}});
    m["normalization_data"] = norm.data_hash();
    m["corpus"] = args.corpus_path;
    m["corpus_documents"] = corpus.doc_ids();
    m["documents"] = result.documents;
    m["sentences"] = result.sentences;
    if (args.slices > 0) m["slices"] = args.slices;
    Json skips = Json::array();
    for (const auto& skip : result.skipped) {
        Json s = Json::object();
        s["doc"] = skip.doc_id;
        s["reason"] = skip.reason;
        skips.push_back(std::move(s));
    }
    m["skip_report"] = std::move(skips);

    save_frequency_table(args.out_path, result.table, m);
    std::cerr << "counted " << result.sentences << " sentences in " << result.documents
              << " documents (" << result.skipped.size() << " skipped)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// wasb / buckets / threshold-acc
// ---------------------------------------------------------------------------

int run_wasb(const CommonArgs& args, bool buckets_only, const std::string& csv_path) {
    const FrequencyTable table = load_frequency_table(args.counts_path);
    const auto logs = load_all_answer_logs(args.answers_paths);
    const BucketSpec spec = load_bucket_spec(args.buckets_path);

    std::vector<std::pair<std::string, std::string>> inputs = {
        {args.counts_path, file_hash(args.counts_path)}};
    for (const auto& path : args.answers_paths) {
        if (!fs::is_directory(path)) inputs.emplace_back(path, file_hash(path));
    }
    Json manifest = make_manifest(buckets_only ? "buckets" : "wasb", inputs);
    manifest["lambda"] = args.lambda;

    Json out = Json::object();
    out["lambda"] = args.lambda;
    Json models = Json::array();
    std::string csv;
    for (const AnswerLog& log : logs) {
        const auto report = metrics::bucket_report(table, log, spec, args.lambda);
        Json entry = Json::object();
        entry["model_id"] = log.model_id;
        entry["checkpoint_id"] = log.checkpoint_id;
        entry["n_facts"] = log.records.size();
        entry["accuracy"] = metrics::overall_accuracy(log);
        if (!buckets_only) {
            entry["wasb"] = metrics::wasb(report);
        }
        entry["buckets"] = bucket_report_json(report);
        models.push_back(std::move(entry));
        if (!csv_path.empty()) {
            csv += "# model: " + log.model_id + " checkpoint: " + log.checkpoint_id + "\n";
            csv += bucket_report_csv(report, manifest);
        }
    }
    out["models"] = std::move(models);
    out["manifest"] = manifest;

    if (!csv_path.empty()) {
        write_file(csv_path, csv);
    }
    emit_json(args.out_path, out);
    return 0;
}

int run_threshold_acc(const CommonArgs& args, Count threshold) {
    const FrequencyTable table = load_frequency_table(args.counts_path);
    const auto logs = load_all_answer_logs(args.answers_paths);

    std::vector<std::pair<std::string, std::string>> inputs = {
        {args.counts_path, file_hash(args.counts_path)}};
    for (const auto& path : args.answers_paths) {
        if (!fs::is_directory(path)) inputs.emplace_back(path, file_hash(path));
    }
    Json out = Json::object();
    out["threshold"] = threshold;
    Json models = Json::array();
    for (const AnswerLog& log : logs) {
        const auto acc = metrics::threshold_accuracy(table, log, threshold);
        Json entry = Json::object();
        entry["model_id"] = log.model_id;
        entry["checkpoint_id"] = log.checkpoint_id;
        entry["acc_low"] = acc.low ? Json(*acc.low) : Json(nullptr);
        entry["acc_high"] = acc.high ? Json(*acc.high) : Json(nullptr);
        entry["n_low"] = acc.n_low;
        entry["n_high"] = acc.n_high;
        models.push_back(std::move(entry));
    }
    out["models"] = std::move(models);
    out["manifest"] = make_manifest("threshold-acc", inputs);
    emit_json(args.out_path, out);
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
    CommonArgs common;
    std::optional<double> fix_l0;
    std::optional<double> fix_x0;
    int starts = 1;
    int max_iter = 2000;
    double tol = 1e-10;
};

int run_fit(const FitArgs& args) {
    const FrequencyTable table = load_frequency_table(args.common.counts_path);
    const auto logs = load_all_answer_logs(args.common.answers_paths);

    // One respondent per (model, checkpoint); duplicate model names are
    // disambiguated by checkpoint.
    std::vector<AnswerLog> keyed = logs;
    std::map<std::string, std::size_t> name_count;
    for (const AnswerLog& log : logs) ++name_count[log.model_id];
    for (AnswerLog& log : keyed) {
        if (name_count[log.model_id] > 1) {
            log.model_id += "@" + log.checkpoint_id;
        }
    }

    alphafit::FitConfig config;
    config.fix_l0 = args.fix_l0;
    config.fix_x0 = args.fix_x0;
    config.starts = args.starts;
    config.seed = args.common.seed;
    config.workers = args.common.workers > 0 ? args.common.workers : 1;
    config.max_iter = args.max_iter;
    config.tol = args.tol;

    const std::vector<FrequencyTable> tables(keyed.size(), table);
    const FitResult result = alphafit::fit(tables, keyed, config);

    std::vector<std::pair<std::string, std::string>> inputs = {
        {args.common.counts_path, file_hash(args.common.counts_path)}};
    for (const auto& path : args.common.answers_paths) {
        if (!fs::is_directory(path)) inputs.emplace_back(path, file_hash(path));
    }
    Json manifest = make_manifest("fit", inputs);
    manifest["seed"] = args.common.seed;
    manifest["starts"] = args.starts;
    if (args.fix_l0) manifest["fix_l0"] = *args.fix_l0;
    if (args.fix_x0) manifest["fix_x0"] = *args.fix_x0;

    Json out = Json::object();
    out["l0"] = result.l0;
    out["x0"] = result.x0;
    Json alphas = Json::object();
    for (const auto& [model, alpha] : result.alphas) alphas[model] = alpha;
    out["alphas"] = std::move(alphas);
    out["nll"] = result.nll;
    out["converged"] = result.converged;
    out["degenerate_models"] = result.degenerate_models;
    out["trace"] = result.trace;
    out["manifest"] = std::move(manifest);
    emit_json(args.common.out_path, out);

    for (const auto& model : result.degenerate_models) {
        std::cerr << "warning: degenerate fit for model '" << model
                  << "' (no incorrect answers); alpha reported at the cap\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// dynamics / correlate
// ---------------------------------------------------------------------------

struct DynamicsArgs {
    CommonArgs common;
    std::string slice_counts_path;
    bool refit_dataset_params = false;
    std::optional<double> fix_l0;
    std::optional<double> fix_x0;
};

std::vector<FrequencyTable> load_cumulative_tables(const std::string& path) {
    std::vector<FrequencyTable> cumulative;
    if (fs::is_directory(path)) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file()) files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        for (const std::string& file : files) {
            cumulative.push_back(load_frequency_table(file));
        }
    } else {
        // A single sliced table: cumulative counts derived per slice.
        const FrequencyTable table = load_frequency_table(path);
        if (!table.has_slices()) {
            throw ValidationError("table has no slices: " + path);
        }
        for (std::size_t s = 0; s < table.slice_count(); ++s) {
            cumulative.push_back(matcher::cumulative_counts(table, s));
        }
    }
    if (cumulative.empty()) {
        throw ValidationError("no slice tables found at " + path);
    }
    return cumulative;
}

int run_dynamics(const DynamicsArgs& args) {
    const auto cumulative = load_cumulative_tables(args.slice_counts_path);
    const auto logs = load_all_answer_logs(args.common.answers_paths);

    dynamics::PerSliceOptions options;
    options.lambda = args.common.lambda;
    options.buckets = load_bucket_spec(args.common.buckets_path);
    options.refit_dataset_params = args.refit_dataset_params;
    options.workers = args.common.workers;
    options.fit.fix_l0 = args.fix_l0;
    options.fit.fix_x0 = args.fix_x0;

    const dynamics::TrajectoryTable traj = dynamics::per_slice_metrics(cumulative, logs, options);

    Json manifest = make_manifest("dynamics", {});
    manifest["slice_counts"] = args.slice_counts_path;
    manifest["lambda"] = args.common.lambda;
    manifest["slices"] = traj.slice_count;
    manifest["refit_dataset_params"] = args.refit_dataset_params;

    const std::string csv = dynamics::format_trajectory_csv(traj, "manifest: " + manifest.dump());
    if (args.common.out_path.empty()) {
        std::cout << csv;
    } else {
        write_file(args.common.out_path, csv);
    }
    return 0;
}

int run_correlate(const std::string& traj_path, const std::string& mode, bool rank,
                  const std::string& out_path) {
    const auto traj = dynamics::parse_trajectory_csv(read_file(traj_path));
    const dynamics::CorrMode corr_mode =
        mode == "final" ? dynamics::CorrMode::final_state : dynamics::CorrMode::all_slices;
    const auto corr = dynamics::correlation_matrix(traj, corr_mode, rank);

    Json manifest = make_manifest("correlate", {{traj_path, file_hash(traj_path)}});
    manifest["mode"] = mode;
    manifest["rank"] = rank;
    const std::string csv = dynamics::format_correlation_csv(corr, "manifest: " + manifest.dump());
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        write_file(out_path, csv);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

int run_split(const CommonArgs& args, std::size_t size, const std::string& profile,
              std::optional<Count> threshold) {
    const FrequencyTable table = load_frequency_table(args.counts_path);
    const BucketSpec spec = load_bucket_spec(args.buckets_path);
    const Count effective_threshold =
        threshold ? *threshold : splitgen::median_lower_bound(table, spec);
    const auto profile_value = profile == "low" ? splitgen::Profile::low : splitgen::Profile::high;
    const auto ids =
        splitgen::sample_split(table, size, profile_value, effective_threshold, args.seed);

    Json manifest = make_manifest("split", {{args.counts_path, file_hash(args.counts_path)}});
    manifest["seed"] = args.seed;

    Json out = Json::object();
    out["profile"] = profile;
    out["size"] = size;
    out["threshold"] = effective_threshold;
    out["fact_ids"] = ids;
    out["manifest"] = std::move(manifest);
    emit_json(args.out_path, out);
    return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthCorpusArgs {
    std::string facts_path;
    std::string targets_path;
    Count zipf_max = 0;
    double zipf_exponent = 1.1;
    std::size_t filler = 0;
    std::size_t docs = 1;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string truth_path;
};

int run_synth_corpus(const SynthCorpusArgs& args) {
    const auto catalog = load_fact_catalog(args.facts_path);
    const textnorm::Normalizer norm;

    synth::CorpusSpec spec;
    spec.filler_sentences = args.filler;
    spec.documents = args.docs;
    spec.seed = args.seed;
    if (!args.targets_path.empty()) {
        const Json j = Json::parse(read_file(args.targets_path), nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ValidationError("targets must be a JSON object: " + args.targets_path);
        }
        for (const auto& [id, v] : j.items()) {
            spec.targets[id] = v.get<Count>();
        }
    } else if (args.zipf_max > 0) {
        const auto counts =
            synth::zipf_counts(catalog.size(), args.zipf_exponent, args.zipf_max, args.seed);
        for (std::size_t i = 0; i < catalog.size(); ++i) {
            spec.targets[catalog[i].fact_id] = counts[i];
        }
    } else {
        throw ValidationError("synth corpus needs --targets or --zipf-max");
    }

    const synth::SyntheticCorpus corpus = synth::gen_corpus(catalog, spec, norm);
    for (const auto& [doc_id, text] : corpus.documents) {
        write_file((fs::path(args.out_dir) / doc_id).string(), text);
    }

    Json manifest = make_manifest("synth corpus", {{args.facts_path, file_hash(args.facts_path)}});
    manifest["seed"] = args.seed;
    manifest["documents"] = corpus.documents.size();
    manifest["normalization_data"] = norm.data_hash();
    save_frequency_table(args.truth_path.empty() ? (fs::path(args.out_dir) / "truth.json").string()
                                                 : args.truth_path,
                         corpus.truth, manifest);
    std::cerr << "wrote " << corpus.documents.size() << " documents to " << args.out_dir << "\n";
    return 0;
}

struct SynthRespondentArgs {
    std::string counts_path;
    double l0 = 0.0;
    double x0 = 0.88;
    double alpha = 0.1;
    std::uint64_t seed = 0;
    std::string model_id = "synthetic";
    std::string checkpoint_id = "final";
    std::string out_path;
};

int run_synth_respondent(const SynthRespondentArgs& args) {
    const FrequencyTable table = load_frequency_table(args.counts_path);
    const AnswerLog log = synth::gen_respondent(table, args.l0, args.x0, args.alpha, args.seed,
                                                args.model_id, args.checkpoint_id);
    Json manifest =
        make_manifest("synth respondent", {{args.counts_path, file_hash(args.counts_path)}});
    manifest["seed"] = args.seed;
    manifest["l0"] = args.l0;
    manifest["x0"] = args.x0;
    manifest["alpha"] = args.alpha;
    const std::string text = format_answer_logs({log}, manifest);
    if (args.out_path.empty()) {
        std::cout << text;
    } else {
        write_file(args.out_path, text);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int run_validate(const CommonArgs& args) {
    std::vector<FactEntry> catalog;
    if (!args.facts_path.empty()) {
        catalog = load_fact_catalog(args.facts_path);
    }
    const FrequencyTable table = load_frequency_table(args.counts_path);
    std::vector<AnswerLog> logs;
    if (!args.answers_paths.empty()) {
        logs = load_all_answer_logs(args.answers_paths);
    }
    const JoinReport report = validate_join(catalog, table, logs);
    Json out = report.to_json();
    out["manifest"] = make_manifest("validate", {{args.counts_path, file_hash(args.counts_path)}});
    emit_json(args.out_path, out);
    return report.joinable() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sefkit: fact-frequency statistics and sample-efficiency metrics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // count
    CountArgs count_args;
    auto* count = app.add_subcommand("count", "count fact co-occurrences in a corpus");
    count->add_option("--facts", count_args.facts_path, "fact catalog (jsonl)")->required();
    count->add_option("--corpus", count_args.corpus_path,
                      "corpus: directory of text files or a jsonl file")
        ->required();
    count->add_option("--slices", count_args.slices, "number of contiguous training slices");
    count->add_option("--workers", count_args.workers, "worker threads (0 = all cores)");
    auto* abbrev_opt =
        count->add_option("--abbrev", count_args.abbrev_path, "abbreviation list override");
    auto* lemma_opt =
        count->add_option("--lemmas", count_args.lemma_path, "lemma exception table override");
    abbrev_opt->needs(lemma_opt);
    lemma_opt->needs(abbrev_opt);
    count->add_option("--out", count_args.out_path, "output frequency table (json)")->required();

    // wasb
    CommonArgs wasb_args;
    std::string wasb_csv;
    auto* wasb_cmd = app.add_subcommand("wasb", "weighted accuracy on frequency buckets");
    wasb_cmd->add_option("--counts", wasb_args.counts_path, "frequency table")->required();
    wasb_cmd->add_option("--answers", wasb_args.answers_paths, "answer log(s), repeatable or comma-separated")->required()->delimiter(',');
    wasb_cmd->add_option("--lambda", wasb_args.lambda, "bucket weight decay");
    wasb_cmd->add_option("--buckets", wasb_args.buckets_path, "bucket spec (json array)");
    wasb_cmd->add_option("--out", wasb_args.out_path, "JSON report path (default stdout)");
    wasb_cmd->add_option("--csv", wasb_csv, "per-bucket CSV path");

    // buckets
    CommonArgs buckets_args;
    std::string buckets_csv;
    auto* buckets_cmd = app.add_subcommand("buckets", "per-bucket accuracy table");
    buckets_cmd->add_option("--counts", buckets_args.counts_path, "frequency table")->required();
    buckets_cmd->add_option("--answers", buckets_args.answers_paths, "answer log(s), repeatable or comma-separated")->required()->delimiter(',');
    buckets_cmd->add_option("--lambda", buckets_args.lambda, "bucket weight decay");
    buckets_cmd->add_option("--buckets", buckets_args.buckets_path, "bucket spec (json array)");
    buckets_cmd->add_option("--out", buckets_args.out_path, "JSON report path (default stdout)");
    buckets_cmd->add_option("--csv", buckets_csv, "per-bucket CSV path");

    // threshold-acc
    CommonArgs thr_args;
    Count thr_threshold = metrics::kDefaultThreshold;
    auto* thr_cmd = app.add_subcommand("threshold-acc", "high/low frequency accuracy split");
    thr_cmd->add_option("--counts", thr_args.counts_path, "frequency table")->required();
    thr_cmd->add_option("--answers", thr_args.answers_paths, "answer log(s), repeatable or comma-separated")->required()->delimiter(',');
    thr_cmd->add_option("--threshold", thr_threshold, "frequency threshold (default 1024)");
    thr_cmd->add_option("--out", thr_args.out_path, "JSON report path (default stdout)");

    // fit
    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "power-law maximum likelihood fit");
    fit_cmd->add_option("--counts", fit_args.common.counts_path, "frequency table")->required();
    fit_cmd->add_option("--answers", fit_args.common.answers_paths, "answer log(s), repeatable or comma-separated")->required()->delimiter(',');
    double fit_fix_l0 = -1.0, fit_fix_x0 = -1.0;
    auto* fl0 = fit_cmd->add_option("--fix-l0", fit_fix_l0, "hold L0 fixed");
    auto* fx0 = fit_cmd->add_option("--fix-x0", fit_fix_x0, "hold x0 fixed");
    fit_cmd->add_option("--seed", fit_args.common.seed, "multi-start jitter seed");
    fit_cmd->add_option("--starts", fit_args.starts, "number of jittered starts");
    fit_cmd->add_option("--max-iter", fit_args.max_iter, "iteration cap");
    fit_cmd->add_option("--tol", fit_args.tol, "NLL convergence tolerance");
    fit_cmd->add_option("--workers", fit_args.common.workers, "NLL evaluation threads");
    fit_cmd->add_option("--out", fit_args.common.out_path, "fit result path (default stdout)");

    // dynamics
    DynamicsArgs dyn_args;
    auto* dyn_cmd = app.add_subcommand("dynamics", "per-slice metric trajectories");
    dyn_cmd->add_option("--slice-counts", dyn_args.slice_counts_path,
                        "sliced table (json) or directory of cumulative tables")
        ->required();
    dyn_cmd->add_option("--answers", dyn_args.common.answers_paths,
                        "answer logs (files or directory)")
        ->delimiter(',')
        ->required();
    dyn_cmd->add_option("--lambda", dyn_args.common.lambda, "bucket weight decay");
    dyn_cmd->add_option("--buckets", dyn_args.common.buckets_path, "bucket spec (json array)");
    double dyn_fix_l0 = -1.0, dyn_fix_x0 = -1.0;
    auto* dl0 = dyn_cmd->add_option("--fix-l0", dyn_fix_l0, "hold L0 fixed");
    auto* dx0 = dyn_cmd->add_option("--fix-x0", dyn_fix_x0, "hold x0 fixed");
    dyn_cmd->add_flag("--refit-dataset-params", dyn_args.refit_dataset_params,
                      "refit (L0, x0) per slice instead of freezing the final fit");
    dyn_cmd->add_option("--workers", dyn_args.common.workers, "fit worker pool size");
    dyn_cmd->add_option("--out", dyn_args.common.out_path, "trajectory CSV (default stdout)");

    // correlate
    std::string corr_traj;
    std::string corr_mode = "final";
    std::string corr_out;
    bool corr_rank = false;
    auto* corr_cmd = app.add_subcommand("correlate", "correlation matrix between metrics");
    corr_cmd->add_option("--traj", corr_traj, "trajectory CSV from `dynamics`")->required();
    corr_cmd->add_option("--mode", corr_mode, "final | all")
        ->check(CLI::IsMember({"final", "all"}));
    corr_cmd->add_flag("--rank", corr_rank, "Spearman instead of Pearson");
    corr_cmd->add_option("--out", corr_out, "correlation CSV (default stdout)");

    // split
    CommonArgs split_args;
    std::size_t split_size = 1000;
    std::string split_profile;
    Count split_threshold_value = 0;
    auto* split_cmd = app.add_subcommand("split", "frequency-biased fact subsample");
    split_cmd->add_option("--counts", split_args.counts_path, "frequency table")->required();
    split_cmd->add_option("--size", split_size, "number of facts to sample")->required();
    split_cmd->add_option("--profile", split_profile, "low | high")
        ->required()
        ->check(CLI::IsMember({"low", "high"}));
    auto* split_thr =
        split_cmd->add_option("--threshold", split_threshold_value,
                              "frequency threshold (default: median bucket lower bound)");
    split_cmd->add_option("--seed", split_args.seed, "sampling seed");
    split_cmd->add_option("--buckets", split_args.buckets_path, "bucket spec (json array)");
    split_cmd->add_option("--out", split_args.out_path, "output id list (default stdout)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "synthetic ground-truth generators");
    synth_cmd->require_subcommand(1);

    SynthCorpusArgs sc_args;
    auto* sc_cmd = synth_cmd->add_subcommand("corpus", "corpus with planted fact occurrences");
    sc_cmd->add_option("--facts", sc_args.facts_path, "fact catalog (jsonl)")->required();
    sc_cmd->add_option("--targets", sc_args.targets_path, "target counts (json object)");
    sc_cmd->add_option("--zipf-max", sc_args.zipf_max, "draw Zipf targets up to this count");
    sc_cmd->add_option("--zipf-exponent", sc_args.zipf_exponent, "Zipf exponent (default 1.1)");
    sc_cmd->add_option("--filler", sc_args.filler, "number of filler sentences");
    sc_cmd->add_option("--docs", sc_args.docs, "number of documents");
    sc_cmd->add_option("--seed", sc_args.seed, "generation seed");
    sc_cmd->add_option("--out-dir", sc_args.out_dir, "output document directory")->required();
    sc_cmd->add_option("--truth", sc_args.truth_path,
                       "ground-truth table path (default <out-dir>/truth.json)");

    SynthRespondentArgs sr_args;
    auto* sr_cmd = synth_cmd->add_subcommand("respondent", "answer log drawn from F(x)");
    sr_cmd->add_option("--counts", sr_args.counts_path, "frequency table")->required();
    sr_cmd->add_option("--l0", sr_args.l0, "error floor L0");
    sr_cmd->add_option("--x0", sr_args.x0, "scale term x0");
    sr_cmd->add_option("--alpha", sr_args.alpha, "sample-efficiency exponent");
    sr_cmd->add_option("--seed", sr_args.seed, "draw seed");
    sr_cmd->add_option("--model-id", sr_args.model_id, "model id for the log");
    sr_cmd->add_option("--checkpoint-id", sr_args.checkpoint_id, "checkpoint id for the log");
    sr_cmd->add_option("--out", sr_args.out_path, "answer log path (default stdout)");

    // validate
    CommonArgs validate_args;
    auto* validate_cmd = app.add_subcommand("validate", "check catalog/table/log joinability");
    validate_cmd->add_option("--facts", validate_args.facts_path, "fact catalog (jsonl)");
    validate_cmd->add_option("--counts", validate_args.counts_path, "frequency table")->required();
    validate_cmd->add_option("--answers", validate_args.answers_paths, "answer log(s)");
    validate_cmd->add_option("--out", validate_args.out_path, "report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version -> 0, usage errors -> 2
    }

    try {
        if (*count) return run_count(count_args);
        if (*wasb_cmd) return run_wasb(wasb_args, false, wasb_csv);
        if (*buckets_cmd) return run_wasb(buckets_args, true, buckets_csv);
        if (*thr_cmd) return run_threshold_acc(thr_args, thr_threshold);
        if (*fit_cmd) {
            if (*fl0) fit_args.fix_l0 = fit_fix_l0;
            if (*fx0) fit_args.fix_x0 = fit_fix_x0;
            return run_fit(fit_args);
        }
        if (*dyn_cmd) {
            if (*dl0) dyn_args.fix_l0 = dyn_fix_l0;
            if (*dx0) dyn_args.fix_x0 = dyn_fix_x0;
            return run_dynamics(dyn_args);
        }
        if (*corr_cmd) return run_correlate(corr_traj, corr_mode, corr_rank, corr_out);
        if (*split_cmd) {
            std::optional<Count> threshold;
            if (*split_thr) threshold = split_threshold_value;
            return run_split(split_args, split_size, split_profile, threshold);
        }
        if (*sc_cmd) return run_synth_corpus(sc_args);
        if (*sr_cmd) return run_synth_respondent(sr_args);
        if (*validate_cmd) return run_validate(validate_args);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
