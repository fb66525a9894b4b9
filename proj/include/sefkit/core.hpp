#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sefkit {

using Json = nlohmann::json;
using Count = std::uint64_t;

// One entity of a fact triple. `label` is folded into `aliases` at load
// time; after catalog validation `aliases` holds every surface form and is
// free of duplicates up to normalization.
struct EntityRef {
    std::string id;
    std::string label;
    std::vector<std::string> aliases;

    bool operator==(const EntityRef&) const = default;
};

// A subject-relation-object triple. Corpus frequency is counted per fact_id.
struct FactEntry {
    std::string fact_id;
    std::string relation_id;
    EntityRef subject;
    EntityRef object;

    bool operator==(const FactEntry&) const = default;
};

// Per-fact sentence-occurrence counts, optionally resolved per training
// slice. `slices` holds the per-slice (non-cumulative) counts; when present
// the slice counts of every fact sum to its total.
struct FrequencyTable {
    std::map<std::string, Count> counts;
    std::vector<std::map<std::string, Count>> slices;

    bool has_slices() const { return !slices.empty(); }
    std::size_t slice_count() const { return slices.size(); }

    // Enforces the slice-sum invariant; throws ValidationError on breach.
    void validate() const;

    bool operator==(const FrequencyTable&) const = default;
};

// Per-model, per-checkpoint record of which facts were answered correctly.
struct AnswerLog {
    std::string model_id;
    std::string checkpoint_id;  // "final" or a decimal slice index
    std::map<std::string, bool> records;

    std::size_t correct_count() const;

    bool operator==(const AnswerLog&) const = default;
};

// Ordered half-open frequency intervals covering [0, inf). Only the lower
// bounds are stored: bucket i is [lower_bounds[i], lower_bounds[i+1]) and
// the last bucket is open-ended, so disjointness and full coverage hold by
// construction. lower_bounds.front() must be 0.
struct BucketSpec {
    std::vector<Count> lower_bounds;

    std::size_t size() const { return lower_bounds.size(); }
    Count lower(std::size_t i) const { return lower_bounds[i]; }
    // nullopt for the final, unbounded bucket.
    std::optional<Count> upper(std::size_t i) const {
        return i + 1 < lower_bounds.size() ? std::optional<Count>(lower_bounds[i + 1])
                                           : std::nullopt;
    }

    void validate() const;

    bool operator==(const BucketSpec&) const = default;
};

// Output of the power-law likelihood fit: dataset parameters and one
// exponent per model, plus the per-iteration NLL trace of the optimizer.
struct FitResult {
    double l0 = 0.0;
    double x0 = 0.0;
    std::map<std::string, double> alphas;
    double nll = 0.0;
    bool converged = false;
    std::vector<double> trace;
    std::vector<std::string> degenerate_models;
};

// ---------------------------------------------------------------------------
// Interchange formats (line-delimited JSON for catalogs and answer logs, a
// single JSON object for frequency tables).
// ---------------------------------------------------------------------------

// Parses a line-delimited fact catalog. Merges each label into its alias
// set, drops alias duplicates up to case folding, and rejects duplicate
// fact ids.
std::vector<FactEntry> load_fact_catalog(const std::string& path);
std::vector<FactEntry> parse_fact_catalog(std::string_view text);

std::string format_fact_catalog(const std::vector<FactEntry>& catalog);
void save_fact_catalog(const std::string& path, const std::vector<FactEntry>& catalog);

// Frequency table JSON: {"counts": {fact_id: count}, "slices": [...],
// "manifest": {...}}. A bare {fact_id: count} object is also accepted.
FrequencyTable load_frequency_table(const std::string& path);
FrequencyTable frequency_table_from_json(const Json& j);
Json frequency_table_to_json(const FrequencyTable& table, const Json& manifest = Json());
void save_frequency_table(const std::string& path, const FrequencyTable& table,
                          const Json& manifest = Json());

// Answer logs: one {model_id, checkpoint_id, fact_id, correct} record per
// line, grouped on load by (model_id, checkpoint_id) in first-seen order.
// Lines carrying a "_manifest" key are skipped.
std::vector<AnswerLog> load_answer_logs(const std::string& path);
std::vector<AnswerLog> parse_answer_logs(std::string_view text);

std::string format_answer_logs(const std::vector<AnswerLog>& logs, const Json& manifest = Json());
void save_answer_logs(const std::string& path, const std::vector<AnswerLog>& logs,
                      const Json& manifest = Json());

// ---------------------------------------------------------------------------
// Join validation
// ---------------------------------------------------------------------------

// Id-set differences between a catalog, a frequency table, and answer logs.
// Empty everywhere == the inputs join cleanly.
struct JoinReport {
    std::vector<std::string> catalog_not_in_table;
    std::vector<std::string> table_not_in_catalog;

    struct LogDiff {
        std::string model_id;
        std::string checkpoint_id;
        std::vector<std::string> log_not_in_table;
        std::vector<std::string> table_not_in_log;
    };
    std::vector<LogDiff> log_diffs;  // only logs with a non-empty diff

    bool joinable() const {
        return catalog_not_in_table.empty() && table_not_in_catalog.empty() && log_diffs.empty();
    }

    Json to_json() const;
};

// Report-only: never throws. Pass an empty catalog to skip the
// catalog/table comparison.
JoinReport validate_join(const std::vector<FactEntry>& catalog, const FrequencyTable& table,
                         const std::vector<AnswerLog>& logs);

}  // namespace sefkit
