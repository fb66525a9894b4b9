#include "sefkit/core.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "sefkit/error.hpp"
#include "sefkit/io.hpp"

namespace sefkit {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

// Splits text into lines, tolerating a missing trailing newline and \r\n.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        fn(line, line_no);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

Json parse_json_line(std::string_view line, std::size_t line_no) {
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
        throw ParseError("malformed JSON record", line_no);
    }
    return j;
}

EntityRef parse_entity(const Json& j, std::size_t line_no, const char* field) {
    if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
        throw ParseError(std::string(field) + " must be an object with a string label", line_no);
    }
    EntityRef e;
    e.label = j["label"].get<std::string>();
    if (e.label.empty()) {
        throw ParseError(std::string(field) + " label is empty", line_no);
    }
    if (j.contains("id") && j["id"].is_string()) {
        e.id = j["id"].get<std::string>();
    }
    // Label first, then aliases, deduplicated case-insensitively; full
    // normalization-level dedup happens when the alias automaton is built.
    std::set<std::string> seen;
    auto push = [&](const std::string& s) {
        if (s.empty()) return;
        if (seen.insert(ascii_lower(s)).second) {
            e.aliases.push_back(s);
        }
    };
    push(e.label);
    if (j.contains("aliases")) {
        if (!j["aliases"].is_array()) {
            throw ParseError(std::string(field) + ".aliases must be an array", line_no);
        }
        for (const auto& a : j["aliases"]) {
            if (!a.is_string()) {
                throw ParseError(std::string(field) + ".aliases entries must be strings", line_no);
            }
            push(a.get<std::string>());
        }
    }
    return e;
}

Count parse_count(const Json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<Count>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<Count>(v.get<std::int64_t>());
    }
    throw ValidationError("count for '" + key + "' must be a non-negative integer");
}

std::map<std::string, Count> parse_count_object(const Json& j, const char* what) {
    if (!j.is_object()) {
        throw ValidationError(std::string(what) + " must be a JSON object");
    }
    std::map<std::string, Count> out;
    for (const auto& [key, value] : j.items()) {
        out.emplace(key, parse_count(value, key));
    }
    return out;
}

Json count_object_to_json(const std::map<std::string, Count>& counts) {
    Json j = Json::object();
    for (const auto& [id, c] : counts) {
        j[id] = c;
    }
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// FrequencyTable / AnswerLog / BucketSpec invariants
// ---------------------------------------------------------------------------

void FrequencyTable::validate() const {
    if (slices.empty()) return;
    std::map<std::string, Count> sums;
    for (const auto& slice : slices) {
        for (const auto& [id, c] : slice) {
            if (counts.find(id) == counts.end()) {
                throw ValidationError("slice count for unknown fact '" + id + "'");
            }
            sums[id] += c;
        }
    }
    for (const auto& [id, total] : counts) {
        auto it = sums.find(id);
        const Count sum = (it == sums.end()) ? 0 : it->second;
        if (sum != total) {
            throw ValidationError("slice counts for fact '" + id + "' sum to " +
                                  std::to_string(sum) + ", total is " + std::to_string(total));
        }
    }
}

std::size_t AnswerLog::correct_count() const {
    std::size_t n = 0;
    for (const auto& [id, correct] : records) {
        (void)id;
        if (correct) ++n;
    }
    return n;
}

void BucketSpec::validate() const {
    if (lower_bounds.empty()) {
        throw ValidationError("bucket spec is empty");
    }
    if (lower_bounds.front() != 0) {
        throw ValidationError("first bucket must start at 0");
    }
    for (std::size_t i = 1; i < lower_bounds.size(); ++i) {
        if (lower_bounds[i] <= lower_bounds[i - 1]) {
            throw ValidationError("bucket lower bounds must be strictly increasing");
        }
    }
}

// ---------------------------------------------------------------------------
// Fact catalog
// ---------------------------------------------------------------------------

std::vector<FactEntry> parse_fact_catalog(std::string_view text) {
    std::vector<FactEntry> catalog;
    std::set<std::string> ids;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        Json j = parse_json_line(line, line_no);
        if (j.contains("_manifest")) return;
        if (!j.contains("fact_id") || !j["fact_id"].is_string()) {
            throw ParseError("record has no string fact_id", line_no);
        }
        FactEntry fact;
        fact.fact_id = j["fact_id"].get<std::string>();
        if (fact.fact_id.empty()) {
            throw ParseError("fact_id is empty", line_no);
        }
        if (!ids.insert(fact.fact_id).second) {
            throw ValidationError("duplicate fact_id '" + fact.fact_id + "'");
        }
        if (j.contains("relation_id") && j["relation_id"].is_string()) {
            fact.relation_id = j["relation_id"].get<std::string>();
        }
        if (!j.contains("subject") || !j.contains("object")) {
            throw ParseError("record needs subject and object", line_no);
        }
        fact.subject = parse_entity(j["subject"], line_no, "subject");
        fact.object = parse_entity(j["object"], line_no, "object");
        catalog.push_back(std::move(fact));
    });
    return catalog;
}

std::vector<FactEntry> load_fact_catalog(const std::string& path) {
    return parse_fact_catalog(read_file(path));
}

namespace {

Json entity_to_json(const EntityRef& e) {
    Json j = Json::object();
    if (!e.id.empty()) j["id"] = e.id;
    j["label"] = e.label;
    Json aliases = Json::array();
    for (const auto& a : e.aliases) {
        if (a != e.label) aliases.push_back(a);
    }
    j["aliases"] = std::move(aliases);
    return j;
}

}  // namespace

std::string format_fact_catalog(const std::vector<FactEntry>& catalog) {
    std::ostringstream out;
    for (const auto& fact : catalog) {
        Json j = Json::object();
        j["fact_id"] = fact.fact_id;
        j["relation_id"] = fact.relation_id;
        j["subject"] = entity_to_json(fact.subject);
        j["object"] = entity_to_json(fact.object);
        out << j.dump() << '\n';
    }
    return std::move(out).str();
}

void save_fact_catalog(const std::string& path, const std::vector<FactEntry>& catalog) {
    write_file(path, format_fact_catalog(catalog));
}

// ---------------------------------------------------------------------------
// Frequency table
// ---------------------------------------------------------------------------

FrequencyTable frequency_table_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ValidationError("frequency table must be a JSON object");
    }
    FrequencyTable table;
    if (j.contains("counts")) {
        table.counts = parse_count_object(j["counts"], "counts");
        if (j.contains("slices")) {
            if (!j["slices"].is_array()) {
                throw ValidationError("slices must be an array");
            }
            for (const auto& s : j["slices"]) {
                table.slices.push_back(parse_count_object(s, "slice"));
            }
        }
    } else {
        // Bare {fact_id: count} object.
        table.counts = parse_count_object(j, "frequency table");
    }
    table.validate();
    return table;
}

FrequencyTable load_frequency_table(const std::string& path) {
    Json j = Json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw ParseError("malformed JSON in " + path);
    }
    return frequency_table_from_json(j);
}

Json frequency_table_to_json(const FrequencyTable& table, const Json& manifest) {
    Json j = Json::object();
    j["counts"] = count_object_to_json(table.counts);
    if (table.has_slices()) {
        Json slices = Json::array();
        for (const auto& s : table.slices) {
            slices.push_back(count_object_to_json(s));
        }
        j["slices"] = std::move(slices);
    }
    if (!manifest.is_null()) {
        j["manifest"] = manifest;
    }
    return j;
}

void save_frequency_table(const std::string& path, const FrequencyTable& table,
                          const Json& manifest) {
    write_file(path, frequency_table_to_json(table, manifest).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Answer logs
// ---------------------------------------------------------------------------

std::vector<AnswerLog> parse_answer_logs(std::string_view text) {
    std::vector<AnswerLog> logs;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        Json j = parse_json_line(line, line_no);
        if (j.contains("_manifest")) return;
        for (const char* key : {"model_id", "fact_id"}) {
            if (!j.contains(key) || !j[key].is_string()) {
                throw ParseError(std::string("record has no string ") + key, line_no);
            }
        }
        std::string checkpoint = "final";
        if (j.contains("checkpoint_id")) {
            const auto& c = j["checkpoint_id"];
            if (c.is_string()) {
                checkpoint = c.get<std::string>();
            } else if (c.is_number_integer()) {
                checkpoint = std::to_string(c.get<std::int64_t>());
            } else {
                throw ParseError("checkpoint_id must be a string or integer", line_no);
            }
        }
        bool correct = false;
        if (!j.contains("correct")) {
            throw ParseError("record has no 'correct' field", line_no);
        } else if (j["correct"].is_boolean()) {
            correct = j["correct"].get<bool>();
        } else if (j["correct"].is_number_integer()) {
            correct = j["correct"].get<std::int64_t>() != 0;
        } else {
            throw ParseError("'correct' must be a boolean", line_no);
        }

        const std::string model = j["model_id"].get<std::string>();
        const std::string fact = j["fact_id"].get<std::string>();
        auto key = std::make_pair(model, checkpoint);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, logs.size()).first;
            logs.push_back(AnswerLog{model, checkpoint, {}});
        }
        if (!logs[it->second].records.emplace(fact, correct).second) {
            throw ParseError("duplicate record for fact '" + fact + "' in (" + model + ", " +
                                 checkpoint + ")",
                             line_no);
        }
    });
    return logs;
}

std::vector<AnswerLog> load_answer_logs(const std::string& path) {
    return parse_answer_logs(read_file(path));
}

std::string format_answer_logs(const std::vector<AnswerLog>& logs, const Json& manifest) {
    std::ostringstream out;
    if (!manifest.is_null()) {
        Json head = Json::object();
        head["_manifest"] = manifest;
        out << head.dump() << '\n';
    }
    for (const auto& log : logs) {
        for (const auto& [fact, correct] : log.records) {
            Json j = Json::object();
            j["model_id"] = log.model_id;
            j["checkpoint_id"] = log.checkpoint_id;
            j["fact_id"] = fact;
            j["correct"] = correct;
            out << j.dump() << '\n';
        }
    }
    return std::move(out).str();
}

void save_answer_logs(const std::string& path, const std::vector<AnswerLog>& logs,
                      const Json& manifest) {
    write_file(path, format_answer_logs(logs, manifest));
}

// ---------------------------------------------------------------------------
// Join validation
// ---------------------------------------------------------------------------

namespace {

template <typename MapA, typename MapB>
std::vector<std::string> keys_not_in(const MapA& a, const MapB& b) {
    std::vector<std::string> out;
    for (const auto& [key, value] : a) {
        (void)value;
        if (b.find(key) == b.end()) out.push_back(key);
    }
    return out;
}

}  // namespace

JoinReport validate_join(const std::vector<FactEntry>& catalog, const FrequencyTable& table,
                         const std::vector<AnswerLog>& logs) {
    JoinReport report;
    if (!catalog.empty()) {
        std::map<std::string, bool> catalog_ids;
        for (const auto& fact : catalog) {
            catalog_ids.emplace(fact.fact_id, true);
        }
        report.catalog_not_in_table = keys_not_in(catalog_ids, table.counts);
        report.table_not_in_catalog = keys_not_in(table.counts, catalog_ids);
    }
    for (const auto& log : logs) {
        JoinReport::LogDiff diff;
        diff.model_id = log.model_id;
        diff.checkpoint_id = log.checkpoint_id;
        diff.log_not_in_table = keys_not_in(log.records, table.counts);
        diff.table_not_in_log = keys_not_in(table.counts, log.records);
        if (!diff.log_not_in_table.empty() || !diff.table_not_in_log.empty()) {
            report.log_diffs.push_back(std::move(diff));
        }
    }
    return report;
}

Json JoinReport::to_json() const {
    Json j = Json::object();
    j["joinable"] = joinable();
    j["catalog_not_in_table"] = catalog_not_in_table;
    j["table_not_in_catalog"] = table_not_in_catalog;
    Json diffs = Json::array();
    for (const auto& d : log_diffs) {
        Json dj = Json::object();
        dj["model_id"] = d.model_id;
        dj["checkpoint_id"] = d.checkpoint_id;
        dj["log_not_in_table"] = d.log_not_in_table;
        dj["table_not_in_log"] = d.table_not_in_log;
        diffs.push_back(std::move(dj));
    }
    j["log_diffs"] = std::move(diffs);
    return j;
}

}  // namespace sefkit
