#include "sefkit/dynamics.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "sefkit/error.hpp"

namespace sefkit::dynamics {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::size_t parse_slice_index(const AnswerLog& log, std::size_t slice_count) {
    std::size_t value = 0;
    const std::string& s = log.checkpoint_id;
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw ValidationError("checkpoint id '" + s + "' of model '" + log.model_id +
                              "' is not a slice index");
    }
    value = static_cast<std::size_t>(std::stoull(s));
    if (value >= slice_count) {
        throw ValidationError("checkpoint " + s + " of model '" + log.model_id +
                              "' exceeds the slice count " + std::to_string(slice_count));
    }
    return value;
}

}  // namespace

const TrajectoryRow& TrajectoryTable::at(const std::string& model_id, std::size_t slice) const {
    for (const TrajectoryRow& row : rows) {
        if (row.slice == slice && row.model_id == model_id) return row;
    }
    throw ValidationError("no trajectory row for (" + model_id + ", slice " +
                          std::to_string(slice) + ")");
}

TrajectoryTable per_slice_metrics(const std::vector<FrequencyTable>& cumulative,
                                  const std::vector<AnswerLog>& logs,
                                  const PerSliceOptions& options) {
    const std::size_t n_slices = cumulative.size();
    if (n_slices == 0) {
        throw ValidationError("per_slice_metrics needs at least one slice table");
    }

    // Index logs by (model, slice); checkpoint ids are decimal slice indices.
    std::map<std::pair<std::string, std::size_t>, const AnswerLog*> by_key;
    std::set<std::string> model_set;
    for (const AnswerLog& log : logs) {
        const std::size_t slice = parse_slice_index(log, n_slices);
        if (!by_key.emplace(std::make_pair(log.model_id, slice), &log).second) {
            throw ValidationError("duplicate answer log for (" + log.model_id + ", slice " +
                                  std::to_string(slice) + ")");
        }
        model_set.insert(log.model_id);
    }
    std::vector<std::string> models(model_set.begin(), model_set.end());
    const auto log_for = [&](const std::string& model, std::size_t slice) -> const AnswerLog& {
        const auto it = by_key.find(std::make_pair(model, slice));
        if (it == by_key.end()) {
            throw ValidationError("missing answer log for (" + model + ", slice " +
                                  std::to_string(slice) + ")");
        }
        return *it->second;
    };

    const BucketSpec buckets =
        options.buckets.lower_bounds.empty() ? metrics::default_buckets() : options.buckets;

    // Final-slice joint fit pins the dataset parameters (and the final
    // alphas, so the last row reproduces the single-shot fit bit for bit).
    std::vector<alphafit::ModelObservations> final_obs;
    final_obs.reserve(models.size());
    for (const std::string& model : models) {
        final_obs.push_back(
            alphafit::ModelObservations::join(cumulative[n_slices - 1], log_for(model, n_slices - 1)));
    }
    const FitResult final_fit = alphafit::fit(final_obs, options.fit);

    TrajectoryTable traj;
    traj.model_ids = models;
    traj.slice_count = n_slices;
    traj.rows.resize(models.size() * n_slices);

    const auto row_at = [&](std::size_t m, std::size_t s) -> TrajectoryRow& {
        return traj.rows[m * n_slices + s];
    };
    for (std::size_t m = 0; m < models.size(); ++m) {
        for (std::size_t s = 0; s < n_slices; ++s) {
            const AnswerLog& log = log_for(models[m], s);
            TrajectoryRow& row = row_at(m, s);
            row.model_id = models[m];
            row.slice = s;
            row.accuracy = metrics::overall_accuracy(log);
            row.wasb = metrics::wasb(cumulative[s], log, buckets, options.lambda);
        }
        row_at(m, n_slices - 1).alpha = final_fit.alphas.at(models[m]);
    }

    if (options.refit_dataset_params) {
        // Dataset parameters refit per slice, jointly over models.
#pragma omp parallel for schedule(dynamic) num_threads(options.workers > 0 ? options.workers : omp_get_max_threads())
        for (std::size_t s = 0; s < n_slices - 1; ++s) {
            std::vector<alphafit::ModelObservations> obs;
            obs.reserve(models.size());
            for (const std::string& model : models) {
                obs.push_back(alphafit::ModelObservations::join(cumulative[s], log_for(model, s)));
            }
            const FitResult slice_fit = alphafit::fit(obs, options.fit);
            for (std::size_t m = 0; m < models.size(); ++m) {
                row_at(m, s).alpha = slice_fit.alphas.at(models[m]);
            }
        }
    } else {
        // Frozen dataset parameters: per-(model, slice) alphas decouple.
        alphafit::FitConfig slice_config = options.fit;
        slice_config.fix_l0 = final_fit.l0;
        slice_config.fix_x0 = final_fit.x0;
        slice_config.on_iterate = nullptr;
        const std::size_t n_jobs = models.size() * (n_slices - 1);
#pragma omp parallel for schedule(dynamic) num_threads(options.workers > 0 ? options.workers : omp_get_max_threads())
        for (std::size_t job = 0; job < n_jobs; ++job) {
            const std::size_t m = job / (n_slices - 1);
            const std::size_t s = job % (n_slices - 1);
            std::vector<alphafit::ModelObservations> obs;
            obs.push_back(alphafit::ModelObservations::join(cumulative[s], log_for(models[m], s)));
            const FitResult slice_fit = alphafit::fit(obs, slice_config);
            row_at(m, s).alpha = slice_fit.alphas.at(models[m]);
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n != b.size() || n < 2) return kNan;
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a <= 0.0 || var_b <= 0.0) return kNan;
    return cov / std::sqrt(var_a * var_b);
}

namespace {

std::vector<double> rank_transform(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

CorrelationResult correlation_matrix(const TrajectoryTable& traj, CorrMode mode, bool spearman) {
    const std::size_t n_models = traj.model_ids.size();
    const std::size_t n_slices = traj.slice_count;
    if (mode == CorrMode::final_state && n_models < 3) {
        throw ValidationError("final-state correlation needs at least 3 models");
    }
    if (mode == CorrMode::all_slices && (n_models < 2 || n_slices < 2)) {
        throw ValidationError("all-slices correlation needs >= 2 models and >= 2 slices");
    }

    // Metric vectors, models x slices flattened (or final slice only).
    std::array<std::vector<double>, 3> vectors;
    for (std::size_t m = 0; m < n_models; ++m) {
        for (std::size_t s = 0; s < n_slices; ++s) {
            if (mode == CorrMode::final_state && s != n_slices - 1) continue;
            const TrajectoryRow& row = traj.at(traj.model_ids[m], s);
            vectors[0].push_back(row.accuracy);
            vectors[1].push_back(row.wasb);
            vectors[2].push_back(row.alpha);
        }
    }
    if (spearman) {
        for (auto& v : vectors) v = rank_transform(v);
    }

    CorrelationResult result;
    for (std::size_t i = 0; i < 3; ++i) {
        const bool has_variance = !std::isnan(pearson(vectors[i], vectors[i]));
        for (std::size_t j = 0; j < 3; ++j) {
            double r = kNan;
            if (i == j) {
                r = has_variance ? 1.0 : kNan;
            } else {
                r = pearson(vectors[i], vectors[j]);
            }
            result.matrix[i][j] = r;
            result.defined[i][j] = !std::isnan(r);
        }
    }

    // Presentation order: by correlation with ACC, descending; undefined go
    // last, ties keep metric order.
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const double ci = result.matrix[0][i];
        const double cj = result.matrix[0][j];
        const bool di = !std::isnan(ci);
        const bool dj = !std::isnan(cj);
        if (di != dj) return di;
        if (!di) return false;
        return ci > cj;
    });
    result.order = order;
    return result;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string format_trajectory_csv(const TrajectoryTable& traj, const std::string& comment) {
    std::ostringstream out;
    if (!comment.empty()) {
        out << "# " << comment << '\n';
    }
    out << "model_id,slice,accuracy,wasb,alpha\n";
    for (const TrajectoryRow& row : traj.rows) {
        out << row.model_id << ',' << row.slice << ',' << format_double(row.accuracy) << ','
            << format_double(row.wasb) << ',' << format_double(row.alpha) << '\n';
    }
    return std::move(out).str();
}

TrajectoryTable parse_trajectory_csv(std::string_view text) {
    TrajectoryTable traj;
    std::map<std::string, std::set<std::size_t>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_done = false;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
        std::string_view line = text.substr(pos, end - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        if (!header_done) {
            if (line != "model_id,slice,accuracy,wasb,alpha") {
                throw ParseError("unexpected trajectory CSV header", line_no);
            }
            header_done = true;
            continue;
        }
        std::array<std::string, 5> fields;
        std::size_t field = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= fields.size()) {
                    throw ParseError("too many fields in trajectory CSV", line_no);
                }
                fields[field++] = std::string(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (field != fields.size()) {
            throw ParseError("expected 5 fields in trajectory CSV", line_no);
        }
        TrajectoryRow row;
        row.model_id = fields[0];
        try {
            row.slice = static_cast<std::size_t>(std::stoull(fields[1]));
            row.accuracy = std::stod(fields[2]);
            row.wasb = std::stod(fields[3]);
            row.alpha = std::stod(fields[4]);
        } catch (const std::exception&) {
            throw ParseError("malformed numeric field in trajectory CSV", line_no);
        }
        if (!seen[row.model_id].insert(row.slice).second) {
            throw ValidationError("duplicate trajectory row for (" + row.model_id + ", slice " +
                                  std::to_string(row.slice) + ")");
        }
        traj.rows.push_back(std::move(row));
    }
    if (traj.rows.empty()) {
        throw ValidationError("trajectory CSV has no rows");
    }
    std::size_t max_slice = 0;
    for (const TrajectoryRow& row : traj.rows) {
        max_slice = std::max(max_slice, row.slice);
    }
    traj.slice_count = max_slice + 1;
    for (const auto& [model, slices] : seen) {
        if (slices.size() != traj.slice_count) {
            throw ValidationError("model '" + model + "' is missing trajectory slices");
        }
        traj.model_ids.push_back(model);
    }
    // Normalize to model-major, slice-ascending order.
    std::sort(traj.rows.begin(), traj.rows.end(), [](const TrajectoryRow& a, const TrajectoryRow& b) {
        return std::tie(a.model_id, a.slice) < std::tie(b.model_id, b.slice);
    });
    return traj;
}

std::string format_correlation_csv(const CorrelationResult& corr, const std::string& comment) {
    std::ostringstream out;
    if (!comment.empty()) {
        out << "# " << comment << '\n';
    }
    out << "metric";
    for (const std::size_t j : corr.order) {
        out << ',' << kMetricNames[j];
    }
    out << '\n';
    for (const std::size_t i : corr.order) {
        out << kMetricNames[i];
        for (const std::size_t j : corr.order) {
            out << ',' << (corr.defined[i][j] ? format_double(corr.matrix[i][j]) : "nan");
        }
        out << '\n';
    }
    return std::move(out).str();
}

}  // namespace sefkit::dynamics
