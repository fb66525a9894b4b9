#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sefkit/alphafit.hpp"
#include "sefkit/core.hpp"
#include "sefkit/metrics.hpp"

namespace sefkit::dynamics {

struct TrajectoryRow {
    std::string model_id;
    std::size_t slice = 0;
    double accuracy = 0.0;
    double wasb = 0.0;
    double alpha = 0.0;
};

// One row per (model, slice); every pair present exactly once.
struct TrajectoryTable {
    std::vector<TrajectoryRow> rows;  // model-major, slice ascending
    std::vector<std::string> model_ids;
    std::size_t slice_count = 0;

    const TrajectoryRow& at(const std::string& model_id, std::size_t slice) const;
};

struct PerSliceOptions {
    double lambda = metrics::kDefaultLambda;
    BucketSpec buckets;  // empty -> metrics::default_buckets()
    alphafit::FitConfig fit;
    // Default: fit (L0, x0) once, jointly over all models at the final
    // slice, then hold them fixed for every earlier slice. When true,
    // dataset parameters are refit per slice instead.
    bool refit_dataset_params = false;
    int workers = 0;  // <= 0: OpenMP default
};

// Metric trajectory across training slices. `cumulative` holds one
// cumulative frequency table per slice; `logs` one AnswerLog per
// (model, checkpoint) with checkpoint_id the decimal slice index. Missing
// checkpoints raise ValidationError naming (model, slice). The final-slice
// row reproduces the single-shot computation on total counts exactly.
TrajectoryTable per_slice_metrics(const std::vector<FrequencyTable>& cumulative,
                                  const std::vector<AnswerLog>& logs,
                                  const PerSliceOptions& options = {});

enum class CorrMode { final_state, all_slices };

inline constexpr std::array<const char*, 3> kMetricNames = {"ACC", "WASB", "alpha"};

// Pearson (or Spearman) correlations between the three metric columns.
// final_state correlates length-m vectors (one entry per model, last
// slice) and needs >= 3 models; all_slices flattens to length m*S and
// needs >= 2 models and >= 2 slices. Zero-variance columns are flagged
// undefined. `order` is the presentation permutation, sorted by
// correlation with ACC (descending, undefined last).
struct CorrelationResult {
    std::array<std::array<double, 3>, 3> matrix{};  // NaN where undefined
    std::array<std::array<bool, 3>, 3> defined{};
    std::array<std::size_t, 3> order{};
};

CorrelationResult correlation_matrix(const TrajectoryTable& traj, CorrMode mode,
                                     bool spearman = false);

// Plain Pearson correlation of two equal-length vectors; NaN when either
// side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// Plot-ready CSV: "model_id,slice,accuracy,wasb,alpha" rows, doubles with
// 17 significant digits. `comment` lines (manifests) are emitted with a
// leading '#' and skipped on parse.
std::string format_trajectory_csv(const TrajectoryTable& traj,
                                  const std::string& comment = "");
TrajectoryTable parse_trajectory_csv(std::string_view text);

std::string format_correlation_csv(const CorrelationResult& corr,
                                   const std::string& comment = "");

}  // namespace sefkit::dynamics
