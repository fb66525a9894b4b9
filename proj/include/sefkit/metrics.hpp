#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "sefkit/core.hpp"

namespace sefkit::metrics {

// Powers of two up to 2^13 with a final open bucket:
// [0,1), [1,2), [2,4), ..., [4096,8192), [8192,inf).
BucketSpec default_buckets();

// Index i with lower(i) <= x < upper(i); total on [0, inf).
std::size_t assign_bucket(const BucketSpec& spec, Count x);

// exp(-lambda * lower) for lower >= 1, else 0.
double bucket_weight(Count lower, double lambda);

struct BucketRow {
    Count lower = 0;
    std::optional<Count> upper;  // nullopt = +inf
    std::size_t n_facts = 0;
    std::size_t n_correct = 0;
    double accuracy = std::numeric_limits<double>::quiet_NaN();  // NaN when n_facts == 0
    double weight = 0.0;

    bool defined() const { return n_facts > 0; }
};

struct BucketAccuracyReport {
    std::vector<BucketRow> rows;
    double lambda = 0.0;
};

// Per-bucket accuracy for the facts present in `log`. Every fact in the log
// must have a count in `table`.
BucketAccuracyReport bucket_report(const FrequencyTable& table, const AnswerLog& log,
                                   const BucketSpec& spec, double lambda);

// Weighted accuracy over buckets with positive weight and at least one
// fact; throws ValidationError when every weighted bucket is empty.
double wasb(const BucketAccuracyReport& report);
double wasb(const FrequencyTable& table, const AnswerLog& log, const BucketSpec& spec,
            double lambda);

struct ThresholdAccuracy {
    std::optional<double> low;   // accuracy over x <  threshold; nullopt when empty
    std::optional<double> high;  // accuracy over x >= threshold
    std::size_t n_low = 0;
    std::size_t n_high = 0;
    std::size_t correct_low = 0;
    std::size_t correct_high = 0;
};

ThresholdAccuracy threshold_accuracy(const FrequencyTable& table, const AnswerLog& log,
                                     Count threshold);

// Fraction of correct records; NaN on an empty log.
double overall_accuracy(const AnswerLog& log);

inline constexpr double kDefaultLambda = 0.05;
inline constexpr Count kDefaultThreshold = 1024;

}  // namespace sefkit::metrics
