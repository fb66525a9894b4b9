#include "sefkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sefkit/error.hpp"

namespace sefkit::metrics {

BucketSpec default_buckets() {
    BucketSpec spec;
    spec.lower_bounds.push_back(0);
    for (Count b = 1; b <= 8192; b *= 2) {
        spec.lower_bounds.push_back(b);
    }
    return spec;
}

std::size_t assign_bucket(const BucketSpec& spec, Count x) {
    // Last lower bound <= x.
    const auto it =
        std::upper_bound(spec.lower_bounds.begin(), spec.lower_bounds.end(), x);
    return static_cast<std::size_t>(it - spec.lower_bounds.begin()) - 1;
}

double bucket_weight(Count lower, double lambda) {
    if (lower < 1) return 0.0;
    return std::exp(-lambda * static_cast<double>(lower));
}

BucketAccuracyReport bucket_report(const FrequencyTable& table, const AnswerLog& log,
                                   const BucketSpec& spec, double lambda) {
    spec.validate();
    if (!(lambda > 0.0)) {
        throw ValidationError("lambda must be positive");
    }
    BucketAccuracyReport report;
    report.lambda = lambda;
    report.rows.resize(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        BucketRow& row = report.rows[i];
        row.lower = spec.lower(i);
        row.upper = spec.upper(i);
        row.weight = bucket_weight(row.lower, lambda);
    }
    for (const auto& [fact, correct] : log.records) {
        const auto it = table.counts.find(fact);
        if (it == table.counts.end()) {
            throw ValidationError("fact '" + fact + "' in answer log has no frequency count");
        }
        BucketRow& row = report.rows[assign_bucket(spec, it->second)];
        ++row.n_facts;
        if (correct) ++row.n_correct;
    }
    for (BucketRow& row : report.rows) {
        if (row.n_facts > 0) {
            row.accuracy = static_cast<double>(row.n_correct) / static_cast<double>(row.n_facts);
        }
    }
    return report;
}

double wasb(const BucketAccuracyReport& report) {
    // Empty buckets are excluded from numerator and normalizer both, so a
    // sparse split is not biased toward zero.
    double weight_sum = 0.0;
    double weighted_acc = 0.0;
    for (const BucketRow& row : report.rows) {
        if (row.weight > 0.0 && row.n_facts > 0) {
            weight_sum += row.weight;
            weighted_acc += row.weight * row.accuracy;
        }
    }
    if (weight_sum <= 0.0) {
        throw ValidationError("WASB undefined: every weighted bucket is empty");
    }
    return weighted_acc / weight_sum;
}

double wasb(const FrequencyTable& table, const AnswerLog& log, const BucketSpec& spec,
            double lambda) {
    return wasb(bucket_report(table, log, spec, lambda));
}

ThresholdAccuracy threshold_accuracy(const FrequencyTable& table, const AnswerLog& log,
                                     Count threshold) {
    if (threshold < 1) {
        throw ValidationError("threshold must be >= 1");
    }
    ThresholdAccuracy out;
    for (const auto& [fact, correct] : log.records) {
        const auto it = table.counts.find(fact);
        if (it == table.counts.end()) {
            throw ValidationError("fact '" + fact + "' in answer log has no frequency count");
        }
        if (it->second < threshold) {
            ++out.n_low;
            if (correct) ++out.correct_low;
        } else {
            ++out.n_high;
            if (correct) ++out.correct_high;
        }
    }
    if (out.n_low > 0) {
        out.low = static_cast<double>(out.correct_low) / static_cast<double>(out.n_low);
    }
    if (out.n_high > 0) {
        out.high = static_cast<double>(out.correct_high) / static_cast<double>(out.n_high);
    }
    return out;
}

double overall_accuracy(const AnswerLog& log) {
    if (log.records.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return static_cast<double>(log.correct_count()) / static_cast<double>(log.records.size());
}

}  // namespace sefkit::metrics
