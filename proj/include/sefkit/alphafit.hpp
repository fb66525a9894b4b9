#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sefkit/core.hpp"

namespace sefkit::alphafit {

// F(x) = 1 - (l0 + x0 / (1+x)^alpha), the modeled probability of a correct
// answer at fact frequency x. Preconditions: l0, x0, alpha, x >= 0 and
// l0 + x0 <= 1; violations throw std::domain_error.
double prob_correct(double x, double l0, double x0, double alpha);

// Likelihood of one observed prediction: f if correct else 1-f, clamped
// into [eps, 1-eps] so the log never diverges.
double prediction_likelihood(bool correct, double f, double eps);

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

// One model's answers joined with its fact frequencies. Records are grouped
// by exact frequency value, which leaves the likelihood unchanged (every
// record of equal x and equal outcome contributes the same term) and makes
// NLL evaluation O(distinct frequencies) instead of O(facts).
struct ModelObservations {
    struct FreqGroup {
        Count x = 0;
        double log1p_x = 0.0;  // precomputed log(1+x)
        std::uint64_t n_correct = 0;
        std::uint64_t n_wrong = 0;
    };

    std::string model_id;
    std::vector<FreqGroup> groups;             // ascending x
    std::vector<std::pair<Count, bool>> records;  // ungrouped, record order
    std::uint64_t n_records = 0;
    std::uint64_t n_correct = 0;

    // Joins on fact_id; throws ValidationError naming the first fact in the
    // log that is missing from the table.
    static ModelObservations join(const FrequencyTable& table, const AnswerLog& log);
};

struct Params {
    double l0 = 0.0;
    double x0 = 0.0;
    std::vector<double> alphas;  // one per model, observation order
};

struct Gradient {
    double d_l0 = 0.0;
    double d_x0 = 0.0;
    std::vector<double> d_alphas;
};

// -sum_m sum_i log p_{m,i}. `workers` <= 1 evaluates serially; larger values
// parallelize over frequency groups with a fixed merge order, so results
// are bitwise stable for a given worker count.
double nll(std::span<const ModelObservations> models, const Params& params, double eps,
           int workers = 1);

// Ungrouped single-pass reference; sums in record order. Kept for tests and
// benchmarks against the grouped kernel.
double nll_reference(std::span<const ModelObservations> models, const Params& params, double eps);

// Analytic gradient of nll() with respect to (l0, x0, alphas). Clamped
// likelihood terms contribute zero.
Gradient nll_gradient(std::span<const ModelObservations> models, const Params& params, double eps,
                      int workers = 1);

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitConfig {
    std::optional<double> fix_l0;
    std::optional<double> fix_x0;
    double init_l0 = 0.05;
    double init_x0 = 0.8;
    double init_alpha = 0.1;
    int max_iter = 2000;
    double tol = 1e-10;        // convergence threshold on the NLL decrease
    double prob_floor = 1e-9;  // likelihood clamp epsilon
    double alpha_cap = 100.0;
    int starts = 1;            // > 1 adds jittered restarts
    std::uint64_t seed = 0;    // jitter seed
    int workers = 1;           // NLL/gradient evaluation threads

    // Test hook: invoked with every accepted iterate.
    std::function<void(const Params&)> on_iterate;
};

// Joint MLE of (l0, x0) and one alpha per model by L-BFGS on an
// unconstrained reparameterization (stick-breaking for the (l0, x0) simplex,
// softplus for each alpha) with backtracking line search, so every iterate
// is feasible and the NLL trace is non-increasing. Models whose records are
// all correct have a divergent MLE; their alpha is reported at alpha_cap
// and the fit is flagged not converged.
FitResult fit(const std::vector<ModelObservations>& models, const FitConfig& config = {});

// Spec-level convenience: tables[i] pairs with logs[i].
FitResult fit(const std::vector<FrequencyTable>& tables, const std::vector<AnswerLog>& logs,
              const FitConfig& config = {});

// NLL keyed by model id; every log's model needs an alpha entry.
double nll(const std::vector<FrequencyTable>& tables, const std::vector<AnswerLog>& logs,
           double l0, double x0, const std::map<std::string, double>& alphas,
           double eps = 1e-9);

}  // namespace sefkit::alphafit
