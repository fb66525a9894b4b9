#include "sefkit/alphafit.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>

#include "sefkit/error.hpp"
#include "sefkit/rng.hpp"

namespace sefkit::alphafit {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
}

double softplus(double a) {
    if (a > 30.0) return a;
    if (a < -30.0) return std::exp(a);
    return std::log1p(std::exp(a));
}

double inv_softplus(double alpha) {
    alpha = std::max(alpha, 1e-12);
    if (alpha > 30.0) return alpha;
    return std::log(std::expm1(alpha));
}

}  // namespace

double prob_correct(double x, double l0, double x0, double alpha) {
    if (!(x >= 0.0) || !(l0 >= 0.0) || !(x0 >= 0.0) || !(alpha >= 0.0) || l0 + x0 > 1.0) {
        throw std::domain_error("prob_correct requires x, l0, x0, alpha >= 0 and l0 + x0 <= 1");
    }
    return 1.0 - (l0 + x0 / std::pow(1.0 + x, alpha));
}

double prediction_likelihood(bool correct, double f, double eps) {
    const double p = correct ? f : 1.0 - f;
    return std::clamp(p, eps, 1.0 - eps);
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

ModelObservations ModelObservations::join(const FrequencyTable& table, const AnswerLog& log) {
    ModelObservations obs;
    obs.model_id = log.model_id;
    obs.records.reserve(log.records.size());
    std::map<Count, std::pair<std::uint64_t, std::uint64_t>> grouped;
    for (const auto& [fact, correct] : log.records) {
        const auto it = table.counts.find(fact);
        if (it == table.counts.end()) {
            throw ValidationError("fact '" + fact + "' answered by model '" + log.model_id +
                                  "' has no frequency count");
        }
        obs.records.emplace_back(it->second, correct);
        auto& [n_correct, n_wrong] = grouped[it->second];
        if (correct) {
            ++n_correct;
        } else {
            ++n_wrong;
        }
    }
    obs.n_records = obs.records.size();
    obs.groups.reserve(grouped.size());
    for (const auto& [x, counts] : grouped) {
        FreqGroup g;
        g.x = x;
        g.log1p_x = std::log1p(static_cast<double>(x));
        g.n_correct = counts.first;
        g.n_wrong = counts.second;
        obs.n_correct += counts.first;
        obs.groups.push_back(g);
    }
    return obs;
}

// ---------------------------------------------------------------------------
// NLL and gradient
// ---------------------------------------------------------------------------

namespace {

// Contribution of one frequency group; gradient terms are zero while the
// likelihood sits on its clamp.
inline double group_nll(const ModelObservations::FreqGroup& g, double l0, double x0,
                        double alpha, double eps, double* d_l0, double* d_x0,
                        double* d_alpha) {
    const double q = std::exp(-alpha * g.log1p_x);  // (1+x)^-alpha
    const double f = 1.0 - l0 - x0 * q;
    const double p_correct = std::clamp(f, eps, 1.0 - eps);
    const double p_wrong = std::clamp(1.0 - f, eps, 1.0 - eps);
    const double value = -static_cast<double>(g.n_correct) * std::log(p_correct) -
                         static_cast<double>(g.n_wrong) * std::log(p_wrong);
    if (d_l0 != nullptr && f > eps && f < 1.0 - eps) {
        const double g_f = -static_cast<double>(g.n_correct) / f +
                           static_cast<double>(g.n_wrong) / (1.0 - f);
        *d_l0 += -g_f;
        *d_x0 += -g_f * q;
        *d_alpha += g_f * x0 * g.log1p_x * q;
    }
    return value;
}

struct FlatIndex {
    // flat index -> (model, group) with prefix sums for chunking
    std::vector<std::size_t> model_of;
    std::vector<std::size_t> group_of;
};

FlatIndex flatten(std::span<const ModelObservations> models) {
    FlatIndex idx;
    for (std::size_t m = 0; m < models.size(); ++m) {
        for (std::size_t g = 0; g < models[m].groups.size(); ++g) {
            idx.model_of.push_back(m);
            idx.group_of.push_back(g);
        }
    }
    return idx;
}

void check_params(std::span<const ModelObservations> models, const Params& params) {
    if (params.alphas.size() != models.size()) {
        throw ValidationError("expected one alpha per model");
    }
    if (!(params.l0 >= 0.0) || !(params.x0 >= 0.0) || params.l0 + params.x0 > 1.0) {
        throw std::domain_error("dataset parameters must satisfy l0, x0 >= 0, l0 + x0 <= 1");
    }
}

}  // namespace

double nll(std::span<const ModelObservations> models, const Params& params, double eps,
           int workers) {
    check_params(models, params);
    if (workers <= 1) {
        double total = 0.0;
        for (std::size_t m = 0; m < models.size(); ++m) {
            for (const auto& g : models[m].groups) {
                total += group_nll(g, params.l0, params.x0, params.alphas[m], eps, nullptr,
                                   nullptr, nullptr);
            }
        }
        return total;
    }

    // Fixed contiguous chunks merged in thread order: bitwise stable for a
    // given worker count.
    const FlatIndex idx = flatten(models);
    const std::size_t n = idx.model_of.size();
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                        std::max<std::size_t>(n, 1));
    std::vector<double> partial(n_threads, 0.0);
#pragma omp parallel num_threads(static_cast<int>(n_threads))
    {
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
        const std::size_t begin = t * n / n_threads;
        const std::size_t end = (t + 1) * n / n_threads;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t m = idx.model_of[i];
            sum += group_nll(models[m].groups[idx.group_of[i]], params.l0, params.x0,
                             params.alphas[m], eps, nullptr, nullptr, nullptr);
        }
        partial[t] = sum;
    }
    double total = 0.0;
    for (const double p : partial) total += p;
    return total;
}

double nll_reference(std::span<const ModelObservations> models, const Params& params,
                     double eps) {
    check_params(models, params);
    double total = 0.0;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const double alpha = params.alphas[m];
        for (const auto& [x, correct] : models[m].records) {
            const double f =
                1.0 - params.l0 - params.x0 * std::exp(-alpha * std::log1p(static_cast<double>(x)));
            total += -std::log(prediction_likelihood(correct, f, eps));
        }
    }
    return total;
}

Gradient nll_gradient(std::span<const ModelObservations> models, const Params& params,
                      double eps, int workers) {
    check_params(models, params);
    Gradient grad;
    grad.d_alphas.assign(models.size(), 0.0);
    if (workers <= 1) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            for (const auto& g : models[m].groups) {
                group_nll(g, params.l0, params.x0, params.alphas[m], eps, &grad.d_l0,
                          &grad.d_x0, &grad.d_alphas[m]);
            }
        }
        return grad;
    }

    const FlatIndex idx = flatten(models);
    const std::size_t n = idx.model_of.size();
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                        std::max<std::size_t>(n, 1));
    std::vector<Gradient> partial(n_threads);
    for (auto& p : partial) p.d_alphas.assign(models.size(), 0.0);
#pragma omp parallel num_threads(static_cast<int>(n_threads))
    {
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
        const std::size_t begin = t * n / n_threads;
        const std::size_t end = (t + 1) * n / n_threads;
        Gradient& mine = partial[t];
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t m = idx.model_of[i];
            group_nll(models[m].groups[idx.group_of[i]], params.l0, params.x0,
                      params.alphas[m], eps, &mine.d_l0, &mine.d_x0, &mine.d_alphas[m]);
        }
    }
    for (const Gradient& p : partial) {
        grad.d_l0 += p.d_l0;
        grad.d_x0 += p.d_x0;
        for (std::size_t m = 0; m < grad.d_alphas.size(); ++m) {
            grad.d_alphas[m] += p.d_alphas[m];
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Fit: L-BFGS on the unconstrained reparameterization
// ---------------------------------------------------------------------------

namespace {

// theta layout: [u][v][a_0..a_{M-1}] with u/v dropped when the matching
// dataset parameter is fixed. (l0, x0) = (s*r, s*(1-r)) with s = sigmoid(u),
// r = sigmoid(v) keeps every iterate inside the simplex; with one side
// fixed the other is scaled into the remaining budget.
struct Reparam {
    std::optional<double> fix_l0;
    std::optional<double> fix_x0;
    std::size_t n_models = 0;

    bool has_u() const { return !fix_l0 && !fix_x0; }
    bool has_v() const { return !(fix_l0 && fix_x0); }
    std::size_t alpha_offset() const {
        return (has_u() ? 1u : 0u) + (has_v() ? 1u : 0u);
    }
    std::size_t dim() const { return alpha_offset() + n_models; }

    Params to_params(const std::vector<double>& theta) const {
        Params p;
        if (fix_l0 && fix_x0) {
            p.l0 = *fix_l0;
            p.x0 = *fix_x0;
        } else if (fix_l0) {
            p.l0 = *fix_l0;
            p.x0 = (1.0 - *fix_l0) * sigmoid(theta[0]);
        } else if (fix_x0) {
            p.x0 = *fix_x0;
            p.l0 = (1.0 - *fix_x0) * sigmoid(theta[0]);
        } else {
            const double s = sigmoid(theta[0]);
            const double r = sigmoid(theta[1]);
            p.l0 = s * r;
            p.x0 = s * (1.0 - r);
        }
        p.alphas.reserve(n_models);
        for (std::size_t m = 0; m < n_models; ++m) {
            p.alphas.push_back(softplus(theta[alpha_offset() + m]));
        }
        return p;
    }

    std::vector<double> from_natural(double l0, double x0, const std::vector<double>& alphas) const {
        std::vector<double> theta;
        theta.reserve(dim());
        if (fix_l0 && fix_x0) {
            // nothing
        } else if (fix_l0) {
            theta.push_back(logit(x0 / std::max(1.0 - *fix_l0, 1e-12)));
        } else if (fix_x0) {
            theta.push_back(logit(l0 / std::max(1.0 - *fix_x0, 1e-12)));
        } else {
            const double s = std::clamp(l0 + x0, 1e-9, 1.0 - 1e-9);
            theta.push_back(logit(s));
            theta.push_back(logit(l0 / s));
        }
        for (const double alpha : alphas) {
            theta.push_back(inv_softplus(alpha));
        }
        return theta;
    }

    // Chain rule: natural gradient -> theta gradient.
    void pullback(const std::vector<double>& theta, const Gradient& natural,
                  std::vector<double>& out) const {
        out.assign(dim(), 0.0);
        if (fix_l0 && fix_x0) {
            // no dataset coordinates
        } else if (fix_l0) {
            const double sv = sigmoid(theta[0]);
            out[0] = natural.d_x0 * (1.0 - *fix_l0) * sv * (1.0 - sv);
        } else if (fix_x0) {
            const double su = sigmoid(theta[0]);
            out[0] = natural.d_l0 * (1.0 - *fix_x0) * su * (1.0 - su);
        } else {
            const double su = sigmoid(theta[0]);
            const double sv = sigmoid(theta[1]);
            const double dsu = su * (1.0 - su);
            const double dsv = sv * (1.0 - sv);
            out[0] = natural.d_l0 * dsu * sv + natural.d_x0 * dsu * (1.0 - sv);
            out[1] = natural.d_l0 * su * dsv - natural.d_x0 * su * dsv;
        }
        for (std::size_t m = 0; m < n_models; ++m) {
            out[alpha_offset() + m] =
                natural.d_alphas[m] * sigmoid(theta[alpha_offset() + m]);
        }
    }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(const std::vector<double>& a) {
    double s = 0.0;
    for (const double v : a) s = std::max(s, std::abs(v));
    return s;
}

struct LbfgsOutcome {
    std::vector<double> theta;
    double value = 0.0;
    bool converged = false;
    std::vector<double> trace;
};

LbfgsOutcome lbfgs_minimize(std::span<const ModelObservations> models, const Reparam& repar,
                            std::vector<double> theta, const FitConfig& config) {
    constexpr std::size_t kHistory = 8;
    constexpr double kArmijo = 1e-4;

    const auto eval = [&](const std::vector<double>& t, std::vector<double>* grad_out) {
        const Params p = repar.to_params(t);
        if (grad_out == nullptr) {
            return nll(models, p, config.prob_floor, config.workers);
        }
        const Gradient g = nll_gradient(models, p, config.prob_floor, config.workers);
        repar.pullback(t, g, *grad_out);
        double value = nll(models, p, config.prob_floor, config.workers);
        return value;
    };

    LbfgsOutcome out;
    std::vector<double> grad;
    double f = eval(theta, &grad);
    out.trace.push_back(f);
    if (config.on_iterate) config.on_iterate(repar.to_params(theta));

    std::deque<std::pair<std::vector<double>, std::vector<double>>> history;  // (s, y)
    std::vector<double> direction(theta.size());
    std::vector<double> theta_new(theta.size());
    std::vector<double> grad_new(theta.size());

    for (int iter = 0; iter < config.max_iter; ++iter) {
        // Two-loop recursion.
        direction = grad;
        std::vector<double> alpha_hist(history.size());
        for (std::size_t k = history.size(); k-- > 0;) {
            const auto& [s, y] = history[k];
            const double rho = 1.0 / dot(y, s);
            alpha_hist[k] = rho * dot(s, direction);
            for (std::size_t i = 0; i < direction.size(); ++i) {
                direction[i] -= alpha_hist[k] * y[i];
            }
        }
        if (!history.empty()) {
            const auto& [s, y] = history.back();
            const double gamma = dot(s, y) / dot(y, y);
            for (double& d : direction) d *= gamma;
        }
        for (std::size_t k = 0; k < history.size(); ++k) {
            const auto& [s, y] = history[k];
            const double rho = 1.0 / dot(y, s);
            const double beta = rho * dot(y, direction);
            for (std::size_t i = 0; i < direction.size(); ++i) {
                direction[i] += s[i] * (alpha_hist[k] - beta);
            }
        }
        for (double& d : direction) d = -d;

        double dg = dot(direction, grad);
        if (dg > 0.0) {  // not a descent direction; fall back to steepest
            for (std::size_t i = 0; i < direction.size(); ++i) direction[i] = -grad[i];
            dg = -dot(grad, grad);
        }

        // Backtracking line search (Armijo), accepts only non-increase.
        double step = history.empty() ? std::min(1.0, 1.0 / (1.0 + inf_norm(grad))) : 1.0;
        double f_new = f;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            for (std::size_t i = 0; i < theta.size(); ++i) {
                theta_new[i] = theta[i] + step * direction[i];
            }
            f_new = eval(theta_new, nullptr);
            if (std::isfinite(f_new) && f_new <= f + kArmijo * step * dg) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.converged = inf_norm(grad) < 1e-8;
            break;
        }

        eval(theta_new, &grad_new);
        std::vector<double> s(theta.size());
        std::vector<double> y(theta.size());
        double sy = 0.0, ss = 0.0, yy = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            s[i] = theta_new[i] - theta[i];
            y[i] = grad_new[i] - grad[i];
            sy += s[i] * y[i];
            ss += s[i] * s[i];
            yy += y[i] * y[i];
        }
        if (sy > 1e-12 * std::sqrt(ss) * std::sqrt(yy) && sy > 0.0) {
            history.emplace_back(std::move(s), std::move(y));
            if (history.size() > kHistory) history.pop_front();
        }

        const double decrease = f - f_new;
        theta.swap(theta_new);
        grad.swap(grad_new);
        f = f_new;
        out.trace.push_back(f);
        if (config.on_iterate) config.on_iterate(repar.to_params(theta));
        if (decrease < config.tol) {
            out.converged = true;
            break;
        }
    }
    out.theta = std::move(theta);
    out.value = f;
    return out;
}

}  // namespace

FitResult fit(const std::vector<ModelObservations>& models, const FitConfig& config) {
    if (models.empty()) {
        throw ValidationError("fit requires at least one model");
    }
    for (const auto& m : models) {
        if (m.n_records == 0) {
            throw ValidationError("model '" + m.model_id + "' has no records");
        }
    }
    std::set<Count> distinct;
    for (const auto& m : models) {
        for (const auto& g : m.groups) distinct.insert(g.x);
        if (distinct.size() >= 2) break;
    }
    if (distinct.size() < 2) {
        throw ValidationError(
            "fit is unidentifiable: all facts share a single frequency value");
    }
    if (!(config.prob_floor > 0.0) || config.prob_floor > 1e-6) {
        throw ValidationError("prob_floor must be in (0, 1e-6]");
    }
    if (config.fix_l0 && *config.fix_l0 < 0.0) {
        throw ValidationError("fixed l0 must be >= 0");
    }
    if (config.fix_x0 && *config.fix_x0 < 0.0) {
        throw ValidationError("fixed x0 must be >= 0");
    }
    if (config.fix_l0 && config.fix_x0 && *config.fix_l0 + *config.fix_x0 > 1.0) {
        throw ValidationError("fixed l0 + x0 must not exceed 1");
    }

    Reparam repar;
    repar.fix_l0 = config.fix_l0;
    repar.fix_x0 = config.fix_x0;
    repar.n_models = models.size();

    const std::span<const ModelObservations> span(models.data(), models.size());
    std::optional<LbfgsOutcome> best;
    const int starts = std::max(config.starts, 1);
    Rng jitter(config.seed ^ 0x5ef17a1c0ffee123ull);
    for (int k = 0; k < starts; ++k) {
        double l0 = config.init_l0;
        double x0 = config.init_x0;
        double alpha = config.init_alpha;
        if (k > 0) {
            l0 *= std::exp((jitter.uniform() - 0.5) * 2.0);
            x0 *= std::exp((jitter.uniform() - 0.5) * 2.0);
            alpha *= std::exp((jitter.uniform() - 0.5) * 3.0);
        }
        if (config.fix_l0) l0 = *config.fix_l0;
        if (config.fix_x0) x0 = *config.fix_x0;
        if (l0 + x0 > 0.999) {
            const double scale = 0.999 / (l0 + x0);
            if (!config.fix_l0) l0 *= scale;
            if (!config.fix_x0) x0 *= scale;
        }
        const std::vector<double> alphas(models.size(), std::max(alpha, 1e-6));
        LbfgsOutcome outcome =
            lbfgs_minimize(span, repar, repar.from_natural(l0, x0, alphas), config);
        if (!best || outcome.value < best->value) {
            best = std::move(outcome);
        }
    }

    Params final_params = repar.to_params(best->theta);
    FitResult result;
    result.converged = best->converged;
    result.trace = std::move(best->trace);

    // Models with no incorrect answers make the alpha MLE diverge; report
    // them at the cap and mark the fit degenerate.
    bool clamped = false;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const bool all_correct = models[m].n_correct == models[m].n_records;
        if (all_correct || final_params.alphas[m] > config.alpha_cap) {
            final_params.alphas[m] = config.alpha_cap;
            result.degenerate_models.push_back(models[m].model_id);
            clamped = true;
        }
    }
    if (clamped) {
        result.converged = false;
    }

    result.l0 = final_params.l0;
    result.x0 = final_params.x0;
    for (std::size_t m = 0; m < models.size(); ++m) {
        result.alphas.emplace(models[m].model_id, final_params.alphas[m]);
    }
    result.nll = nll(span, final_params, config.prob_floor, config.workers);
    return result;
}

FitResult fit(const std::vector<FrequencyTable>& tables, const std::vector<AnswerLog>& logs,
              const FitConfig& config) {
    if (tables.size() != logs.size()) {
        throw ValidationError("fit needs one frequency table per answer log");
    }
    std::vector<ModelObservations> models;
    models.reserve(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
        models.push_back(ModelObservations::join(tables[i], logs[i]));
    }
    return fit(models, config);
}

double nll(const std::vector<FrequencyTable>& tables, const std::vector<AnswerLog>& logs,
           double l0, double x0, const std::map<std::string, double>& alphas, double eps) {
    if (tables.size() != logs.size()) {
        throw ValidationError("nll needs one frequency table per answer log");
    }
    std::vector<ModelObservations> models;
    Params params;
    params.l0 = l0;
    params.x0 = x0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto it = alphas.find(logs[i].model_id);
        if (it == alphas.end()) {
            throw ValidationError("no alpha for model '" + logs[i].model_id + "'");
        }
        models.push_back(ModelObservations::join(tables[i], logs[i]));
        params.alphas.push_back(it->second);
    }
    return nll(std::span<const ModelObservations>(models.data(), models.size()), params, eps);
}

}  // namespace sefkit::alphafit
