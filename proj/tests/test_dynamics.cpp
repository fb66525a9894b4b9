#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sefkit/dynamics.hpp"
#include "sefkit/error.hpp"
#include "sefkit/matcher.hpp"
#include "sefkit/rng.hpp"
#include "sefkit/synth.hpp"

using namespace sefkit;
using namespace sefkit::dynamics;

TEST_SUITE_BEGIN("dynamics");

namespace {

// Three-slice fixture: growing cumulative counts, one respondent per slice.
struct SliceFixture {
    std::vector<FrequencyTable> cumulative;
    std::vector<AnswerLog> logs;
    std::vector<std::string> models;
};

SliceFixture make_fixture(std::size_t n_facts = 800, std::size_t n_models = 2,
                          std::uint64_t seed = 40) {
    SliceFixture fx;
    FrequencyTable total;
    const auto counts = synth::zipf_counts(n_facts, 1.1, 512, seed);
    for (std::size_t i = 0; i < n_facts; ++i) {
        total.counts["F" + std::to_string(i)] = counts[i];
    }
    for (std::size_t s = 0; s < 3; ++s) {
        FrequencyTable slice;
        for (const auto& [id, x] : total.counts) {
            slice.counts[id] = x * (s + 1) / 3;  // non-decreasing, ends at x
        }
        fx.cumulative.push_back(std::move(slice));
    }
    for (std::size_t m = 0; m < n_models; ++m) {
        const std::string model = "m" + std::to_string(m);
        fx.models.push_back(model);
        for (std::size_t s = 0; s < 3; ++s) {
            AnswerLog log = synth::gen_respondent(fx.cumulative[s], 0.05, 0.9,
                                                  0.08 + 0.04 * static_cast<double>(m),
                                                  seed + 31 * m + s, model, std::to_string(s));
            fx.logs.push_back(std::move(log));
        }
    }
    return fx;
}

TrajectoryTable random_trajectory(std::size_t n_models, std::size_t n_slices,
                                  std::uint64_t seed) {
    Rng rng(seed);
    TrajectoryTable traj;
    traj.slice_count = n_slices;
    for (std::size_t m = 0; m < n_models; ++m) {
        traj.model_ids.push_back("m" + std::to_string(m));
        for (std::size_t s = 0; s < n_slices; ++s) {
            TrajectoryRow row;
            row.model_id = traj.model_ids.back();
            row.slice = s;
            row.accuracy = rng.uniform();
            row.wasb = rng.uniform();
            row.alpha = rng.uniform();
            traj.rows.push_back(std::move(row));
        }
    }
    return traj;
}

std::array<std::vector<double>, 3> metric_vectors(const TrajectoryTable& traj, CorrMode mode) {
    std::array<std::vector<double>, 3> v;
    for (const auto& model : traj.model_ids) {
        for (std::size_t s = 0; s < traj.slice_count; ++s) {
            if (mode == CorrMode::final_state && s != traj.slice_count - 1) continue;
            const TrajectoryRow& row = traj.at(model, s);
            v[0].push_back(row.accuracy);
            v[1].push_back(row.wasb);
            v[2].push_back(row.alpha);
        }
    }
    return v;
}

}  // namespace

TEST_CASE("accuracy ignores counts; identical logs give equal accuracy per slice") {
    FrequencyTable total;
    for (int i = 0; i < 200; ++i) total.counts["F" + std::to_string(i)] = 1 + i % 60;

    std::vector<FrequencyTable> cumulative(2);
    for (const auto& [id, x] : total.counts) {
        cumulative[0].counts[id] = x / 2;
        cumulative[1].counts[id] = x;
    }
    std::vector<AnswerLog> logs;
    AnswerLog base = synth::gen_respondent(total, 0.05, 0.9, 0.1, 8, "m", "0");
    logs.push_back(base);
    base.checkpoint_id = "1";
    logs.push_back(base);

    const TrajectoryTable traj = per_slice_metrics(cumulative, logs);
    CHECK(traj.at("m", 0).accuracy == traj.at("m", 1).accuracy);
}

TEST_CASE("last-slice metrics equal the single-shot computations exactly") {
    const SliceFixture fx = make_fixture();
    PerSliceOptions options;
    const TrajectoryTable traj = per_slice_metrics(fx.cumulative, fx.logs, options);

    // Single-shot on the totals (last cumulative table).
    const FrequencyTable& totals = fx.cumulative.back();
    std::vector<alphafit::ModelObservations> obs;
    std::vector<const AnswerLog*> final_logs;
    for (const auto& log : fx.logs) {
        if (log.checkpoint_id == "2") final_logs.push_back(&log);
    }
    REQUIRE(final_logs.size() == fx.models.size());
    for (const AnswerLog* log : final_logs) {
        obs.push_back(alphafit::ModelObservations::join(totals, *log));
    }
    const FitResult single_shot = alphafit::fit(obs, options.fit);

    for (const AnswerLog* log : final_logs) {
        const TrajectoryRow& row = traj.at(log->model_id, 2);
        CHECK(row.accuracy == metrics::overall_accuracy(*log));
        CHECK(row.wasb ==
              metrics::wasb(totals, *log, metrics::default_buckets(), options.lambda));
        CHECK(row.alpha == single_shot.alphas.at(log->model_id));
    }
}

TEST_CASE("hand-computed three-slice accuracy trajectory") {
    std::vector<FrequencyTable> cumulative(3);
    for (int s = 0; s < 3; ++s) {
        cumulative[s].counts = {{"a", Count(s + 1)}, {"b", Count(2 * (s + 1))},
                                {"c", Count(3 * (s + 1))}, {"d", 0}};
    }
    std::vector<AnswerLog> logs;
    logs.push_back(AnswerLog{"m", "0", {{"a", true}, {"b", false}, {"c", false}, {"d", false}}});
    logs.push_back(AnswerLog{"m", "1", {{"a", true}, {"b", true}, {"c", false}, {"d", false}}});
    logs.push_back(AnswerLog{"m", "2", {{"a", true}, {"b", true}, {"c", true}, {"d", false}}});

    const TrajectoryTable traj = per_slice_metrics(cumulative, logs);
    CHECK(traj.at("m", 0).accuracy == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(traj.at("m", 1).accuracy == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(traj.at("m", 2).accuracy == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("missing checkpoints are reported by model and slice") {
    SliceFixture fx = make_fixture(100, 1, 3);
    fx.logs.erase(fx.logs.begin() + 1);  // drop (m0, slice 1)
    CHECK_THROWS_WITH_AS(per_slice_metrics(fx.cumulative, fx.logs),
                         doctest::Contains("m0, slice 1"), ValidationError);
}

TEST_CASE("duplicated metric correlates at exactly 1") {
    TrajectoryTable traj = random_trajectory(4, 5, 2);
    for (auto& row : traj.rows) row.wasb = row.accuracy;  // duplicate under a second name
    const CorrelationResult corr = correlation_matrix(traj, CorrMode::all_slices);
    CHECK(corr.matrix[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(corr.defined[0][1]);
}

TEST_CASE("zero-variance metric is flagged undefined") {
    TrajectoryTable traj = random_trajectory(4, 1, 3);
    for (auto& row : traj.rows) row.alpha = 0.5;
    const CorrelationResult corr = correlation_matrix(traj, CorrMode::final_state);
    CHECK_FALSE(corr.defined[2][2]);
    CHECK_FALSE(corr.defined[0][2]);
    CHECK_FALSE(corr.defined[2][0]);
    CHECK(corr.defined[0][1]);
    CHECK(corr.order[2] == 2);  // undefined sorts last
}

TEST_CASE("correlations match the independent oracle in both modes") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const TrajectoryTable traj = random_trajectory(4, 5, seed);
        for (const CorrMode mode : {CorrMode::final_state, CorrMode::all_slices}) {
            const CorrelationResult corr = correlation_matrix(traj, mode);
            const auto vectors = metric_vectors(traj, mode);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    const double expected =
                        i == j ? 1.0 : oracles::naive_pearson(vectors[i], vectors[j]);
                    REQUIRE(corr.defined[i][j]);
                    CHECK(std::abs(corr.matrix[i][j] - expected) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("correlation matrix is symmetric with unit diagonal and [-1,1] entries") {
    const TrajectoryTable traj = random_trajectory(5, 4, 77);
    const CorrelationResult corr = correlation_matrix(traj, CorrMode::all_slices);
    for (int i = 0; i < 3; ++i) {
        CHECK(corr.matrix[i][i] == 1.0);
        for (int j = 0; j < 3; ++j) {
            CHECK(corr.matrix[i][j] == corr.matrix[j][i]);
            CHECK(corr.matrix[i][j] >= -1.0 - 1e-12);
            CHECK(corr.matrix[i][j] <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("positive affine rescaling of one metric leaves correlations unchanged") {
    TrajectoryTable traj = random_trajectory(4, 6, 5);
    const CorrelationResult base = correlation_matrix(traj, CorrMode::all_slices);
    for (auto& row : traj.rows) row.wasb = 3.5 * row.wasb + 0.25;
    const CorrelationResult scaled = correlation_matrix(traj, CorrMode::all_slices);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(base.matrix[i][j] - scaled.matrix[i][j]) < 1e-12);
        }
    }
}

TEST_CASE("spearman is invariant under monotone transforms") {
    TrajectoryTable traj = random_trajectory(4, 6, 6);
    const CorrelationResult base = correlation_matrix(traj, CorrMode::all_slices, true);
    for (auto& row : traj.rows) row.accuracy = std::pow(row.accuracy, 3.0);
    const CorrelationResult cubed = correlation_matrix(traj, CorrMode::all_slices, true);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(base.matrix[i][j] - cubed.matrix[i][j]) < 1e-12);
        }
    }
}

TEST_CASE("mode preconditions") {
    CHECK_THROWS_AS(correlation_matrix(random_trajectory(2, 3, 1), CorrMode::final_state),
                    ValidationError);
    CHECK_THROWS_AS(correlation_matrix(random_trajectory(1, 3, 1), CorrMode::all_slices),
                    ValidationError);
    CHECK_THROWS_AS(correlation_matrix(random_trajectory(3, 1, 1), CorrMode::all_slices),
                    ValidationError);
}

TEST_CASE("trajectory CSV round-trips") {
    const TrajectoryTable traj = random_trajectory(3, 4, 9);
    const std::string csv = format_trajectory_csv(traj, "manifest {\"seed\":9}");
    const TrajectoryTable parsed = parse_trajectory_csv(csv);
    CHECK(parsed.slice_count == traj.slice_count);
    REQUIRE(parsed.model_ids == traj.model_ids);
    for (const auto& model : traj.model_ids) {
        for (std::size_t s = 0; s < traj.slice_count; ++s) {
            CHECK(parsed.at(model, s).accuracy == traj.at(model, s).accuracy);
            CHECK(parsed.at(model, s).wasb == traj.at(model, s).wasb);
            CHECK(parsed.at(model, s).alpha == traj.at(model, s).alpha);
        }
    }
    CHECK_THROWS_AS(parse_trajectory_csv("model_id,slice\n"), ParseError);
}

TEST_SUITE_END();
