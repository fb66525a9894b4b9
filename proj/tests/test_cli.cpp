// End-to-end checks against the installed binary (SEFKIT_BIN). Exit-code
// conventions: 0 success, 1 validation failure, 2 usage error.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sefkit/core.hpp"
#include "sefkit/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

TEST_SUITE_BEGIN("cli");

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

const char* binary() {
    const char* bin = std::getenv("SEFKIT_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "SEFKIT_BIN must point at the sefkit binary");
    return bin;
}

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(binary()) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
        result.out.append(buf, n);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

// Fresh working directory per test run.
fs::path workdir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "sefkit_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string path_of(const std::string& name) { return (workdir() / name).string(); }

void write_fixture_catalog() {
    sefkit::write_file(
        path_of("facts.jsonl"),
        R"({"fact_id":"f1","relation_id":"r","subject":{"label":"alpha1x bravo2x"},"object":{"label":"charlie3x","aliases":["charlie3x delta4x"]}})"
        "\n"
        R"({"fact_id":"f2","relation_id":"r","subject":{"label":"echo5x"},"object":{"label":"foxtrot6x"}})"
        "\n"
        R"({"fact_id":"f3","relation_id":"r","subject":{"label":"golf7x hotel8x"},"object":{"label":"india9x"}})"
        "\n");
}

}  // namespace

TEST_CASE("usage errors exit 2, help exits 0") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("fit").exit_code == 2);               // missing required flags
    CHECK(run_cli("no-such-command").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);                  // subcommand required
}

TEST_CASE("synth corpus, count, respondent, fit pipeline") {
    write_fixture_catalog();
    sefkit::write_file(path_of("targets.json"), R"({"f1": 6, "f2": 3, "f3": 0})" "\n");

    CHECK(run_cli("synth corpus --facts " + path_of("facts.jsonl") + " --targets " +
                  path_of("targets.json") + " --filler 20 --docs 4 --seed 11 --out-dir " +
                  path_of("corpus") + " --truth " + path_of("truth.json"))
              .exit_code == 0);

    CHECK(run_cli("count --facts " + path_of("facts.jsonl") + " --corpus " + path_of("corpus") +
                  " --slices 2 --out " + path_of("counts.json"))
              .exit_code == 0);

    // Counting must reproduce the planted truth exactly.
    const auto counted = sefkit::load_frequency_table(path_of("counts.json"));
    const auto truth = sefkit::load_frequency_table(path_of("truth.json"));
    CHECK(counted.counts == truth.counts);
    CHECK(counted.slice_count() == 2);

    // Validation joins cleanly against the truth table.
    CHECK(run_cli("validate --facts " + path_of("facts.jsonl") + " --counts " +
                  path_of("counts.json"))
              .exit_code == 0);

    // A larger synthetic table drives the fit end to end.
    sefkit::FrequencyTable big;
    for (int i = 0; i < 400; ++i) {
        big.counts["F" + std::to_string(i)] = static_cast<sefkit::Count>(i % 50);
    }
    sefkit::save_frequency_table(path_of("big_counts.json"), big);
    CHECK(run_cli("synth respondent --counts " + path_of("big_counts.json") +
                  " --l0 0.0 --x0 0.88 --alpha 0.3 --seed 3 --model-id strong --out " +
                  path_of("strong.jsonl"))
              .exit_code == 0);
    CHECK(run_cli("synth respondent --counts " + path_of("big_counts.json") +
                  " --l0 0.0 --x0 0.88 --alpha 0.05 --seed 4 --model-id weak --out " +
                  path_of("weak.jsonl"))
              .exit_code == 0);

    const CliResult fit = run_cli("fit --counts " + path_of("big_counts.json") + " --answers " +
                                  path_of("strong.jsonl") + " --answers " + path_of("weak.jsonl") +
                                  " --fix-l0 0.0 --fix-x0 0.88 --seed 0");
    REQUIRE(fit.exit_code == 0);
    const json report = json::parse(fit.out);
    CHECK(report["converged"].get<bool>());
    CHECK(report["l0"].get<double>() == 0.0);
    CHECK(report["x0"].get<double>() == 0.88);
    // The planted ordering survives the round trip through files.
    CHECK(report["alphas"]["strong"].get<double>() > report["alphas"]["weak"].get<double>());
    CHECK(report["alphas"]["strong"].get<double>() > 0.1);
    CHECK(report["alphas"]["weak"].get<double>() < 0.2);
}

TEST_CASE("wasb prints a JSON report to stdout") {
    sefkit::FrequencyTable table;
    table.counts = {{"a", 0}, {"b", 3}, {"c", 9}};
    sefkit::save_frequency_table(path_of("wasb_counts.json"), table);
    sefkit::AnswerLog log{"m", "final", {{"a", true}, {"b", true}, {"c", false}}};
    sefkit::save_answer_logs(path_of("wasb_answers.jsonl"), {log});

    const CliResult r = run_cli("wasb --counts " + path_of("wasb_counts.json") + " --answers " +
                                path_of("wasb_answers.jsonl"));
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report["models"].size() == 1);
    CHECK(report["models"][0]["wasb"].is_number());
    CHECK(report["manifest"]["command"] == "wasb");
}

TEST_CASE("validate exits 1 when id sets mismatch") {
    write_fixture_catalog();
    sefkit::FrequencyTable table;
    table.counts = {{"f1", 1}, {"f2", 2}};  // f3 missing
    sefkit::save_frequency_table(path_of("partial.json"), table);
    const CliResult r = run_cli("validate --facts " + path_of("facts.jsonl") + " --counts " +
                                path_of("partial.json"));
    CHECK(r.exit_code == 1);
    const json report = json::parse(r.out);
    CHECK(report["joinable"] == false);
    CHECK(report["catalog_not_in_table"][0] == "f3");
}

TEST_CASE("count output is identical across worker counts") {
    write_fixture_catalog();
    sefkit::write_file(path_of("targets2.json"), R"({"f1": 40, "f2": 25, "f3": 10})" "\n");
    REQUIRE(run_cli("synth corpus --facts " + path_of("facts.jsonl") + " --targets " +
                    path_of("targets2.json") + " --filler 200 --docs 16 --seed 21 --out-dir " +
                    path_of("corpus2"))
                .exit_code == 0);

    REQUIRE(run_cli("count --facts " + path_of("facts.jsonl") + " --corpus " + path_of("corpus2") +
                    " --slices 4 --workers 1 --out " + path_of("w1.json"))
                .exit_code == 0);
    REQUIRE(run_cli("count --facts " + path_of("facts.jsonl") + " --corpus " + path_of("corpus2") +
                    " --slices 4 --workers 8 --out " + path_of("w8.json"))
                .exit_code == 0);
    CHECK(sefkit::read_file(path_of("w1.json")) == sefkit::read_file(path_of("w8.json")));
}

TEST_CASE("seeded commands are byte-reproducible") {
    sefkit::FrequencyTable table;
    for (int i = 0; i < 300; ++i) {
        table.counts["F" + std::to_string(i)] = static_cast<sefkit::Count>(i % 20);
    }
    sefkit::save_frequency_table(path_of("split_counts.json"), table);

    REQUIRE(run_cli("split --counts " + path_of("split_counts.json") +
                    " --size 100 --profile low --seed 9 --out " + path_of("split_a.json"))
                .exit_code == 0);
    REQUIRE(run_cli("split --counts " + path_of("split_counts.json") +
                    " --size 100 --profile low --seed 9 --out " + path_of("split_b.json"))
                .exit_code == 0);
    CHECK(sefkit::read_file(path_of("split_a.json")) == sefkit::read_file(path_of("split_b.json")));

    REQUIRE(run_cli("synth respondent --counts " + path_of("split_counts.json") +
                    " --alpha 0.1 --seed 5 --out " + path_of("resp_a.jsonl"))
                .exit_code == 0);
    REQUIRE(run_cli("synth respondent --counts " + path_of("split_counts.json") +
                    " --alpha 0.1 --seed 5 --out " + path_of("resp_b.jsonl"))
                .exit_code == 0);
    CHECK(sefkit::read_file(path_of("resp_a.jsonl")) == sefkit::read_file(path_of("resp_b.jsonl")));
}

TEST_CASE("dynamics and correlate run over a sliced table") {
    // Sliced counts with growing per-slice mass.
    sefkit::FrequencyTable table;
    table.slices.resize(3);
    for (int i = 0; i < 120; ++i) {
        const std::string id = "F" + std::to_string(i);
        const sefkit::Count total = static_cast<sefkit::Count>(i % 24);
        table.counts[id] = total;
        table.slices[0][id] = total / 3;
        table.slices[1][id] = total / 3;
        table.slices[2][id] = total - 2 * (total / 3);
    }
    table.validate();
    sefkit::save_frequency_table(path_of("sliced.json"), table);

    // Respondents for 3 models x 3 checkpoints.
    fs::create_directories(workdir() / "answers");
    for (int m = 0; m < 3; ++m) {
        for (int s = 0; s < 3; ++s) {
            const std::string name = "m" + std::to_string(m) + "_s" + std::to_string(s) + ".jsonl";
            const std::string cmd =
                "synth respondent --counts " + path_of("sliced.json") + " --l0 0.02 --x0 0.9 " +
                "--alpha 0." + std::to_string(5 + 3 * m) + " --seed " + std::to_string(100 + 10 * m + s) +
                " --model-id m" + std::to_string(m) + " --checkpoint-id " + std::to_string(s) +
                " --out " + (workdir() / "answers" / name).string();
            REQUIRE(run_cli(cmd).exit_code == 0);
        }
    }

    REQUIRE(run_cli("dynamics --slice-counts " + path_of("sliced.json") + " --answers " +
                    (workdir() / "answers").string() + " --out " + path_of("traj.csv"))
                .exit_code == 0);
    const std::string traj = sefkit::read_file(path_of("traj.csv"));
    CHECK(traj.find("model_id,slice,accuracy,wasb,alpha") != std::string::npos);

    REQUIRE(run_cli("correlate --traj " + path_of("traj.csv") + " --mode all --out " +
                    path_of("corr.csv"))
                .exit_code == 0);
    const std::string corr = sefkit::read_file(path_of("corr.csv"));
    CHECK(corr.find("ACC") != std::string::npos);
    CHECK(run_cli("correlate --traj " + path_of("traj.csv") + " --mode final").exit_code == 0);
}

TEST_SUITE_END();
