#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lakelabel/common.hpp"
#include "lakelabel/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

using namespace lakelabel;
namespace fs = std::filesystem;

namespace {

const char* kCli = LAKELABEL_CLI_PATH;

int run_cmd(const std::string& args) {
    std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_cmd_stderr(const std::string& args, const fs::path& err_file) {
    std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>" + err_file.string();
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("lakelabel_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Relative path -> file bytes, for whole-directory comparison.
std::map<std::string, std::string> dir_snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        out[fs::relative(entry.path(), root).string()] = read_text_file(entry.path().string());
    }
    return out;
}

struct Workspace {
    fs::path dir;
    std::string corpus;
    std::string labels;
    std::string common_flags(const std::string& out_name) const {
        return "--corpus " + corpus + " --format jsonl --labels " + labels + " --out " +
               (dir / out_name).string() +
               " --backend mock -k 3 --per-type-columns 4 --values-per-column 4 --seed-rng 11";
    }
};

Workspace make_workspace(const std::string& tag) {
    Workspace ws;
    ws.dir = fresh_dir(tag);
    ws.corpus = (ws.dir / "corpus.jsonl").string();
    ws.labels = (ws.dir / "labels.json").string();
    int rc = run_cmd("synth --types 9 --columns 24 --min-cells 12 --max-cells 20 --noise 0.1 "
                     "--seed 5 --out-corpus " + ws.corpus + " --out-labels " + ws.labels);
    REQUIRE(rc == 0);
    return ws;
}

} // namespace

TEST_CASE("composition: chained subcommands equal run, byte for byte") {
    auto ws = make_workspace("compose");
    std::string flags_a = ws.common_flags("out_run");
    REQUIRE(run_cmd("run " + flags_a) == 0);

    std::string flags_b = ws.common_flags("out_chain");
    for (const char* stage : {"ingest", "seed", "genlf", "apply", "filter", "partition", "train",
                              "predict", "eval", "export"}) {
        REQUIRE_MESSAGE(run_cmd(std::string(stage) + " " + flags_b) == 0, "stage ", stage);
    }

    auto run_snapshot = dir_snapshot(ws.dir / "out_run");
    auto chain_snapshot = dir_snapshot(ws.dir / "out_chain");
    REQUIRE(!run_snapshot.empty());
    REQUIRE(run_snapshot.size() == chain_snapshot.size());
    for (const auto& [name, bytes] : run_snapshot) {
        REQUIRE_MESSAGE(chain_snapshot.count(name) == 1, "missing artifact ", name);
        CHECK_MESSAGE(chain_snapshot.at(name) == bytes, "artifact differs: ", name);
    }
}

TEST_CASE("determinism: two runs produce byte-identical output directories") {
    auto ws = make_workspace("golden");
    REQUIRE(run_cmd("run " + ws.common_flags("out_a")) == 0);
    REQUIRE(run_cmd("run " + ws.common_flags("out_b")) == 0);
    auto a = dir_snapshot(ws.dir / "out_a");
    auto b = dir_snapshot(ws.dir / "out_b");
    REQUIRE(!a.empty());
    REQUIRE(a.size() == b.size());
    for (const auto& [name, bytes] : a) CHECK_MESSAGE(b.at(name) == bytes, "artifact differs: ", name);
}

TEST_CASE("apply twice produces identical matrix files") {
    auto ws = make_workspace("applytwice");
    std::string flags = ws.common_flags("out");
    REQUIRE(run_cmd("ingest " + flags) == 0);
    REQUIRE(run_cmd("seed " + flags) == 0);
    REQUIRE(run_cmd("genlf " + flags) == 0);
    REQUIRE(run_cmd("apply " + flags) == 0);
    std::string first = read_text_file((ws.dir / "out" / "matrix_raw.txt").string());
    REQUIRE(run_cmd("apply " + flags) == 0);
    CHECK(read_text_file((ws.dir / "out" / "matrix_raw.txt").string()) == first);
}

TEST_CASE("eval on exported predictions reproduces the pipeline report") {
    auto ws = make_workspace("evalrepro");
    std::string flags = ws.common_flags("out");
    REQUIRE(run_cmd("run " + flags) == 0);
    std::string report = read_text_file((ws.dir / "out" / "report.json").string());
    REQUIRE(run_cmd("eval " + flags) == 0);
    CHECK(read_text_file((ws.dir / "out" / "report.json").string()) == report);
}

TEST_CASE("K greater than M fails in the partition stage with exit 2") {
    auto ws = make_workspace("kbig");
    auto err = ws.dir / "stderr.txt";
    int rc = run_cmd_stderr("run " + ws.common_flags("out") + " -k 100", err);
    CHECK(rc == 2);
    std::string message = read_text_file(err.string());
    CHECK(message.find("partition") != std::string::npos);
    CHECK(message.find("exceeds") != std::string::npos);
}

TEST_CASE("manifest no-op: rerun is skipped unless --force") {
    auto ws = make_workspace("noop");
    std::string flags = ws.common_flags("out");
    REQUIRE(run_cmd("run " + flags) == 0);
    auto before = fs::last_write_time(ws.dir / "out" / "report.json");
    REQUIRE(run_cmd("run " + flags) == 0); // manifest matches: no rewrite
    CHECK(fs::last_write_time(ws.dir / "out" / "report.json") == before);
    REQUIRE(run_cmd("run " + flags + " --force") == 0);
    CHECK(fs::last_write_time(ws.dir / "out" / "report.json") != before);
}

TEST_CASE("exit codes: usage errors are 1, stage failures are 2") {
    CHECK(run_cmd("definitely-not-a-subcommand") == 1);
    CHECK(run_cmd("run --no-such-flag") == 1);
    auto dir = fresh_dir("badpath");
    CHECK(run_cmd("ingest --corpus " + (dir / "missing.jsonl").string() + " --format jsonl --out " +
                  (dir / "out").string()) == 2);
}

TEST_CASE("config file drives the run and flags override it") {
    auto ws = make_workspace("config");
    PipelineConfig cfg;
    cfg.corpus_path = ws.corpus;
    cfg.labels_path = ws.labels;
    cfg.per_type_columns = 4;
    cfg.values_per_column = 4;
    cfg.seed_rng_seed = 11;
    cfg.partition.K = 3;
    cfg.output_dir = (ws.dir / "out_cfg").string();
    std::string cfg_path = (ws.dir / "pipeline.json").string();
    write_text_file(cfg_path, pipeline_config_to_json(cfg, true).dump(2));

    REQUIRE(run_cmd("run --config " + cfg_path) == 0);
    CHECK(fs::exists(ws.dir / "out_cfg" / "report.json"));

    // Flag overrides the config's output dir.
    REQUIRE(run_cmd("run --config " + cfg_path + " --out " + (ws.dir / "out_flag").string()) == 0);
    CHECK(fs::exists(ws.dir / "out_flag" / "report.json"));

    // The two runs agree byte-for-byte (output_dir is not part of content).
    auto a = dir_snapshot(ws.dir / "out_cfg");
    auto b = dir_snapshot(ws.dir / "out_flag");
    REQUIRE(a.size() == b.size());
    for (const auto& [name, bytes] : a) CHECK(b.at(name) == bytes);
}

TEST_CASE("hierarchy partition method through the CLI") {
    auto ws = make_workspace("hier");
    // Build a hierarchy file from the synth vocabulary.
    auto vocab = vocabulary_from_json_text(read_text_file(ws.labels));
    nlohmann::ordered_json h;
    for (int y = 0; y < vocab.size(); ++y)
        h[vocab.name(y)] = "cat" + std::to_string(y % 2);
    std::string hier_path = (ws.dir / "hierarchy.json").string();
    write_text_file(hier_path, h.dump(2));

    std::string flags = ws.common_flags("out_h") + " --method hierarchy --hierarchy " + hier_path;
    REQUIRE(run_cmd("run " + flags) == 0);
    auto part = nlohmann::ordered_json::parse(
        read_text_file((ws.dir / "out_h" / "partition.json").string()));
    CHECK(part["K"] == 2);
    CHECK(part["method"] == "hierarchy");
}
