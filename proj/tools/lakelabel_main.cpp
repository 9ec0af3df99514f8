// lakelabel - weak-supervision labeling pipeline for semantic column types.
//
// Subcommands run one pipeline stage each against an output directory of
// artifacts; `run` chains them all. See README.md for the file formats.

#include "lakelabel/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using lakelabel::PipelineConfig;

struct CliOverrides {
    std::string config_path;
    std::string corpus, format, labels, out;
    std::string backend, endpoint, model, template_path, delimiter, kinds;
    std::string method, hierarchy, embedding_provider, embedding_endpoint;
    std::uint64_t seed_rng = 0, partition_seed = 0;
    std::size_t per_type_columns = 0, values_per_column = 0, shots = 0;
    std::size_t max_lfs = 0, max_in_flight = 0;
    double min_accuracy = 0, redundancy_jaccard = 0, tol = 0, noise = 0;
    std::size_t min_coverage_votes = 0;
    int k = 0, max_iter = 0, embedding_dim = 0;
    bool force = false;
};

// Registers the shared pipeline flags on one subcommand. Only flags the
// user actually passed override the config file; repeated flags take the
// last value.
void add_pipeline_options(CLI::App* cmd, CliOverrides& o) {
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--config", o.config_path, "pipeline config JSON");
    cmd->add_option("--corpus", o.corpus, "corpus path");
    cmd->add_option("--format", o.format, "corpus format: jsonl | csv-dir");
    cmd->add_option("--labels", o.labels, "declared label vocabulary JSON file");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed-rng", o.seed_rng, "seed-sampling RNG seed");
    cmd->add_option("--per-type-columns", o.per_type_columns, "seed columns per type");
    cmd->add_option("--values-per-column", o.values_per_column, "seed values per column");
    cmd->add_option("--backend", o.backend, "LLM backend: mock | http");
    cmd->add_option("--endpoint", o.endpoint, "http backend endpoint");
    cmd->add_option("--model", o.model, "http backend model name");
    cmd->add_option("--template", o.template_path, "prompt template file");
    cmd->add_option("--shots", o.shots, "demonstrations per prompt");
    cmd->add_option("--delimiter", o.delimiter, "seed value delimiter");
    cmd->add_option("--kinds", o.kinds, "comma-separated LF kinds to request");
    cmd->add_option("--max-lfs-per-response", o.max_lfs, "LF cap per backend response");
    cmd->add_option("--max-in-flight", o.max_in_flight, "concurrent backend calls");
    cmd->add_option("--min-accuracy", o.min_accuracy, "accuracy filter threshold");
    cmd->add_option("--min-coverage-votes", o.min_coverage_votes, "minimum seed votes per LF");
    cmd->add_option("--redundancy-jaccard", o.redundancy_jaccard, "redundancy filter threshold");
    cmd->add_option("--max-iter", o.max_iter, "EM iteration cap");
    cmd->add_option("--tol", o.tol, "EM convergence tolerance");
    cmd->add_option("-k,--k", o.k, "label-space group count");
    cmd->add_option("--method", o.method, "partition method: kmeans | hierarchy | single");
    cmd->add_option("--hierarchy", o.hierarchy, "label hierarchy JSON file");
    cmd->add_option("--embedding-dim", o.embedding_dim, "label embedding dimension");
    cmd->add_option("--embedding-provider", o.embedding_provider,
                    "embedding provider: char_ngram_hash | external");
    cmd->add_option("--embedding-endpoint", o.embedding_endpoint, "external embedding endpoint");
    cmd->add_option("--partition-seed", o.partition_seed, "k-means RNG seed");
}

PipelineConfig resolve_config(const CLI::App* cmd, const CliOverrides& o) {
    PipelineConfig cfg;
    if (cmd->count("--config")) cfg = lakelabel::load_pipeline_config(o.config_path);
    auto set = [&](const char* flag) { return cmd->count(flag) > 0; };
    if (set("--corpus")) cfg.corpus_path = o.corpus;
    if (set("--format")) cfg.corpus_format = lakelabel::corpus_format_from_name(o.format);
    if (set("--labels")) cfg.labels_path = o.labels;
    if (set("--out")) cfg.output_dir = o.out;
    if (set("--seed-rng")) cfg.seed_rng_seed = o.seed_rng;
    if (set("--per-type-columns")) cfg.per_type_columns = o.per_type_columns;
    if (set("--values-per-column")) cfg.values_per_column = o.values_per_column;
    if (set("--backend")) cfg.generation.backend.name = o.backend;
    if (set("--endpoint")) cfg.generation.backend.endpoint = o.endpoint;
    if (set("--model")) cfg.generation.backend.model = o.model;
    if (set("--template")) cfg.template_path = o.template_path;
    if (set("--shots")) cfg.generation.shots = o.shots;
    if (set("--delimiter")) cfg.generation.delimiter = o.delimiter;
    if (set("--kinds")) {
        std::vector<lakelabel::LfKind> kinds;
        std::string rest = o.kinds;
        while (!rest.empty()) {
            auto comma = rest.find(',');
            std::string part = rest.substr(0, comma);
            rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
            if (part == "keyword") kinds.push_back(lakelabel::LfKind::Keyword);
            else if (part == "statistical") kinds.push_back(lakelabel::LfKind::Statistical);
            else if (part == "regex") kinds.push_back(lakelabel::LfKind::Regex);
            else throw lakelabel::Error("unknown LF kind '" + part + "'");
        }
        if (kinds.empty()) throw lakelabel::Error("--kinds must name at least one kind");
        cfg.generation.kinds_requested = kinds;
    }
    if (set("--max-lfs-per-response")) cfg.generation.max_lfs_per_response = o.max_lfs;
    if (set("--max-in-flight")) cfg.generation.max_in_flight = o.max_in_flight;
    if (set("--min-accuracy")) cfg.filter.min_accuracy = o.min_accuracy;
    if (set("--min-coverage-votes")) cfg.filter.min_coverage_votes = o.min_coverage_votes;
    if (set("--redundancy-jaccard")) cfg.filter.redundancy_jaccard = o.redundancy_jaccard;
    if (set("--max-iter")) cfg.fit.max_iter = o.max_iter;
    if (set("--tol")) cfg.fit.tol = o.tol;
    if (set("--k")) cfg.partition.K = o.k;
    if (set("--method")) cfg.partition.method = o.method;
    if (set("--hierarchy")) cfg.partition.hierarchy_path = o.hierarchy;
    if (set("--embedding-dim")) cfg.partition.embedding_dim = o.embedding_dim;
    if (set("--embedding-provider")) cfg.partition.embedding_provider = o.embedding_provider;
    if (set("--embedding-endpoint")) cfg.partition.embedding_endpoint = o.embedding_endpoint;
    if (set("--partition-seed")) cfg.partition.rng_seed = o.partition_seed;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lakelabel: LF generation, filtering and stacked label-model pipeline "
                 "for semantic column type detection"};
    app.require_subcommand(1);

    CliOverrides o;

    struct SynthOpts {
        std::size_t types = 20, columns = 100, min_cells = 20, max_cells = 40;
        double noise = 0.1;
        std::uint64_t seed = 42;
        std::string out_corpus = "corpus.jsonl", out_labels;
        std::vector<std::string> heldout;
    } synth;

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus with planted patterns");
    synth_cmd->add_option("--types", synth.types, "semantic type count");
    synth_cmd->add_option("--columns", synth.columns, "columns per type");
    synth_cmd->add_option("--min-cells", synth.min_cells, "minimum cells per column");
    synth_cmd->add_option("--max-cells", synth.max_cells, "maximum cells per column");
    synth_cmd->add_option("--noise", synth.noise, "per-cell corruption probability");
    synth_cmd->add_option("--seed", synth.seed, "generator RNG seed");
    synth_cmd->add_option("--out-corpus", synth.out_corpus, "corpus JSONL path");
    synth_cmd->add_option("--out-labels", synth.out_labels, "vocabulary JSON path");
    synth_cmd->add_option("--heldout", synth.heldout,
                          "extra vocabulary labels never used as gold (repeatable)");

    const char* stage_names[] = {"ingest", "seed",  "genlf",   "apply", "filter",
                                 "partition", "train", "predict", "eval",  "export"};
    void (*stage_fns[])(const PipelineConfig&) = {
        lakelabel::stage_ingest,    lakelabel::stage_seed,  lakelabel::stage_genlf,
        lakelabel::stage_apply,     lakelabel::stage_filter, lakelabel::stage_partition,
        lakelabel::stage_train,     lakelabel::stage_predict, lakelabel::stage_eval,
        lakelabel::stage_export,
    };
    const char* stage_help[] = {
        "load a corpus and write the canonical dataset + vocabulary",
        "sample seed columns and values per semantic type",
        "build prompts and generate labeling functions via the backend",
        "apply the raw LF set to every corpus column",
        "run the accuracy and redundancy filters on the seed matrix",
        "split the label space (kmeans | hierarchy | single)",
        "fit one label model per group with seed clamping",
        "route every instance through the stacked model",
        "score routed predictions on the held-out gold columns",
        "export the weak-labeled training set",
    };

    std::vector<CLI::App*> stage_cmds;
    for (std::size_t s = 0; s < 10; ++s) {
        CLI::App* cmd = app.add_subcommand(stage_names[s], stage_help[s]);
        add_pipeline_options(cmd, o);
        stage_cmds.push_back(cmd);
    }

    auto* run_cmd = app.add_subcommand("run", "execute the full pipeline in stage order");
    add_pipeline_options(run_cmd, o);
    run_cmd->add_flag("--force", o.force, "re-run even when the manifest is up to date");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth_cmd->parsed()) {
            lakelabel::SynthConfig cfg;
            cfg.types = synth.types;
            cfg.columns_per_type = synth.columns;
            cfg.min_cells = synth.min_cells;
            cfg.max_cells = synth.max_cells;
            cfg.noise = synth.noise;
            cfg.rng_seed = synth.seed;
            cfg.heldout_labels = synth.heldout;
            lakelabel::write_synthetic(cfg, synth.out_corpus, synth.out_labels);
            std::cout << "wrote " << synth.out_corpus << " (" << synth.types << " types x "
                      << synth.columns << " columns)\n";
            return 0;
        }
        if (run_cmd->parsed()) {
            PipelineConfig cfg = resolve_config(run_cmd, o);
            lakelabel::EvalReport report = lakelabel::run_pipeline(cfg, o.force);
            std::cout << "micro_f1 " << report.micro_f1 << "\n"
                      << "macro_f1 " << report.macro_f1 << "\n"
                      << "coverage " << report.coverage << "\n";
            return 0;
        }
        for (std::size_t s = 0; s < stage_cmds.size(); ++s) {
            if (!stage_cmds[s]->parsed()) continue;
            PipelineConfig cfg = resolve_config(stage_cmds[s], o);
            try {
                stage_fns[s](cfg);
            } catch (const lakelabel::Error& e) {
                throw lakelabel::Error("stage " + std::string(stage_names[s]) + ": " + e.what());
            }
            std::cerr << stage_names[s] << ": ok\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
