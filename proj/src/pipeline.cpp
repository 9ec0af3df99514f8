#include "lakelabel/pipeline.hpp"

#include "lakelabel/text.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <unordered_map>

namespace lakelabel {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

namespace {

std::vector<LfKind> kinds_from_json(const ordered_json& arr) {
    std::vector<LfKind> kinds;
    for (const auto& k : arr) {
        std::string name = k.get<std::string>();
        if (name == "keyword") kinds.push_back(LfKind::Keyword);
        else if (name == "statistical") kinds.push_back(LfKind::Statistical);
        else if (name == "regex") kinds.push_back(LfKind::Regex);
        else throw Error("generation.kinds: unknown kind '" + name + "'");
    }
    if (kinds.empty()) throw Error("generation.kinds must be non-empty");
    return kinds;
}

ordered_json kinds_to_json(const std::vector<LfKind>& kinds) {
    ordered_json arr = ordered_json::array();
    for (LfKind k : kinds) arr.push_back(lf_kind_name(k));
    return arr;
}

} // namespace

ordered_json pipeline_config_to_json(const PipelineConfig& cfg, bool include_output_dir) {
    ordered_json doc;
    doc["corpus"] = {{"path", cfg.corpus_path},
                     {"format", corpus_format_name(cfg.corpus_format)},
                     {"labels", cfg.labels_path ? ordered_json(*cfg.labels_path) : ordered_json(nullptr)}};
    doc["seed"] = {{"per_type_columns", cfg.per_type_columns},
                   {"values_per_column", cfg.values_per_column},
                   {"rng_seed", cfg.seed_rng_seed}};
    doc["generation"] = {
        {"backend",
         {{"name", cfg.generation.backend.name},
          {"endpoint", cfg.generation.backend.endpoint},
          {"model", cfg.generation.backend.model}}},
        {"template_path", cfg.template_path ? ordered_json(*cfg.template_path) : ordered_json(nullptr)},
        {"shots", cfg.generation.shots},
        {"delimiter", cfg.generation.delimiter},
        {"kinds", kinds_to_json(cfg.generation.kinds_requested)},
        {"max_lfs_per_response", cfg.generation.max_lfs_per_response},
        {"temperature", cfg.generation.temperature},
        {"max_tokens", cfg.generation.max_tokens},
        {"max_retries", cfg.generation.max_retries},
        {"max_in_flight", cfg.generation.max_in_flight}};
    doc["filter"] = {{"min_accuracy", cfg.filter.min_accuracy},
                     {"min_coverage_votes", cfg.filter.min_coverage_votes},
                     {"redundancy_jaccard", cfg.filter.redundancy_jaccard}};
    doc["fit"] = {{"max_iter", cfg.fit.max_iter},
                  {"tol", cfg.fit.tol},
                  {"param_clamp", cfg.fit.param_clamp},
                  {"rng_seed", cfg.fit.rng_seed},
                  {"smoothing", cfg.fit.smoothing}};
    doc["partition"] = {
        {"K", cfg.partition.K},
        {"method", cfg.partition.method},
        {"hierarchy_path",
         cfg.partition.hierarchy_path ? ordered_json(*cfg.partition.hierarchy_path) : ordered_json(nullptr)},
        {"embedding_dim", cfg.partition.embedding_dim},
        {"rng_seed", cfg.partition.rng_seed},
        {"embedding_provider", cfg.partition.embedding_provider},
        {"embedding_endpoint", cfg.partition.embedding_endpoint}};
    if (include_output_dir) doc["output_dir"] = cfg.output_dir;
    return doc;
}

PipelineConfig pipeline_config_from_json(const ordered_json& doc) {
    PipelineConfig cfg;
    if (doc.contains("corpus")) {
        const auto& c = doc["corpus"];
        if (c.contains("path")) cfg.corpus_path = c["path"].get<std::string>();
        if (c.contains("format")) cfg.corpus_format = corpus_format_from_name(c["format"].get<std::string>());
        if (c.contains("labels") && !c["labels"].is_null())
            cfg.labels_path = c["labels"].get<std::string>();
    }
    if (doc.contains("seed")) {
        const auto& s = doc["seed"];
        if (s.contains("per_type_columns")) cfg.per_type_columns = s["per_type_columns"].get<std::size_t>();
        if (s.contains("values_per_column")) cfg.values_per_column = s["values_per_column"].get<std::size_t>();
        if (s.contains("rng_seed")) cfg.seed_rng_seed = s["rng_seed"].get<std::uint64_t>();
    }
    if (doc.contains("generation")) {
        const auto& g = doc["generation"];
        if (g.contains("backend")) {
            const auto& b = g["backend"];
            if (b.contains("name")) cfg.generation.backend.name = b["name"].get<std::string>();
            if (b.contains("endpoint")) cfg.generation.backend.endpoint = b["endpoint"].get<std::string>();
            if (b.contains("model")) cfg.generation.backend.model = b["model"].get<std::string>();
        }
        if (g.contains("template_path") && !g["template_path"].is_null())
            cfg.template_path = g["template_path"].get<std::string>();
        if (g.contains("shots")) cfg.generation.shots = g["shots"].get<std::size_t>();
        if (g.contains("delimiter")) cfg.generation.delimiter = g["delimiter"].get<std::string>();
        if (g.contains("kinds")) cfg.generation.kinds_requested = kinds_from_json(g["kinds"]);
        if (g.contains("max_lfs_per_response"))
            cfg.generation.max_lfs_per_response = g["max_lfs_per_response"].get<std::size_t>();
        if (g.contains("temperature")) cfg.generation.temperature = g["temperature"].get<double>();
        if (g.contains("max_tokens")) cfg.generation.max_tokens = g["max_tokens"].get<std::size_t>();
        if (g.contains("max_retries")) cfg.generation.max_retries = g["max_retries"].get<int>();
        if (g.contains("max_in_flight")) cfg.generation.max_in_flight = g["max_in_flight"].get<std::size_t>();
    }
    if (doc.contains("filter")) {
        const auto& f = doc["filter"];
        if (f.contains("min_accuracy")) cfg.filter.min_accuracy = f["min_accuracy"].get<double>();
        if (f.contains("min_coverage_votes"))
            cfg.filter.min_coverage_votes = f["min_coverage_votes"].get<std::size_t>();
        if (f.contains("redundancy_jaccard"))
            cfg.filter.redundancy_jaccard = f["redundancy_jaccard"].get<double>();
    }
    if (doc.contains("fit")) {
        const auto& f = doc["fit"];
        if (f.contains("max_iter")) cfg.fit.max_iter = f["max_iter"].get<int>();
        if (f.contains("tol")) cfg.fit.tol = f["tol"].get<double>();
        if (f.contains("param_clamp")) cfg.fit.param_clamp = f["param_clamp"].get<double>();
        if (f.contains("rng_seed")) cfg.fit.rng_seed = f["rng_seed"].get<std::uint64_t>();
        if (f.contains("smoothing")) cfg.fit.smoothing = f["smoothing"].get<double>();
    }
    if (doc.contains("partition")) {
        const auto& p = doc["partition"];
        if (p.contains("K")) cfg.partition.K = p["K"].get<int>();
        if (p.contains("method")) cfg.partition.method = p["method"].get<std::string>();
        if (p.contains("hierarchy_path") && !p["hierarchy_path"].is_null())
            cfg.partition.hierarchy_path = p["hierarchy_path"].get<std::string>();
        if (p.contains("embedding_dim")) cfg.partition.embedding_dim = p["embedding_dim"].get<int>();
        if (p.contains("rng_seed")) cfg.partition.rng_seed = p["rng_seed"].get<std::uint64_t>();
        if (p.contains("embedding_provider"))
            cfg.partition.embedding_provider = p["embedding_provider"].get<std::string>();
        if (p.contains("embedding_endpoint"))
            cfg.partition.embedding_endpoint = p["embedding_endpoint"].get<std::string>();
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed config " + path + ": " + e.what());
    }
    return pipeline_config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Artifact helpers

namespace {

std::string out_path(const PipelineConfig& cfg, const char* name) {
    return (fs::path(cfg.output_dir) / name).string();
}

Dataset load_ingested(const PipelineConfig& cfg) {
    return load_dataset(out_path(cfg, artifact::kDataset), CorpusFormat::Jsonl,
                        out_path(cfg, artifact::kVocabulary));
}

void write_matrix_with_ids(const PipelineConfig& cfg, const LabelMatrix& matrix,
                           const char* matrix_name, const char* ids_name) {
    write_text_file(out_path(cfg, matrix_name), matrix_to_text(matrix));
    ordered_json ids;
    ids["instance_ids"] = matrix.instance_ids;
    ids["lf_ids"] = matrix.lf_ids;
    write_text_file(out_path(cfg, ids_name), ids.dump(2) + "\n");
}

LabelMatrix load_matrix_with_ids(const PipelineConfig& cfg, const char* matrix_name,
                                 const char* ids_name) {
    LabelMatrix matrix = matrix_from_text(read_text_file(out_path(cfg, matrix_name)));
    ordered_json ids;
    try {
        ids = ordered_json::parse(read_text_file(out_path(cfg, ids_name)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed matrix ids file: ") + e.what());
    }
    for (const auto& v : ids.at("instance_ids")) matrix.instance_ids.push_back(v.get<std::string>());
    for (const auto& v : ids.at("lf_ids")) matrix.lf_ids.push_back(v.get<std::string>());
    if (matrix.instance_ids.size() != matrix.n || matrix.lf_ids.size() != matrix.m)
        throw Error("matrix ids file disagrees with matrix dimensions");
    return matrix;
}

// Seed instances: the reduced seed columns, gold by construction.
std::pair<std::vector<ColumnInstance>, std::vector<int>> seed_instances(const SeedSet& seeds) {
    std::vector<ColumnInstance> columns;
    std::vector<int> gold;
    for (const auto& group : seeds.groups) {
        for (const auto& sc : group.columns) {
            ColumnInstance col;
            col.column_id = sc.column_id;
            col.table_id = "seed";
            col.values = sc.values;
            col.gold_label = group.label;
            columns.push_back(std::move(col));
            gold.push_back(group.label);
        }
    }
    return {columns, gold};
}

LabelMatrix restrict_matrix_columns(const LabelMatrix& matrix, const std::vector<std::size_t>& keep) {
    LabelMatrix out;
    out.n = matrix.n;
    out.m = keep.size();
    out.instance_ids = matrix.instance_ids;
    std::vector<int> new_index(matrix.m, -1);
    for (std::size_t k = 0; k < keep.size(); ++k) {
        new_index[keep[k]] = static_cast<int>(k);
        if (keep[k] < matrix.lf_ids.size()) out.lf_ids.push_back(matrix.lf_ids[keep[k]]);
    }
    for (const auto& v : matrix.votes)
        if (new_index[v.lf] >= 0)
            out.votes.push_back({v.instance, static_cast<std::uint32_t>(new_index[v.lf]), v.label});
    return out;
}

LabelMatrix select_matrix_rows(const LabelMatrix& matrix, const std::vector<std::size_t>& rows) {
    LabelMatrix out;
    out.n = rows.size();
    out.m = matrix.m;
    out.lf_ids = matrix.lf_ids;
    std::vector<int> new_index(matrix.n, -1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        new_index[rows[r]] = static_cast<int>(r);
        if (rows[r] < matrix.instance_ids.size()) out.instance_ids.push_back(matrix.instance_ids[rows[r]]);
    }
    for (const auto& v : matrix.votes)
        if (new_index[v.instance] >= 0)
            out.votes.push_back({static_cast<std::uint32_t>(new_index[v.instance]), v.lf, v.label});
    return out;
}

ordered_json partition_to_json(const Partition& partition, const LabelVocabulary& vocabulary) {
    ordered_json doc;
    doc["K"] = partition.K;
    doc["method"] = partition.method;
    doc["provenance"] = partition.provenance;
    doc["groups"] = ordered_json::array();
    for (const auto& g : partition.groups) {
        ordered_json names = ordered_json::array();
        for (int y : g) names.push_back(vocabulary.name(y));
        doc["groups"].push_back(std::move(names));
    }
    return doc;
}

Partition partition_from_json_text(const std::string& text, const LabelVocabulary& vocabulary) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed partition file: ") + e.what());
    }
    Partition partition;
    partition.K = doc.at("K").get<int>();
    partition.method = doc.at("method").get<std::string>();
    partition.provenance = doc.at("provenance").get<std::string>();
    for (const auto& jg : doc.at("groups")) {
        std::vector<int> group;
        for (const auto& name : jg) {
            auto idx = vocabulary.index_of(name.get<std::string>());
            if (!idx) throw Error("partition references unknown label '" + name.get<std::string>() + "'");
            group.push_back(*idx);
        }
        std::sort(group.begin(), group.end());
        partition.groups.push_back(std::move(group));
    }
    partition.validate(vocabulary.size());
    return partition;
}

PromptTemplate resolve_template(const PipelineConfig& cfg) {
    if (cfg.template_path) return PromptTemplate::from_file_text(read_text_file(*cfg.template_path));
    return PromptTemplate::defaults();
}

std::optional<std::string> file_hash(const std::optional<std::string>& path) {
    if (!path) return std::nullopt;
    return to_hex(fnv1a64(read_text_file(*path)));
}

ordered_json manifest_inputs(const PipelineConfig& cfg) {
    ordered_json inputs;
    auto put = [&](const char* key, const std::optional<std::string>& hash) {
        inputs[key] = hash ? ordered_json(*hash) : ordered_json(nullptr);
    };
    put("corpus", file_hash(cfg.corpus_path));
    put("labels", file_hash(cfg.labels_path));
    put("template", file_hash(cfg.template_path));
    put("hierarchy", file_hash(cfg.partition.hierarchy_path));
    return inputs;
}

const char* kAllArtifacts[] = {
    artifact::kDataset,    artifact::kVocabulary, artifact::kSeeds,       artifact::kPromptTemplate,
    artifact::kExchanges,  artifact::kWarnings,   artifact::kLfsRaw,      artifact::kMatrixRaw,
    artifact::kMatrixRawIds, artifact::kSeedMatrix, artifact::kSeedMatrixIds, artifact::kLfStats,
    artifact::kLfsFiltered, artifact::kMatrix,    artifact::kMatrixIds,   artifact::kPartition,
    artifact::kPredictions, artifact::kWeakLabels, artifact::kReport,
};

void write_manifest(const PipelineConfig& cfg) {
    ordered_json doc;
    doc["config"] = pipeline_config_to_json(cfg, /*include_output_dir=*/false);
    doc["inputs"] = manifest_inputs(cfg);
    ordered_json artifacts = ordered_json::array();
    for (const char* name : kAllArtifacts)
        if (fs::exists(fs::path(cfg.output_dir) / name)) artifacts.push_back(name);
    if (fs::exists(fs::path(cfg.output_dir) / artifact::kModelDir / "manifest.json"))
        artifacts.push_back(std::string(artifact::kModelDir) + "/");
    doc["artifacts"] = std::move(artifacts);
    doc["status"] = "ok";
    write_text_file(out_path(cfg, artifact::kManifest), doc.dump(2) + "\n");
}

bool manifest_matches(const PipelineConfig& cfg) {
    fs::path path = fs::path(cfg.output_dir) / artifact::kManifest;
    if (!fs::exists(path)) return false;
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_text_file(path.string()));
    } catch (...) {
        return false;
    }
    if (!doc.contains("config") || !doc.contains("inputs") || doc.value("status", "") != "ok")
        return false;
    try {
        return doc["config"] == pipeline_config_to_json(cfg, false) &&
               doc["inputs"] == manifest_inputs(cfg);
    } catch (...) {
        return false;
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Stages

void stage_ingest(const PipelineConfig& cfg) {
    Dataset dataset = load_dataset(cfg.corpus_path, cfg.corpus_format, cfg.labels_path);
    save_dataset_jsonl(dataset, out_path(cfg, artifact::kDataset));
    write_text_file(out_path(cfg, artifact::kVocabulary), vocabulary_to_json(dataset.vocabulary));
    write_manifest(cfg);
}

void stage_seed(const PipelineConfig& cfg) {
    Dataset dataset = load_ingested(cfg);
    SeedSet seeds =
        sample_seeds(dataset, cfg.per_type_columns, cfg.values_per_column, cfg.seed_rng_seed);
    write_text_file(out_path(cfg, artifact::kSeeds), seed_set_to_json(seeds, dataset.vocabulary));
    write_manifest(cfg);
}

void stage_genlf(const PipelineConfig& cfg) {
    Dataset dataset = load_ingested(cfg);
    SeedSet seeds = seed_set_from_json_text(read_text_file(out_path(cfg, artifact::kSeeds)),
                                            dataset.vocabulary);
    PromptTemplate tmpl = resolve_template(cfg);
    write_text_file(out_path(cfg, artifact::kPromptTemplate), tmpl.to_file_text());

    auto backend = make_backend(cfg.generation.backend, cfg.generation.delimiter);
    GenerationResult result = generate_lfs(*backend, seeds, dataset.vocabulary,
                                           default_demonstrations(), cfg.generation, tmpl);

    write_text_file(out_path(cfg, artifact::kLfsRaw), lf_set_to_json(result.lfs, dataset.vocabulary));
    write_text_file(out_path(cfg, artifact::kExchanges), exchanges_to_jsonl(result.exchanges));
    ordered_json warnings = result.warnings;
    write_text_file(out_path(cfg, artifact::kWarnings), warnings.dump(2) + "\n");
    write_manifest(cfg);
}

void stage_apply(const PipelineConfig& cfg) {
    Dataset dataset = load_ingested(cfg);
    auto lfs = lf_set_from_json_text(read_text_file(out_path(cfg, artifact::kLfsRaw)),
                                     dataset.vocabulary);
    LabelMatrix matrix = apply_all(lfs, dataset.columns);
    write_matrix_with_ids(cfg, matrix, artifact::kMatrixRaw, artifact::kMatrixRawIds);
    write_manifest(cfg);
}

void stage_filter(const PipelineConfig& cfg) {
    Dataset dataset = load_ingested(cfg);
    auto lfs = lf_set_from_json_text(read_text_file(out_path(cfg, artifact::kLfsRaw)),
                                     dataset.vocabulary);
    SeedSet seeds = seed_set_from_json_text(read_text_file(out_path(cfg, artifact::kSeeds)),
                                            dataset.vocabulary);

    auto [seed_cols, seed_gold] = seed_instances(seeds);
    LabelMatrix seed_matrix = apply_all(lfs, seed_cols);
    write_matrix_with_ids(cfg, seed_matrix, artifact::kSeedMatrix, artifact::kSeedMatrixIds);

    auto retained = accuracy_filter(lfs, seed_matrix, seed_gold, cfg.filter);
    {
        // Redundancy pass runs on the seed matrix restricted to survivors.
        std::set<std::string> kept_ids;
        for (const auto& lf : retained) kept_ids.insert(lf.id);
        std::vector<std::size_t> keep_cols;
        for (std::size_t j = 0; j < lfs.size(); ++j)
            if (kept_ids.count(lfs[j].id)) keep_cols.push_back(j);
        LabelMatrix retained_matrix = restrict_matrix_columns(seed_matrix, keep_cols);
        retained = redundancy_filter(retained, retained_matrix, seed_gold, cfg.filter);
    }

    auto stats = lf_stats(seed_matrix, seed_gold);
    std::set<std::string> final_ids;
    for (const auto& lf : retained) final_ids.insert(lf.id);
    ordered_json stats_doc;
    stats_doc["lfs"] = ordered_json::array();
    for (std::size_t j = 0; j < lfs.size(); ++j) {
        ordered_json row;
        row["id"] = lfs[j].id;
        row["votes"] = stats[j].votes;
        row["correct"] = stats[j].correct;
        row["coverage"] = stats[j].coverage;
        row["overlap"] = stats[j].overlap;
        row["conflict"] = stats[j].conflict;
        row["empirical_accuracy"] = stats[j].empirical_accuracy
                                        ? ordered_json(*stats[j].empirical_accuracy)
                                        : ordered_json(nullptr);
        row["retained"] = final_ids.count(lfs[j].id) > 0;
        stats_doc["lfs"].push_back(std::move(row));
    }
    stats_doc["avg_lf_f1_on_seeds"] = avg_lf_f1(lfs, seed_matrix, seed_gold);
    write_text_file(out_path(cfg, artifact::kLfStats), stats_doc.dump(2) + "\n");

    write_text_file(out_path(cfg, artifact::kLfsFiltered), lf_set_to_json(retained, dataset.vocabulary));

    // Restrict the raw full-corpus matrix to the retained LF columns.
    LabelMatrix raw = load_matrix_with_ids(cfg, artifact::kMatrixRaw, artifact::kMatrixRawIds);
    std::vector<std::size_t> keep_cols;
    for (std::size_t j = 0; j < raw.lf_ids.size(); ++j)
        if (final_ids.count(raw.lf_ids[j])) keep_cols.push_back(j);
    LabelMatrix filtered = restrict_matrix_columns(raw, keep_cols);
    write_matrix_with_ids(cfg, filtered, artifact::kMatrix, artifact::kMatrixIds);
    write_manifest(cfg);
}

void stage_partition(const PipelineConfig& cfg) {
    LabelVocabulary vocabulary =
        vocabulary_from_json_text(read_text_file(out_path(cfg, artifact::kVocabulary)));
    Partition partition;
    if (cfg.partition.method == "single") {
        partition = single_partition(vocabulary.size());
    } else if (cfg.partition.method == "kmeans") {
        Eigen::MatrixXd embeddings =
            cfg.partition.embedding_provider == "external"
                ? embed_labels_external(vocabulary, cfg.partition.embedding_endpoint,
                                        cfg.partition.embedding_dim)
                : embed_labels(vocabulary, cfg.partition.embedding_dim);
        partition = kmeans_partition(embeddings, cfg.partition.K, cfg.partition.rng_seed);
    } else if (cfg.partition.method == "hierarchy") {
        if (!cfg.partition.hierarchy_path)
            throw Error("partition method 'hierarchy' needs partition.hierarchy_path");
        partition = hierarchy_partition_from_text(read_text_file(*cfg.partition.hierarchy_path),
                                                  vocabulary, *cfg.partition.hierarchy_path);
    } else {
        throw Error("unknown partition method '" + cfg.partition.method + "'");
    }
    write_text_file(out_path(cfg, artifact::kPartition),
                    partition_to_json(partition, vocabulary).dump(2) + "\n");
    write_manifest(cfg);
}

void stage_train(const PipelineConfig& cfg) {
    Dataset dataset = load_ingested(cfg);
    LabelMatrix matrix = load_matrix_with_ids(cfg, artifact::kMatrix, artifact::kMatrixIds);
    auto lfs = lf_set_from_json_text(read_text_file(out_path(cfg, artifact::kLfsFiltered)),
                                     dataset.vocabulary);
    SeedSet seeds = seed_set_from_json_text(read_text_file(out_path(cfg, artifact::kSeeds)),
                                            dataset.vocabulary);
    Partition partition = partition_from_json_text(read_text_file(out_path(cfg, artifact::kPartition)),
                                                   dataset.vocabulary);

    if (lfs.size() != matrix.m) throw Error("filtered LF set and matrix disagree on LF count");
    std::vector<int> lf_targets;
    for (std::size_t j = 0; j < lfs.size(); ++j) {
        if (lfs[j].id != matrix.lf_ids[j]) throw Error("LF order mismatch between LF file and matrix");
        lf_targets.push_back(lfs[j].target_label);
    }

    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < matrix.instance_ids.size(); ++i) row_of[matrix.instance_ids[i]] = i;
    std::map<std::size_t, int> clamped;
    for (const auto& group : seeds.groups) {
        for (const auto& sc : group.columns) {
            auto it = row_of.find(sc.column_id);
            if (it == row_of.end())
                throw Error("seed column '" + sc.column_id + "' is missing from the matrix");
            clamped[it->second] = group.label;
        }
    }

    StackedModel model = fit_stacked(matrix, lf_targets, partition, clamped, cfg.fit);
    save_stacked(model, dataset.vocabulary, out_path(cfg, artifact::kModelDir));
    write_manifest(cfg);
}

namespace {

std::vector<RoutedPrediction> routed_predictions(const PipelineConfig& cfg,
                                                 const LabelVocabulary& vocabulary,
                                                 LabelMatrix& matrix) {
    matrix = load_matrix_with_ids(cfg, artifact::kMatrix, artifact::kMatrixIds);
    StackedModel model = load_stacked(out_path(cfg, artifact::kModelDir), vocabulary);
    return route_predict_all(model, matrix);
}

} // namespace

void stage_predict(const PipelineConfig& cfg) {
    LabelVocabulary vocabulary =
        vocabulary_from_json_text(read_text_file(out_path(cfg, artifact::kVocabulary)));
    LabelMatrix matrix;
    auto routed = routed_predictions(cfg, vocabulary, matrix);

    std::ostringstream out;
    for (std::size_t i = 0; i < routed.size(); ++i) {
        ordered_json line;
        line["column_id"] = matrix.instance_ids[i];
        line["label"] = routed[i].abstained ? ordered_json(nullptr)
                                            : ordered_json(vocabulary.name(routed[i].label));
        line["prob"] = routed[i].prob;
        line["abstained"] = routed[i].abstained;
        out << line.dump() << "\n";
    }
    write_text_file(out_path(cfg, artifact::kPredictions), out.str());
    write_manifest(cfg);
}

void stage_export(const PipelineConfig& cfg) {
    LabelVocabulary vocabulary =
        vocabulary_from_json_text(read_text_file(out_path(cfg, artifact::kVocabulary)));
    LabelMatrix matrix;
    auto routed = routed_predictions(cfg, vocabulary, matrix);

    std::vector<WeakLabelRecord> records;
    for (std::size_t i = 0; i < routed.size(); ++i) {
        WeakLabelRecord rec;
        rec.column_id = matrix.instance_ids[i];
        rec.abstained = routed[i].abstained;
        const auto& probs = routed[i].global_probs;
        if (routed[i].abstained) {
            int best = 0;
            for (int y = 1; y < probs.size(); ++y)
                if (probs[y] > probs[best]) best = y;
            rec.label = best;
        } else {
            rec.label = routed[i].label;
        }
        rec.probs.assign(probs.data(), probs.data() + probs.size());
        records.push_back(std::move(rec));
    }
    export_weak_labels(records, vocabulary, out_path(cfg, artifact::kWeakLabels));
    write_manifest(cfg);
}

void stage_eval(const PipelineConfig& cfg) {
    Dataset dataset = load_ingested(cfg);
    SeedSet seeds = seed_set_from_json_text(read_text_file(out_path(cfg, artifact::kSeeds)),
                                            dataset.vocabulary);
    auto lfs = lf_set_from_json_text(read_text_file(out_path(cfg, artifact::kLfsFiltered)),
                                     dataset.vocabulary);
    LabelMatrix matrix = load_matrix_with_ids(cfg, artifact::kMatrix, artifact::kMatrixIds);

    // Routed predictions, keyed by column id.
    std::unordered_map<std::string, int> predicted;
    {
        std::istringstream in(read_text_file(out_path(cfg, artifact::kPredictions)));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            ordered_json doc;
            try {
                doc = ordered_json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw Error("predictions line " + std::to_string(lineno) + ": " + e.what());
            }
            int label = kAbstain;
            if (!doc.at("label").is_null()) {
                auto idx = dataset.vocabulary.index_of(doc["label"].get<std::string>());
                if (!idx) throw Error("predictions line " + std::to_string(lineno) + ": unknown label");
                label = *idx;
            }
            predicted[doc.at("column_id").get<std::string>()] = label;
        }
    }

    std::set<std::string> seed_ids;
    for (const auto& group : seeds.groups)
        for (const auto& sc : group.columns) seed_ids.insert(sc.column_id);

    // Evaluation split: gold-labeled columns that were not used as seeds.
    std::vector<std::size_t> eval_rows;
    std::vector<int> gold;
    std::vector<int> preds;
    for (std::size_t i = 0; i < dataset.columns.size(); ++i) {
        const auto& col = dataset.columns[i];
        if (!col.gold_label || seed_ids.count(col.column_id)) continue;
        auto it = predicted.find(col.column_id);
        if (it == predicted.end())
            throw Error("no prediction found for column '" + col.column_id + "'");
        eval_rows.push_back(i);
        gold.push_back(*col.gold_label);
        preds.push_back(it->second);
    }
    if (gold.empty()) throw Error("evaluation split is empty: every gold column is a seed");

    EvalReport report = evaluate(preds, gold, dataset.vocabulary.size());
    report.stage = "stacked";

    LabelMatrix eval_matrix = select_matrix_rows(matrix, eval_rows);
    report.avg_lf_f1 = avg_lf_f1(lfs, eval_matrix, gold);

    auto mv = majority_vote(eval_matrix, dataset.vocabulary.size());
    EvalReport mv_report = evaluate(mv, gold, dataset.vocabulary.size());
    report.majority_vote_micro_f1 = mv_report.micro_f1;
    report.majority_vote_macro_f1 = mv_report.macro_f1;
    report.notes =
        "avg_lf_f1 treats each LF's votes as one-vs-rest binary predictions of its target "
        "(abstain = negative) and averages binary F1 unweighted across LFs; abstained "
        "instances count as missed recall in micro F1.";

    write_text_file(out_path(cfg, artifact::kReport),
                    report_to_json(report, dataset.vocabulary).dump(2) + "\n");
    write_manifest(cfg);
}

// ---------------------------------------------------------------------------
// Composition

EvalReport run_pipeline(const PipelineConfig& cfg, bool force) {
    if (!force && manifest_matches(cfg) &&
        fs::exists(fs::path(cfg.output_dir) / artifact::kReport)) {
        LabelVocabulary vocabulary =
            vocabulary_from_json_text(read_text_file(out_path(cfg, artifact::kVocabulary)));
        return report_from_json_text(read_text_file(out_path(cfg, artifact::kReport)), vocabulary);
    }

    struct Stage {
        const char* name;
        void (*fn)(const PipelineConfig&);
    };
    const Stage stages[] = {
        {"ingest", stage_ingest},   {"seed", stage_seed},       {"genlf", stage_genlf},
        {"apply", stage_apply},     {"filter", stage_filter},   {"partition", stage_partition},
        {"train", stage_train},     {"predict", stage_predict}, {"eval", stage_eval},
        {"export", stage_export},
    };
    for (const auto& stage : stages) {
        try {
            stage.fn(cfg);
        } catch (const Error& e) {
            throw Error("stage " + std::string(stage.name) + ": " + e.what());
        }
    }
    LabelVocabulary vocabulary =
        vocabulary_from_json_text(read_text_file(out_path(cfg, artifact::kVocabulary)));
    return report_from_json_text(read_text_file(out_path(cfg, artifact::kReport)), vocabulary);
}

} // namespace lakelabel
