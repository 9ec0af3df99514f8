#pragma once

#include "lakelabel/corpus.hpp"
#include "lakelabel/eval.hpp"
#include "lakelabel/label_model.hpp"
#include "lakelabel/lf.hpp"
#include "lakelabel/lf_filter.hpp"
#include "lakelabel/lf_gen.hpp"
#include "lakelabel/stacked.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lakelabel {

struct PartitionConfig {
    int K = 5;
    std::string method = "kmeans"; // "kmeans" | "hierarchy" | "single"
    std::optional<std::string> hierarchy_path;
    int embedding_dim = 128;
    std::uint64_t rng_seed = 13;
    std::string embedding_provider = "char_ngram_hash"; // or "external"
    std::string embedding_endpoint;
};

struct PipelineConfig {
    std::string corpus_path;
    CorpusFormat corpus_format = CorpusFormat::Jsonl;
    std::optional<std::string> labels_path;

    std::size_t per_type_columns = 10;
    std::size_t values_per_column = 5;
    std::uint64_t seed_rng_seed = 7;

    GenerationConfig generation;
    std::optional<std::string> template_path;

    FilterConfig filter;
    FitConfig fit;
    PartitionConfig partition;

    std::string output_dir = "out";
};

// Canonical JSON round-trip; output_dir is excluded from the manifest form
// so golden runs into different directories stay byte-identical.
nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& cfg, bool include_output_dir);
PipelineConfig pipeline_config_from_json(const nlohmann::ordered_json& doc);
PipelineConfig load_pipeline_config(const std::string& path);

// Individual pipeline stages. Each reads/writes the artifact files under
// cfg.output_dir and finishes by refreshing the run manifest.
void stage_ingest(const PipelineConfig& cfg);
void stage_seed(const PipelineConfig& cfg);
void stage_genlf(const PipelineConfig& cfg);
void stage_apply(const PipelineConfig& cfg);
void stage_filter(const PipelineConfig& cfg);
void stage_partition(const PipelineConfig& cfg);
void stage_train(const PipelineConfig& cfg);
void stage_predict(const PipelineConfig& cfg);
void stage_eval(const PipelineConfig& cfg);
void stage_export(const PipelineConfig& cfg);

// Full composition in stage order. Returns the final report. When the
// existing manifest matches the config and input hashes and force is
// false, the run is skipped as a no-op.
EvalReport run_pipeline(const PipelineConfig& cfg, bool force = false);

// Artifact file names under the output directory.
namespace artifact {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kDataset = "dataset.jsonl";
inline constexpr const char* kVocabulary = "vocabulary.json";
inline constexpr const char* kSeeds = "seeds.json";
inline constexpr const char* kPromptTemplate = "prompt_template.txt";
inline constexpr const char* kExchanges = "exchanges.jsonl";
inline constexpr const char* kWarnings = "genlf_warnings.json";
inline constexpr const char* kLfsRaw = "lfs_raw.json";
inline constexpr const char* kMatrixRaw = "matrix_raw.txt";
inline constexpr const char* kMatrixRawIds = "matrix_raw.ids.json";
inline constexpr const char* kSeedMatrix = "seed_matrix.txt";
inline constexpr const char* kSeedMatrixIds = "seed_matrix.ids.json";
inline constexpr const char* kLfStats = "lf_stats.json";
inline constexpr const char* kLfsFiltered = "lfs_filtered.json";
inline constexpr const char* kMatrix = "matrix.txt";
inline constexpr const char* kMatrixIds = "matrix.ids.json";
inline constexpr const char* kPartition = "partition.json";
inline constexpr const char* kModelDir = "model";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kWeakLabels = "weak_labels.jsonl";
inline constexpr const char* kReport = "report.json";
} // namespace artifact

struct SynthConfig {
    std::size_t types = 20;
    std::size_t columns_per_type = 100;
    std::size_t min_cells = 20;
    std::size_t max_cells = 40;
    double noise = 0.1; // per-cell corruption probability
    std::uint64_t rng_seed = 42;
    std::vector<std::string> heldout_labels; // declared in the vocabulary, never used as gold
};

struct SynthOutput {
    Dataset dataset;
    std::vector<std::string> label_names; // full declared vocabulary, heldouts included
};

// Synthetic corpus with planted keyword / numeric-range / character-shape
// patterns, cycling kinds over the type list.
SynthOutput generate_synthetic(const SynthConfig& cfg);
void write_synthetic(const SynthConfig& cfg, const std::string& corpus_path,
                     const std::string& labels_path);

} // namespace lakelabel
