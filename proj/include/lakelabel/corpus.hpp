#pragma once

#include "lakelabel/common.hpp"

#include <cstdint>
#include <optional>
#include <map>
#include <string>
#include <vector>

namespace lakelabel {

/// One table column: the unit instance of the whole pipeline.
struct ColumnInstance {
    std::string column_id;
    std::string table_id;
    std::optional<std::string> header; // carried for provenance, never consulted by LFs
    std::vector<std::string> values;
    std::optional<int> gold_label; // index into the owning vocabulary

    bool operator==(const ColumnInstance&) const = default;
};

/// Ordered set of semantic-type names. Names must stay distinct after
/// trimming and ASCII case-folding.
class LabelVocabulary {
public:
    LabelVocabulary() = default;
    static LabelVocabulary from_names(const std::vector<std::string>& names);

    // Returns the index of the (trimmed) name, inserting it if new.
    int add(const std::string& name);
    std::optional<int> index_of(const std::string& name) const;
    const std::string& name(int index) const;
    const std::vector<std::string>& names() const { return names_; }
    int size() const { return static_cast<int>(names_.size()); }

    bool operator==(const LabelVocabulary& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::map<std::string, int> folded_index_;
};

struct DatasetProvenance {
    std::string source_path;
    std::string ingested_at; // wall-clock; excluded from serialization and equality
};

struct Dataset {
    LabelVocabulary vocabulary;
    std::vector<ColumnInstance> columns;
    DatasetProvenance provenance;
};

enum class CorpusFormat { Jsonl, CsvDir };

CorpusFormat corpus_format_from_name(const std::string& name);
std::string corpus_format_name(CorpusFormat format);

// labels_path, when set, points at a JSON array of label names that fixes
// the vocabulary; gold labels outside it are errors. Without it the
// vocabulary is the union of gold labels in first-appearance order.
Dataset load_dataset(const std::string& path, CorpusFormat format,
                     const std::optional<std::string>& labels_path = std::nullopt);

std::string dataset_to_jsonl(const Dataset& dataset);
void save_dataset_jsonl(const Dataset& dataset, const std::string& path);

std::string vocabulary_to_json(const LabelVocabulary& vocabulary);
LabelVocabulary vocabulary_from_json_text(const std::string& text);

/// Order-free statistics over a column's cells; the closed set consumed by
/// statistical labeling functions.
struct AggregateStats {
    bool defined = false; // false iff the column has no cells
    std::size_t cell_count = 0;
    double fraction_numeric = 0.0;
    bool has_numeric = false;
    double numeric_min = 0.0;
    double numeric_max = 0.0;
    double numeric_mean = 0.0;
    double mean_length = 0.0;
    double distinct_ratio = 0.0;
    std::vector<double> numeric_values; // multiset of parsed numerics, unordered

    // Fraction of all cells that parse numeric and fall in [lo, hi].
    double fraction_in_numeric_range(double lo, double hi) const;
};

AggregateStats column_aggregates(const ColumnInstance& column);

struct SeedColumn {
    std::string column_id;
    std::vector<std::string> values; // the sampled subset, in draw order
    bool operator==(const SeedColumn&) const = default;
};

struct SeedGroup {
    int label = -1;
    std::uint64_t rng_seed = 0; // per-label stream seed actually used
    std::vector<SeedColumn> columns;
    bool operator==(const SeedGroup&) const = default;
};

struct SeedSet {
    std::uint64_t rng_seed = 0;
    std::size_t per_type_columns = 0;
    std::size_t values_per_column = 0;
    std::vector<SeedGroup> groups;

    // The paper-facing N: total sampled columns across groups.
    std::size_t instance_count() const;
    bool operator==(const SeedSet&) const = default;
};

SeedSet sample_seeds(const Dataset& dataset, std::size_t per_type_columns,
                     std::size_t values_per_column, std::uint64_t rng_seed);

std::string seed_set_to_json(const SeedSet& seeds, const LabelVocabulary& vocabulary);
SeedSet seed_set_from_json_text(const std::string& text, const LabelVocabulary& vocabulary);

} // namespace lakelabel
