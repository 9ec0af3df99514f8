#pragma once

#include "lakelabel/corpus.hpp"
#include "lakelabel/label_model.hpp"
#include "lakelabel/lf.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lakelabel {

/// Disjoint, exhaustive, non-empty grouping of the label space.
struct Partition {
    int K = 0;
    std::vector<std::vector<int>> groups; // label indices, each sorted ascending
    std::string method;                   // "kmeans" | "hierarchy" | "single"
    std::string provenance;

    int total_labels() const;
    void validate(int M) const; // disjoint, exhaustive, non-empty
};

Partition single_partition(int M);

// Default self-contained embedding: character trigrams of the folded label
// name hashed into `dim` buckets, L2-normalized; labels shorter than three
// characters fall back to unigram hashing. One row per label.
Eigen::MatrixXd embed_labels(const LabelVocabulary& vocabulary, int dim = 128);

// External provider: POSTs {"labels": [...], "dim": d} and expects
// {"vectors": [[...], ...]} with one finite vector per label.
Eigen::MatrixXd embed_labels_external(const LabelVocabulary& vocabulary, const std::string& endpoint,
                                      int dim = 128);

// k-means++ seeded Lloyd iterations until assignment fixpoint (<= 300
// rounds). Empty clusters steal the point farthest from its centroid.
Partition kmeans_partition(const Eigen::MatrixXd& embeddings, int K, std::uint64_t rng_seed);

// JSON object {label_name: category_name}; every vocabulary label must be
// mapped exactly once. One group per category, categories sorted by name.
Partition hierarchy_partition_from_text(const std::string& text, const LabelVocabulary& vocabulary,
                                        const std::string& source_name);

struct GroupFootprint {
    std::size_t instances = 0;
    std::size_t lf_count = 0;
    std::size_t label_count = 0;
    std::size_t matrix_cells = 0; // instances * lf_count, the stored-matrix extent
};

struct StackedModel {
    Partition partition;
    std::vector<LabelModelParams> sub_models; // local label indexing per group
    std::vector<std::vector<int>> lf_columns; // per group: global LF column indices, ascending
    std::vector<int> lf_to_group;             // global LF column -> group
    std::vector<int> lf_to_local;             // global LF column -> local column
    std::vector<int> label_to_group;          // global label -> group
    std::vector<int> label_to_local;          // global label -> local index
    std::vector<GroupFootprint> footprints;
    std::size_t monolithic_cells = 0; // n * m of the full matrix

    int total_labels() const { return static_cast<int>(label_to_group.size()); }
};

// lf_targets: target label per matrix column, used to assign each LF to
// its target's group. Groups with zero votes are fitted as uniform-prior
// "unsignaled" models rather than failing.
StackedModel fit_stacked(const LabelMatrix& matrix, const std::vector<int>& lf_targets,
                         const Partition& partition, const std::map<std::size_t, int>& clamped,
                         const FitConfig& cfg);

struct RoutedPrediction {
    int label = kAbstain; // global label, kAbstain when every group abstained
    double prob = 0.0;
    bool abstained = false;
    std::vector<Posterior> per_group;
    Eigen::VectorXd global_probs; // per-group posteriors scaled by 1/K; sums to 1
};

// votes: (global LF column, global label) pairs for one instance.
RoutedPrediction route_predict(const StackedModel& model,
                               const std::vector<std::pair<int, int>>& votes);

std::vector<RoutedPrediction> route_predict_all(const StackedModel& model, const LabelMatrix& matrix);

// Directory bundle: manifest.json plus one params file per group.
void save_stacked(const StackedModel& model, const LabelVocabulary& vocabulary,
                  const std::string& dir);
StackedModel load_stacked(const std::string& dir, const LabelVocabulary& vocabulary);

} // namespace lakelabel
